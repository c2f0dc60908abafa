use std::collections::BTreeMap;

use jetbal::symex::{
    differentiate, equivalent, evaluate, parse, render, substitute, Coord, EvalError, Equivalence, Expr, PlainNames,
    PlainScope, Rational,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(text: &str) -> Expr {
    parse(text, &PlainScope::default()).unwrap()
}

fn x(mu: usize) -> Coord {
    Coord::base(mu)
}

fn y(i: usize) -> Coord {
    Coord::fiber(i)
}

#[test]
fn grammar_exercise() {
    let e = p("y0^2/2 - delta*d(y0,x1)");
    let expected = Expr::y(0).powi(2) * Expr::frac(1, 2) - Expr::param("delta") * Expr::z(0, 1);
    assert_eq!(e, expected);
    assert_eq!(p("d(y0,x1,x0)"), Expr::coord(Coord::Jet2(0, 0, 1)));
}

#[test]
fn parse_errors_carry_position() {
    let err = parse("y0 + * 2", &PlainScope::default()).unwrap_err();
    assert_eq!(err.pos, 5);
    let err = parse("foo(y0)", &PlainScope::default()).unwrap_err();
    assert_eq!(err.pos, 0);
}

#[test]
fn burgers_flux_partials() {
    let f = p("y0^2/2 - delta*d(y0,x1)");
    assert_eq!(differentiate(&f, y(0)), Expr::y(0));
    assert_eq!(differentiate(&f, Coord::jet(0, 1)), -Expr::param("delta"));
    assert_eq!(differentiate(&f, x(0)), Expr::zero());
}

fn random_cubic(rng: &mut ChaCha8Rng) -> Expr {
    let vars = [Expr::x(0), Expr::x(1), Expr::y(0)];
    let mut terms = Vec::new();
    for _ in 0..6 {
        let mut t = Expr::frac(rng.gen_range(-9..10), rng.gen_range(1..5));
        for _ in 0..rng.gen_range(0..=3) {
            t = t * vars[rng.gen_range(0..3)].clone();
        }
        terms.push(t);
    }
    Expr::add_all(terms)
}

#[test]
fn derivative_matches_central_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = BTreeMap::new();
    for _ in 0..20 {
        let e = random_cubic(&mut rng);
        let point: BTreeMap<Coord, f64> =
            [x(0), x(1), y(0)].into_iter().map(|c| (c, rng.gen_range(-2.0..2.0))).collect();
        for c in [x(0), x(1), y(0)] {
            let exact = evaluate(&differentiate(&e, c), &point, &params).unwrap();
            let h = 1e-5;
            let mut up = point.clone();
            *up.get_mut(&c).unwrap() += h;
            let mut dn = point.clone();
            *dn.get_mut(&c).unwrap() -= h;
            let fd = (evaluate(&e, &up, &params).unwrap() - evaluate(&e, &dn, &params).unwrap()) / (2.0 * h);
            assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0), "{e}: {exact} vs {fd}");
        }
    }
}

#[test]
fn substitution_examples() {
    let lam = Expr::param("lam");
    let b: BTreeMap<Coord, Expr> = [(y(0), lam.clone() + Expr::one())].into();
    assert_eq!(substitute(&Expr::y(0).powi(2), &b), lam.powi(2) + lam.clone() * Expr::int(2) + Expr::one());
    let e = p("y0*x1 + sin(y0)");
    assert_eq!(substitute(&e, &BTreeMap::new()), e);
    // pullback of z_x along s = sin(x - t)
    let s = Expr::sin(Expr::x(1) - Expr::x(0));
    let zx: BTreeMap<Coord, Expr> = [(Coord::jet(0, 1), s.diff(x(1)))].into();
    assert_eq!(substitute(&Expr::z(0, 1), &zx), Expr::cos(Expr::x(1) - Expr::x(0)));
}

#[test]
fn evaluation_examples() {
    let none = BTreeMap::new();
    assert_eq!(evaluate(&p("sin(0)"), &none, &BTreeMap::new()).unwrap(), 0.0);
    let at: BTreeMap<Coord, f64> = [(y(0), 3.0)].into();
    assert_eq!(evaluate(&p("y0^2/2"), &at, &BTreeMap::new()).unwrap(), 4.5);
    assert!(matches!(evaluate(&p("ln(-1)"), &none, &BTreeMap::new()), Err(EvalError::Domain(_))));
    assert!(matches!(evaluate(&p("y0"), &none, &BTreeMap::new()), Err(EvalError::Unbound(_))));
}

#[test]
fn equivalence_examples() {
    assert_eq!(equivalent(&p("(y0+1)^2"), &p("y0^2 + 2*y0 + 1")), Equivalence::Structural);
    assert_eq!(equivalent(&p("sin(y0)^2 + cos(y0)^2"), &p("1")), Equivalence::Probabilistic);
    assert_eq!(equivalent(&p("y0"), &p("y0 + 1")), Equivalence::NotEqual);
}

#[test]
fn exact_rationals() {
    assert_eq!(p("0.25"), Expr::frac(1, 4));
    assert_eq!(p("6/4"), Expr::frac(3, 2));
    assert_eq!(p("4^(1/2)"), Expr::int(2));
    assert_eq!(p("8^(2/3)*y0"), Expr::int(4) * Expr::y(0));
    assert_eq!(Rational::new(2, 4), Rational::new(1, 2));
    assert_eq!(p("exp(y0)*exp(-y0)"), Expr::one());
    assert_eq!(p("ln(exp(y0^2))"), p("y0^2"));
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0usize..2).prop_map(Expr::x),
        (0usize..2).prop_map(Expr::y),
        (0usize..2, 0usize..2).prop_map(|(i, m)| Expr::z(i, m)),
        prop_oneof![Just("a"), Just("b")].prop_map(Expr::param),
        (-5i64..6, 1i64..4).prop_map(|(n, d)| Expr::frac(n, d)),
    ]
}

fn expression() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 0i64..3).prop_map(|(a, k)| a.powi(k)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.clone().prop_map(Expr::exp),
            inner.clone().prop_map(|a| Expr::ln(Expr::y(0).powi(2) + Expr::one() + a.powi(2))),
            inner.clone().prop_map(|a| (a.powi(2) + Expr::one()).recip()),
        ]
    })
}

fn rebuild(e: &Expr) -> Expr {
    e.map_symbols(&|_| None)
}

fn point(seed: u64) -> (BTreeMap<Coord, f64>, BTreeMap<String, f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt = BTreeMap::new();
    for i in 0..2 {
        pt.insert(x(i), rng.gen_range(0.2..0.9));
        pt.insert(y(i), rng.gen_range(0.2..0.9));
        for m in 0..2 {
            pt.insert(Coord::jet(i, m), rng.gen_range(0.2..0.9));
        }
    }
    let pars = [("a".to_string(), rng.gen_range(0.2..0.9)), ("b".to_string(), rng.gen_range(0.2..0.9))].into();
    (pt, pars)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_is_idempotent(e in expression()) {
        let once = rebuild(&e);
        prop_assert_eq!(rebuild(&once), once.clone());
        prop_assert_eq!(once, e);
    }

    #[test]
    fn render_parse_round_trip(e in expression()) {
        let text = render(&e, &PlainNames);
        let back = parse(&text, &PlainScope::default()).unwrap();
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn leibniz_and_chain_rules(a in expression(), b in expression(), seed in 0u64..1000) {
        let c = y(0);
        let prod = (&a * &b).diff(c);
        let leibniz = a.diff(c) * &b + &a * b.diff(c);
        let chain = Expr::sin(a.clone()).diff(c);
        let chain_expected = Expr::cos(a.clone()) * a.diff(c);
        prop_assert_eq!(chain, chain_expected);
        let (pt, pars) = point(seed);
        if let (Ok(u), Ok(v)) = (prod.eval(&pt, &pars), leibniz.eval(&pt, &pars)) {
            prop_assert!((u - v).abs() <= 1e-8 * u.abs().max(1.0), "{} vs {}", u, v);
        }
    }

    #[test]
    fn derivative_agrees_with_finite_difference(e in expression(), seed in 0u64..1000) {
        let (pt, pars) = point(seed);
        let c = y(0);
        let h = 1e-6;
        let mut up = pt.clone();
        *up.get_mut(&c).unwrap() += h;
        let mut dn = pt.clone();
        *dn.get_mut(&c).unwrap() -= h;
        if let (Ok(d), Ok(u), Ok(l)) = (e.diff(c).eval(&pt, &pars), e.eval(&up, &pars), e.eval(&dn, &pars)) {
            let fd = (u - l) / (2.0 * h);
            prop_assume!(d.abs() < 1e6);
            prop_assert!((d - fd).abs() <= 1e-4 * d.abs().max(1.0), "{}: {} vs {}", e, d, fd);
        }
    }
}
