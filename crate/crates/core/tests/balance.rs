mod common;

use std::collections::BTreeMap;

use jetbal::balance::{
    classify, euler_lagrange, evaluate_on_grid, BalanceSystem, generate, is_trivial, check_div_equivalence, pullback_residuals, routes_agree,
    verify_section, BalanceError, BalanceLaw, Boundary, Grid, GridSection, NumericSection, Restriction, VerifyOptions,
};
use jetbal::crel::ConstitutiveRelation;
use jetbal::jetspace::{ContextBuilder, JetContext};
use jetbal::symex::{Coord, Expr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{burgers, fluid_5f, full, poly, sine_gordon};

fn burgers_cr(ctx: &JetContext) -> ConstitutiveRelation {
    let f = vec![vec![Expr::y(0), ctx.parse("y^2/2 - delta*d(y,x)").unwrap()]];
    ConstitutiveRelation::general(ctx, f, vec![Expr::zero()]).unwrap()
}

fn curved() -> JetContext {
    ContextBuilder::new(&["t", "x"], &["u", "v"])
        .metric(vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::exp(Expr::x(0) * Expr::int(2))]])
        .build()
        .unwrap()
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn burgers_residual() {
    let ctx = burgers();
    let cr = burgers_cr(&ctx);
    let sys = generate(&cr);
    let expected = Expr::z(0, 0) + Expr::y(0) * Expr::z(0, 1) - Expr::param("delta") * Expr::z2(0, 1, 1);
    assert_eq!(sys.residual(0), &expected);
    assert!(routes_agree(&cr));
}

#[test]
fn sine_gordon_residual() {
    let (_, cr) = sine_gordon();
    let sys = generate(&cr);
    let honest = Expr::z2(0, 0, 1) - Expr::sin(Expr::y(0)) * Expr::z(0, 1);
    assert_eq!(sys.residual(0), &honest);
    assert!(routes_agree(&cr));

    // generic section: s_tx - sin(s) s_x
    let s = Expr::sin(Expr::x(0)) * Expr::x(1).powi(2);
    let pulled = pullback_residuals(&sys, &[s.clone()]).unwrap();
    let st = s.diff(Coord::base(0));
    let expected = st.diff(Coord::base(1)) - Expr::sin(s.clone()) * s.diff(Coord::base(1));
    assert_eq!(pulled[0], expected);

    // sections with s_x = 1 reproduce s_tx - sin(s)
    let s = Expr::x(1) + Expr::x(0).powi(3);
    let pulled = pullback_residuals(&sys, &[s.clone()]).unwrap();
    let target = s.diff(Coord::base(0)).diff(Coord::base(1)) - Expr::sin(s);
    assert_eq!(pulled[0], target);
}

#[test]
fn fluid_mass_balance() {
    let (ctx, cr) = fluid_5f();
    let sys = generate(&cr);
    let continuity = ctx.parse("d(rho;t) + d(rho;x1)*v1 + rho*d(v1,x1) + d(rho;x2)*v2 + rho*d(v2,x2) + d(rho;x3)*v3 + rho*d(v3,x3)");
    assert_eq!(sys.residual(0), &continuity.unwrap());
    assert!(routes_agree(&cr));
}

#[test]
fn euler_lagrange_examples() {
    let ctx = full(&["t", "x"], &["y"]);
    let wave = ctx.parse("(d(y,t)^2 - d(y,x)^2)/2").unwrap();
    let el = euler_lagrange(&ctx, &wave);
    assert_eq!(el.residual(0), &(Expr::z2(0, 0, 0) - Expr::z2(0, 1, 1)));
    let pot = ctx.parse("y^3 + t*y").unwrap();
    assert_eq!(euler_lagrange(&ctx, &pot).residual(0), &ctx.parse("-3*y^2 - t").unwrap());
}

#[test]
fn generated_lagrangian_systems_match_euler_lagrange() {
    let ctxs = [
        full(&["t", "x"], &["u", "v", "w"]),
        curved(),
        ContextBuilder::new(&["t", "x", "s"], &["u", "v"]).directions(&[1, 2]).build().unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for ctx in &ctxs {
        let fields: Vec<Expr> = (0..ctx.field_count()).map(Expr::y).chain((0..ctx.base_dim()).map(Expr::x)).collect();
        let jets: Vec<Expr> = ctx.pairs().map(|(mu, i)| Expr::z(i, mu)).collect();
        for _ in 0..20 {
            let l = poly(&mut rng, &fields, 3, 3) * poly(&mut rng, &jets, 2, 2) + poly(&mut rng, &fields, 3, 3);
            let cr = ConstitutiveRelation::lagrangian(ctx, l.clone()).unwrap();
            assert_eq!(generate(&cr).residuals(), euler_lagrange(ctx, &l).residuals());
            assert!(routes_agree(&cr));
        }
    }
}

#[test]
fn div_equivalence() {
    let ctx = full(&["t", "x"], &["y"]);
    let q = vec![Expr::y(0).powi(2), Expr::zero()];
    let trivial = BalanceLaw { flux: q.clone(), source: Expr::y(0) * Expr::z(0, 0) * Expr::int(2) };
    assert!(is_trivial(&ctx, &trivial, &q).unwrap());
    let wrong = BalanceLaw { flux: q.clone(), source: Expr::y(0) * Expr::z(0, 0) };
    assert!(!is_trivial(&ctx, &wrong, &q).unwrap());

    let ret = ContextBuilder::new(&["t", "x"], &["y"]).ret().build().unwrap();
    let err = is_trivial(&ret, &trivial, &q).unwrap_err();
    assert!(matches!(err, BalanceError::DivRestriction { case: Restriction::Ret, mu: 0, field: 0, .. }));
    assert!(err.to_string().contains("cannot depend on y"));

    let spatial = burgers();
    let err = is_trivial(&spatial, &trivial, &q).unwrap_err();
    assert!(matches!(err, BalanceError::DivRestriction { case: Restriction::SpatialJets, .. }));
    let timelike = ContextBuilder::new(&["t", "x"], &["y"]).directions(&[0]).build().unwrap();
    let qx = vec![Expr::zero(), Expr::y(0)];
    let err = is_trivial(&timelike, &BalanceLaw { flux: qx.clone(), source: Expr::z(0, 1) }, &qx).unwrap_err();
    assert!(matches!(err, BalanceError::DivRestriction { case: Restriction::TimeJets, .. }));

    let zero = vec![Expr::zero(); 2];
    let b = BalanceLaw { flux: vec![Expr::y(0), Expr::z(0, 1)], source: Expr::x(0) };
    assert!(check_div_equivalence(&ctx, &b, &b.clone(), &zero).unwrap());
    let mut other = b.clone();
    other.source = Expr::x(1);
    assert!(!check_div_equivalence(&ctx, &b, &other, &zero).unwrap());

    // curved volume: the witness divergence carries dlam
    let ctx = curved();
    let q = vec![Expr::y(0) * Expr::y(1), Expr::y(1)];
    let div = Expr::z(0, 0) * Expr::y(1) + Expr::y(0) * Expr::z(1, 0) + Expr::z(1, 1) + Expr::y(0) * Expr::y(1);
    assert!(is_trivial(&ctx, &BalanceLaw { flux: q.clone(), source: div }, &q).unwrap());
}

#[test]
fn div_equivalent_systems_share_residuals() {
    let ctx = full(&["t", "x"], &["y"]);
    let base = ConstitutiveRelation::general(
        &ctx,
        vec![vec![Expr::y(0), Expr::y(0).powi(2) * Expr::frac(1, 2)]],
        vec![Expr::zero()],
    )
    .unwrap();
    let q = [Expr::sin(Expr::y(0)), Expr::x(0) * Expr::y(0)];
    let shifted = ConstitutiveRelation::general(
        &ctx,
        vec![vec![Expr::y(0) + &q[0], Expr::y(0).powi(2) * Expr::frac(1, 2) + &q[1]]],
        vec![Expr::cos(Expr::y(0)) * Expr::z(0, 0) + Expr::x(0) * Expr::z(0, 1)],
    )
    .unwrap();
    assert!(check_div_equivalence(&ctx, &BalanceLaw::of_field(&base, 0), &BalanceLaw::of_field(&shifted, 0), &q).unwrap());
    let grid = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![24, 24], Boundary::OneSided).unwrap();
    let s = Expr::sin(Expr::x(0) + Expr::x(1) * Expr::int(2));
    let sampled = GridSection::sample(grid, &[s], &BTreeMap::new()).unwrap();
    let opts = VerifyOptions::default();
    let a = verify_section(&generate(&base), &NumericSection::Sampled(sampled.clone()), &opts).unwrap();
    let b = verify_section(&generate(&shifted), &NumericSection::Sampled(sampled), &opts).unwrap();
    assert!((a.max_abs - b.max_abs).abs() < 1e-9);
    assert!(a.error_estimate.unwrap() < 1e-2);
}

#[test]
fn closed_form_sections() {
    let ctx = burgers();
    let sys = generate(&burgers_cr(&ctx));
    let grid = Grid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![9, 9], Boundary::OneSided).unwrap();
    let s = Expr::x(1) * (Expr::one() + Expr::x(0)).recip();
    let opts = VerifyOptions { order: 2, params: params(&[("delta", 0.0)]) };
    let report = verify_section(&sys, &NumericSection::Closed { section: vec![s], grid: grid.clone() }, &opts).unwrap();
    assert!(report.max_abs < 1e-12, "{report:?}");
    assert_eq!(report.error_estimate, None);
    assert_eq!(report.points, 81);

    let random = Expr::x(0).powi(2) + Expr::x(1) * Expr::int(3);
    let report = verify_section(&sys, &NumericSection::Closed { section: vec![random], grid: grid.clone() }, &opts).unwrap();
    assert!(report.max_abs > 0.1);

    let wave = full(&["t", "x"], &["y"]);
    let l = wave.parse("(d(y,t)^2 - d(y,x)^2)/2").unwrap();
    let sys = euler_lagrange(&wave, &l);
    let s = Expr::sin(Expr::x(1) - Expr::x(0));
    assert!(pullback_residuals(&sys, &[s.clone()]).unwrap()[0].is_zero());
    let report = verify_section(&sys, &NumericSection::Closed { section: vec![s], grid }, &VerifyOptions::default()).unwrap();
    assert_eq!(report.max_abs, 0.0);

    let bad = Grid::new(vec![0.0], vec![1.0], vec![4], Boundary::Periodic);
    assert_eq!(bad.unwrap_err(), BalanceError::GridTooSmall);
    let unbound = verify_section(
        &generate(&burgers_cr(&ctx)),
        &NumericSection::Closed { section: vec![Expr::x(1).powi(2)], grid: Grid::new(vec![0.0; 2], vec![1.0; 2], vec![8, 8], Boundary::OneSided).unwrap() },
        &VerifyOptions::default(),
    );
    assert!(matches!(unbound, Err(BalanceError::Eval(_))));
}

/// Max pointwise gap between stencil residuals and exact residuals on the grid.
fn stencil_error(sys: &BalanceSystem, s: &Expr, grid: Grid, order: usize, params: &BTreeMap<String, f64>) -> f64 {
    let sampled = GridSection::sample(grid.clone(), &[s.clone()], params).unwrap();
    let approx = evaluate_on_grid(sys.residuals(), &sampled, order, params).unwrap();
    let exact = pullback_residuals(sys, &[s.clone()]).unwrap();
    let names: Vec<Coord> = (0..grid.dims()).map(Coord::base).collect();
    (0..grid.len())
        .map(|flat| {
            let point: BTreeMap<Coord, f64> = names.iter().copied().zip(grid.point(flat)).collect();
            (exact[0].eval(&point, params).unwrap() - approx[0][flat]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampled_sections_converge_at_stencil_order() {
    let ctx = full(&["t", "x"], &["y"]);
    let heat = ConstitutiveRelation::general(&ctx, vec![vec![Expr::y(0), -Expr::z(0, 1)]], vec![Expr::zero()]).unwrap();
    let sys = generate(&heat);
    let tau = 2.0 * std::f64::consts::PI;
    let s = Expr::sin(Expr::x(1)) * Expr::cos(Expr::x(0));
    let periodic = |n: usize| Grid::new(vec![0.0, 0.0], vec![tau, tau], vec![n, n], Boundary::Periodic).unwrap();
    let none = BTreeMap::new();
    let r2 = stencil_error(&sys, &s, periodic(32), 2, &none) / stencil_error(&sys, &s, periodic(64), 2, &none);
    assert!((3.5..4.5).contains(&r2), "order 2 ratio {r2}");
    let r4 = stencil_error(&sys, &s, periodic(32), 4, &none) / stencil_error(&sys, &s, periodic(64), 4, &none);
    assert!((14.0..18.0).contains(&r4), "order 4 ratio {r4}");

    // a travelling wave solves the wave equation, and the sampled residual shrinks with h
    let wave = euler_lagrange(&ctx, &ctx.parse("(d(y,t)^2 - d(y,x)^2)/2").unwrap());
    // unequal steps so the two truncation errors do not cancel
    let travelling = Expr::sin(Expr::x(1) - Expr::x(0));
    let run = |n: usize| {
        let grid = Grid::new(vec![0.0, 0.0], vec![tau, tau], vec![n, 2 * n], Boundary::Periodic).unwrap();
        let sampled = GridSection::sample(grid, &[travelling.clone()], &none).unwrap();
        let rep = verify_section(&wave, &NumericSection::Sampled(sampled), &VerifyOptions::default()).unwrap();
        assert!(rep.error_estimate.is_some());
        rep.max_abs
    };
    let ratio = run(32) / run(64);
    assert!((3.5..4.5).contains(&ratio), "wave ratio {ratio}");

    // one-sided edges keep the order
    let burgers = burgers();
    let sys = generate(&burgers_cr(&burgers));
    let p = params(&[("delta", 0.05)]);
    let s = Expr::sin(Expr::x(1)) * (Expr::one() + Expr::x(0)).recip();
    let errs: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&n| {
            let grid = Grid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![n, n], Boundary::OneSided).unwrap();
            stencil_error(&sys, &s, grid, 2, &p)
        })
        .collect();
    assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");

    let grid = Grid::new(vec![0.0; 2], vec![1.0; 2], vec![8, 8], Boundary::Periodic).unwrap();
    let sampled = GridSection::sample(grid, &[Expr::x(0)], &none).unwrap();
    let opts = VerifyOptions { order: 3, params: none.clone() };
    assert_eq!(verify_section(&sys, &NumericSection::Sampled(sampled), &opts).unwrap_err(), BalanceError::StencilOrder);
}

fn point(ctx: &JetContext, rng: &mut ChaCha8Rng) -> BTreeMap<Coord, f64> {
    ctx.coordinates().into_iter().map(|c| (c, rng.gen_range(-1.0..1.0))).collect()
}

#[test]
fn classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ctx = burgers();
    let p = point(&ctx, &mut rng);
    let t = classify(&burgers_cr(&ctx), &p, &params(&[("delta", 0.1)])).unwrap();
    assert_eq!((t.hyperbolic, t.parabolic, t.stationary), (0, 1, 0));
    assert_eq!(t.regular, Some(true));
    assert_eq!((t.k2.len(), t.k1.len(), t.k.len()), (1, 1, 0));

    let two = full(&["t", "x"], &["u", "v"]);
    let cr = ConstitutiveRelation::general(
        &two,
        vec![vec![Expr::z(0, 0), Expr::zero()], vec![Expr::y(1), Expr::zero()]],
        vec![Expr::zero(); 2],
    )
    .unwrap();
    let t = classify(&cr, &point(&two, &mut rng), &BTreeMap::new()).unwrap();
    assert_eq!((t.hyperbolic, t.parabolic, t.stationary), (1, 1, 0));
    assert_eq!(t.regular, None);

    let zero = ConstitutiveRelation::general(&two, vec![vec![Expr::zero(); 2]; 2], vec![Expr::y(0), Expr::y(1)]).unwrap();
    let t = classify(&zero, &point(&two, &mut rng), &BTreeMap::new()).unwrap();
    assert_eq!((t.hyperbolic, t.parabolic, t.stationary), (0, 0, 2));

    let bad = ConstitutiveRelation::general(&two, vec![vec![Expr::zero(), Expr::z(0, 0)], vec![Expr::zero(); 2]], vec![Expr::zero(); 2]).unwrap();
    assert!(matches!(classify(&bad, &point(&two, &mut rng), &BTreeMap::new()), Err(BalanceError::TimeDerivativeOutsideFlux { field: 0, .. })));
}

#[test]
fn classification_index_sums_to_field_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ctx = full(&["t", "x"], &["u", "v", "w"]);
    let ys: Vec<Expr> = (0..3).map(Expr::y).collect();
    let zt: Vec<Expr> = (0..3).map(|i| Expr::z(i, 0)).collect();
    for k in 0..50 {
        let flux = (0..3)
            .map(|i| {
                // mix of y-only, zt-linear and vanishing time fluxes
                let f0 = match (k + i) % 3 {
                    0 => poly(&mut rng, &ys, 2, 2),
                    1 => poly(&mut rng, &zt, 2, 1) + poly(&mut rng, &ys, 1, 2),
                    _ => Expr::zero(),
                };
                vec![f0, poly(&mut rng, &ys, 2, 2)]
            })
            .collect();
        let cr = ConstitutiveRelation::general(&ctx, flux, vec![Expr::zero(); 3]).unwrap();
        let t = classify(&cr, &point(&ctx, &mut rng), &BTreeMap::new()).unwrap();
        assert_eq!(t.hyperbolic + t.parabolic + t.stationary, 3);
        assert_eq!(t.k2.len(), 3 - t.hyperbolic);
        assert_eq!(t.k.len(), t.stationary);
        assert_eq!(t.k1.len(), t.parabolic);
    }
}
