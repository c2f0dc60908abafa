mod common;

use jetbal::forms::{
    contact_generators, eta_form, exterior_d, horizontal_projection, iglesias_d, iglesias_dhat, interior_product,
    lie_derivative, pullback_section, reduced_horizontal_d, total_derivative, vertical_endomorphism, Form, FormsError,
    MixedForm, Mode, VectorField,
};
use jetbal::jetspace::{ContextBuilder, JetContext};
use jetbal::symex::{Coord, Expr};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{burgers, coords_of, form, full, poly};

fn dx(mu: usize) -> Coord {
    Coord::base(mu)
}

fn diagonal(n1: usize) -> JetContext {
    let base: Vec<String> = (0..n1).map(|k| format!("x{k}")).collect();
    let mut g = vec![vec![Expr::zero(); n1]; n1];
    g[0][0] = Expr::one();
    for (k, row) in g.iter_mut().enumerate().skip(1) {
        row[k] = Expr::exp(Expr::int(2) * Expr::x(k - 1)) + Expr::int(k as i64);
    }
    ContextBuilder::new(&base, &["u".to_string()]).full().metric(g).build().unwrap()
}

fn euclidean(n1: usize) -> JetContext {
    let base: Vec<String> = (0..n1).map(|k| format!("x{k}")).collect();
    ContextBuilder::new(&base, &["u".to_string()]).full().build().unwrap()
}

#[test]
fn eta_in_the_plane() {
    let ctx = full(&["t", "x"], &["y"]);
    assert_eq!(eta_form(&ctx, &[0]).unwrap(), Form::dx(1));
    assert_eq!(eta_form(&ctx, &[1]).unwrap(), -Form::dx(0));
    assert_eq!(eta_form(&ctx, &[]).unwrap(), Form::dx(0).wedge(&Form::dx(1)));
}

#[test]
fn eta_index_errors() {
    let ctx = full(&["t", "x"], &["y"]);
    assert_eq!(eta_form(&ctx, &[1, 1]), Err(FormsError::RepeatedIndex(1)));
    assert_eq!(eta_form(&ctx, &[0, 1, 0]), Err(FormsError::TooManyIndices));
    assert_eq!(eta_form(&ctx, &[2]), Err(FormsError::IndexOutOfRange(2)));
}

#[test]
fn eta_contraction_table() {
    for n1 in 2..=4 {
        for ctx in [euclidean(n1), diagonal(n1)] {
            let eta = eta_form(&ctx, &[]).unwrap();
            for mu in 0..n1 {
                let eta_mu = eta_form(&ctx, &[mu]).unwrap();
                assert_eq!(Form::dx(mu).wedge(&eta_mu), eta);
                for nu in 0..n1 {
                    if mu == nu {
                        continue;
                    }
                    let eta_mn = eta_form(&ctx, &[mu, nu]).unwrap();
                    assert_eq!(eta_mn, -eta_form(&ctx, &[nu, mu]).unwrap());
                    for sigma in 0..n1 {
                        let lhs = Form::dx(sigma).wedge(&eta_mn);
                        let rhs = if sigma == nu {
                            eta_form(&ctx, &[mu]).unwrap()
                        } else if sigma == mu {
                            -eta_form(&ctx, &[nu]).unwrap()
                        } else {
                            Form::zero()
                        };
                        assert_eq!(lhs, rhs, "n+1={n1} sigma={sigma} mu={mu} nu={nu}");
                    }
                }
            }
        }
    }
}

#[test]
fn eta_differentials_follow_the_volume() {
    for n1 in 2..=4 {
        let ctx = diagonal(n1);
        let eta = eta_form(&ctx, &[]).unwrap();
        for mu in 0..n1 {
            let eta_mu = eta_form(&ctx, &[mu]).unwrap();
            assert_eq!(exterior_d(&eta_mu), eta.scale(ctx.dlam(mu)));
            for nu in 0..n1 {
                if mu == nu {
                    continue;
                }
                let expected = &eta_mu.scale(ctx.dlam(nu)) - &eta_form(&ctx, &[nu]).unwrap().scale(ctx.dlam(mu));
                assert_eq!(exterior_d(&eta_form(&ctx, &[mu, nu]).unwrap()), expected);
            }
        }
    }
}

#[test]
fn exponential_metric_volume() {
    let g = vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::exp(Expr::int(2) * Expr::x(1))]];
    let ctx = ContextBuilder::new(&["t", "x"], &["y"]).full().metric(g).build().unwrap();
    assert_eq!(ctx.vol(), &Expr::exp(Expr::x(1)));
    let eta = eta_form(&ctx, &[]).unwrap();
    assert_eq!(exterior_d(&eta_form(&ctx, &[1]).unwrap()), eta);
    assert!(exterior_d(&eta_form(&ctx, &[0]).unwrap()).is_zero());
}

#[test]
fn d_squared_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for ctx in [full(&["t", "x"], &["y"]), burgers(), full(&["t", "x", "z"], &["u", "v"])] {
        let vars = coords_of(&ctx);
        let diffs = ctx.coordinates();
        for _ in 0..70 {
            let w = form(&mut rng, &vars, &diffs, 3);
            assert!(exterior_d(&exterior_d(&w)).is_zero());
            let hat = reduced_horizontal_d(&ctx, &w, Mode::Full);
            assert!(reduced_horizontal_d(&ctx, &hat, Mode::Full).is_zero());
            let beta = form(&mut rng, &vars, &diffs, 3);
            let phi = MixedForm::new(w.part(1), beta.part(2)).unwrap();
            assert!(iglesias_d(&iglesias_d(&phi)).is_zero());
            assert!(iglesias_dhat(&ctx, &iglesias_dhat(&ctx, &phi)).is_zero());
        }
    }
}

#[test]
fn horizontal_projection_of_dhat_minus_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for ctx in [full(&["t", "x"], &["y"]), burgers()] {
        let vars = coords_of(&ctx);
        let diffs = ctx.coordinates();
        for _ in 0..50 {
            let w = form(&mut rng, &vars, &diffs, 2);
            let diff = &reduced_horizontal_d(&ctx, &w, Mode::Full) - &exterior_d(&w);
            assert!(horizontal_projection(&ctx, &diff, Mode::Full).is_zero());
        }
    }
}

#[test]
fn projection_is_idempotent_and_kills_contact_ideal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (ctx, mode) in [(full(&["t", "x"], &["y", "w"]), Mode::Full), (burgers(), Mode::Reduced)] {
        let vars = coords_of(&ctx);
        let diffs = ctx.coordinates();
        let gens = contact_generators(&ctx);
        for _ in 0..30 {
            let w = form(&mut rng, &vars, &diffs, 2);
            let h = horizontal_projection(&ctx, &w, mode);
            assert_eq!(horizontal_projection(&ctx, &h, mode), h);
            let ideal: Form = gens.iter().map(|g| g.wedge(&form(&mut rng, &vars, &diffs, 2))).sum();
            assert!(horizontal_projection(&ctx, &ideal, mode).is_zero());
        }
    }
}

#[test]
fn projection_examples() {
    let ctx = full(&["t", "x"], &["y"]);
    assert_eq!(horizontal_projection(&ctx, &Form::dx(0), Mode::Full), Form::dx(0));
    let w = Form::dy(0) - Form::monomial(Expr::z(0, 1), &[dx(1)]);
    assert_eq!(horizontal_projection(&ctx, &w, Mode::Full), Form::monomial(Expr::z(0, 0), &[dx(0)]));
}

#[test]
fn total_derivative_examples() {
    let ctx = burgers();
    let flux = ctx.parse("y^2/2 - delta*d(y,x)").unwrap();
    let expected = ctx.parse("y*d(y,x) - delta*d(y,x,x)").unwrap();
    assert_eq!(total_derivative(&ctx, 1, &flux, Mode::Full), expected);
    assert!(total_derivative(&ctx, 0, &Expr::y(0), Mode::Reduced).is_zero());
    assert_eq!(total_derivative(&ctx, 0, &Expr::y(0), Mode::Full), Expr::z(0, 0));
}

#[test]
fn total_derivative_commutes_with_base_partials() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ctx = full(&["t", "x"], &["y", "w"]);
    let mut vars = coords_of(&ctx);
    vars.push(Expr::sin(Expr::x(0) * Expr::y(1)));
    for _ in 0..40 {
        let f = poly(&mut rng, &vars, 4, 3);
        for mu in 0..2 {
            for nu in 0..2 {
                for mode in [Mode::Full, Mode::Reduced] {
                    let a = total_derivative(&ctx, mu, &f, mode).diff(dx(nu));
                    let b = total_derivative(&ctx, mu, &f.diff(dx(nu)), mode);
                    assert_eq!(a, b);
                }
            }
        }
    }
}

#[test]
fn dhat_kills_volume_multiples() {
    let ctx = burgers();
    let eta = eta_form(&ctx, &[]).unwrap();
    let q = ctx.parse("y*d(y,x) + sin(t)").unwrap();
    assert!(reduced_horizontal_d(&ctx, &eta.scale(&q), Mode::Full).is_zero());
}

#[test]
fn interior_product_laws() {
    let ctx = full(&["t", "x"], &["y"]);
    let f0 = ctx.parse("y*d(y,t)").unwrap();
    let f1 = ctx.parse("y^2/2").unwrap();
    let eta0 = eta_form(&ctx, &[0]).unwrap();
    let eta1 = eta_form(&ctx, &[1]).unwrap();
    let w = Form::dy(0).wedge(&(&eta0.scale(&f0) + &eta1.scale(&f1)));
    let dy = VectorField::coordinate(Coord::fiber(0));
    assert_eq!(interior_product(&dy, &w), &eta0.scale(&f0) + &eta1.scale(&f1));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vars = coords_of(&ctx);
    let diffs = ctx.coordinates();
    for _ in 0..50 {
        let a = form(&mut rng, &vars, &diffs, 2).part(rng_degree(&mut rng));
        let b = form(&mut rng, &vars, &diffs, 2);
        let xi = VectorField::from_components(diffs.iter().map(|c| (*c, poly(&mut rng, &vars, 2, 1))));
        let eta_f = VectorField::from_components(diffs.iter().map(|c| (*c, poly(&mut rng, &vars, 2, 1))));
        let k = a.degree().unwrap_or(0);
        let sign = if k % 2 == 0 { Expr::one() } else { Expr::int(-1) };
        let lhs = interior_product(&xi, &a.wedge(&b));
        let rhs = &interior_product(&xi, &a).wedge(&b) + &a.wedge(&interior_product(&xi, &b)).scale(&sign);
        assert_eq!(lhs, rhs);
        let sum = &xi + &eta_f;
        assert_eq!(lie_derivative(&sum, &b), &lie_derivative(&xi, &b) + &lie_derivative(&eta_f, &b));
        let f = poly(&mut rng, &vars, 2, 1);
        let leibniz = &lie_derivative(&xi, &b).scale(&f) + &b.scale(&xi.apply(&f));
        assert_eq!(lie_derivative(&xi, &b.scale(&f)), leibniz);
    }
}

fn rng_degree(rng: &mut ChaCha8Rng) -> usize {
    rand::Rng::gen_range(rng, 0..=2)
}

#[test]
fn iglesias_examples() {
    let ctx = full(&["t", "x"], &["y"]);
    let beta = Form::monomial(Expr::y(0), &[dx(0), dx(1)]);
    let phi = MixedForm::new(Form::zero(), beta.clone()).unwrap();
    let out = iglesias_d(&phi);
    assert_eq!(out.alpha(), &beta);
    assert_eq!(out.beta(), &exterior_d(&beta));

    // d~(F + Pi) = 0 exactly when dF = Pi
    let flux = &eta_form(&ctx, &[0]).unwrap().scale(&Expr::x(0)) + &eta_form(&ctx, &[1]).unwrap().scale(&Expr::x(1));
    let good = MixedForm::new(flux.clone(), eta_form(&ctx, &[]).unwrap().scale(&Expr::int(2))).unwrap();
    assert!(iglesias_d(&good).is_zero());
    let bad = MixedForm::new(flux, eta_form(&ctx, &[]).unwrap()).unwrap();
    assert!(!iglesias_d(&bad).is_zero());

    assert_eq!(MixedForm::new(Form::dx(0), Form::dx(1)), Err(FormsError::DegreeMismatch(1, 1)));
}

#[test]
fn contact_generator_shapes() {
    let ret = ContextBuilder::new(&["t", "x"], &["y"]).ret().build().unwrap();
    assert_eq!(contact_generators(&ret), vec![Form::dy(0)]);
    let gens = contact_generators(&burgers());
    assert_eq!(gens[0], Form::dy(0) - Form::monomial(Expr::z(0, 1), &[dx(1)]));
    assert_eq!(gens.len(), 2);
    let ctx = full(&["t", "x"], &["y"]);
    let w = &contact_generators(&ctx)[0];
    let expected = Form::dy(0) - Form::monomial(Expr::z(0, 0), &[dx(0)]) - Form::monomial(Expr::z(0, 1), &[dx(1)]);
    assert_eq!(w, &expected);
}

#[test]
fn vertical_endomorphism_examples() {
    let ctx = full(&["t", "x"], &["y"]);
    let lag = ctx.parse("d(y,t)^2/2").unwrap();
    let dl = exterior_d(&Form::scalar(lag));
    let eta = eta_form(&ctx, &[]).unwrap();
    let expected = &eta.scale(&-Expr::z(0, 0).powi(2)) + &Form::dy(0).wedge(&eta_form(&ctx, &[0]).unwrap()).scale(&Expr::z(0, 0));
    assert_eq!(vertical_endomorphism(&ctx, &dl).unwrap(), expected);
    assert!(vertical_endomorphism(&ctx, &Form::dx(1)).unwrap().is_zero());
    assert_eq!(vertical_endomorphism(&burgers(), &Form::dx(1)), Err(FormsError::NotFullJet));
    assert_eq!(vertical_endomorphism(&ctx, &eta), Err(FormsError::NotDegreeOne));
}

#[test]
fn pullback_by_sections() {
    let ctx = full(&["t", "x"], &["y"]);
    let s = [ctx.parse("sin(x - t)*t + x^2").unwrap()];
    for w in contact_generators(&ctx) {
        assert!(pullback_section(&ctx, &w, &s).unwrap().is_zero());
    }
    let eta = eta_form(&ctx, &[]).unwrap();
    assert_eq!(pullback_section(&ctx, &eta, &s).unwrap(), eta);

    let b = burgers();
    let f0 = Expr::y(0);
    let f1 = b.parse("y^2/2 - delta*d(y,x)").unwrap();
    let flux = &eta_form(&b, &[0]).unwrap().scale(&f0) + &eta_form(&b, &[1]).unwrap().scale(&f1);
    let pulled = pullback_section(&b, &flux, &[Expr::int(3)]).unwrap();
    let expected = &eta_form(&b, &[0]).unwrap().scale(&Expr::int(3)) + &eta_form(&b, &[1]).unwrap().scale(&Expr::frac(9, 2));
    assert_eq!(pulled, expected);
    assert!(exterior_d(&pulled).is_zero());

    assert_eq!(pullback_section(&ctx, &eta, &[Expr::y(0)]), Err(FormsError::SectionNotBasic));
    assert_eq!(pullback_section(&ctx, &eta, &[]), Err(FormsError::SectionLength { got: 0, fields: 1 }));
}
