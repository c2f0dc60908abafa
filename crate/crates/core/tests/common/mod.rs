#![allow(dead_code)]

use jetbal::forms::Form;
use jetbal::crel::ConstitutiveRelation;
use jetbal::jetspace::{ContextBuilder, JetContext, Split};
use jetbal::symex::{Coord, Expr};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn burgers() -> JetContext {
    ContextBuilder::new(&["t", "x"], &["y"]).pairs(&[(1, 0)]).param("delta").build().unwrap()
}

pub fn full(base: &[&str], fields: &[&str]) -> JetContext {
    ContextBuilder::new(base, fields).full().build().unwrap()
}

/// Random polynomial with small rational coefficients.
pub fn poly(rng: &mut ChaCha8Rng, vars: &[Expr], terms: usize, max_deg: usize) -> Expr {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut t = Expr::frac(rng.gen_range(-5..=5), rng.gen_range(1..=3));
        for _ in 0..rng.gen_range(0..=max_deg) {
            t = t * vars[rng.gen_range(0..vars.len())].clone();
        }
        out.push(t);
    }
    Expr::add_all(out)
}

/// Random form with polynomial coefficients in `vars` over the differentials `diffs`.
pub fn form(rng: &mut ChaCha8Rng, vars: &[Expr], diffs: &[Coord], max_degree: usize) -> Form {
    let mut out = Form::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let k = rng.gen_range(0..=max_degree.min(diffs.len()));
        let mono: Vec<Coord> = (0..k).map(|_| diffs[rng.gen_range(0..diffs.len())]).collect();
        out = out + Form::monomial(poly(rng, vars, 2, 2), &mono);
    }
    out
}

pub fn coords_of(ctx: &JetContext) -> Vec<Expr> {
    ctx.coordinates().into_iter().map(Expr::coord).collect()
}

pub fn sine_gordon() -> (JetContext, ConstitutiveRelation) {
    let ctx = burgers();
    let flux = vec![vec![Expr::z(0, 1), Expr::cos(Expr::y(0))]];
    let cr = ConstitutiveRelation::general(&ctx, flux, vec![Expr::zero()]).unwrap();
    (ctx, cr)
}

pub const FLUID_FIELDS: [&str; 5] = ["rho", "v1", "v2", "v3", "theta"];

pub fn fluid_context() -> JetContext {
    ContextBuilder::new(&["t", "x1", "x2", "x3"], &FLUID_FIELDS)
        .split(&[Split::Static, Split::Space, Split::Space, Split::Space, Split::Space])
        .function("pr", 2)
        .function("nu", 2)
        .function("mu", 2)
        .function("kappa", 2)
        .function("eps", 2)
        .param("f1")
        .param("f2")
        .param("f3")
        .param("r")
        .build()
        .unwrap()
}

pub fn state(name: &str) -> Expr {
    Expr::applied(name, vec![Expr::y(0), Expr::y(4)])
}

/// Navier-Stokes-Fourier stress `t^{BA}`, `B, A` in 1..=3.
pub fn stress(b: usize, a: usize) -> Expr {
    let div = Expr::add_all((1..=3).map(|c| Expr::z(c, c)));
    let mut t = state("mu") * (Expr::z(b, a) + Expr::z(a, b));
    if a == b {
        t = t - state("pr") + state("nu") * div;
    }
    t
}

/// 5F fluid with the internal-energy balance: fields rho, v^A, theta.
pub fn fluid_5f() -> (JetContext, ConstitutiveRelation) {
    let ctx = fluid_context();
    let rho = Expr::y(0);
    let v = |a: usize| Expr::y(a);
    let eps = state("eps");
    let mut flux = Vec::new();
    let mut source = Vec::new();
    flux.push(std::iter::once(rho.clone()).chain((1..=3).map(|a| &rho * &v(a))).collect());
    source.push(Expr::zero());
    for b in 1..=3 {
        let row = std::iter::once(&rho * &v(b)).chain((1..=3).map(|a| &rho * &v(b) * v(a) - stress(b, a))).collect();
        flux.push(row);
        source.push(&rho * Expr::param(&format!("f{b}")));
    }
    let heat = |a: usize| -(state("kappa") * Expr::z(4, a));
    flux.push(std::iter::once(&rho * &eps).chain((1..=3).map(|a| &rho * &eps * v(a) + heat(a))).collect());
    let power = (1..=3).flat_map(|a| (1..=3).map(move |b| stress(b, a) * Expr::z(b, a)));
    source.push(Expr::add_all(power) + Expr::param("r"));
    let cr = ConstitutiveRelation::general(&ctx, flux, source).unwrap();
    (ctx, cr)
}
