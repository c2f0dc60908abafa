//! Randomized identity suites: the eta contraction table, nilpotency of the
//! differentials and the prolongation laws.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forms::{
    eta_form, exterior_d, horizontal_projection, iglesias_d, iglesias_dhat, lie_derivative, reduced_horizontal_d, Form,
    FormsError, MixedForm, Mode, VectorField,
};
use crate::jetspace::{
    lift_to_momentum_bundle, lift_to_source_bundle, prolong_in_frame, prolong_vector_field, ContextBuilder, Frame,
    JetContext,
};
use crate::symex::{Coord, Expr};

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Suite {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// First failing case, if any.
    pub failure: Option<String>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, passed: 0, total: 0, failure: None }
    }

    fn check(&mut self, ok: bool, case: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.failure.is_none() {
            self.failure = Some(case());
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

/// Source of the `eta_{mu...}` forms, replaceable to test the harness itself.
pub type EtaTable<'a> = &'a dyn Fn(&JetContext, &[usize]) -> Result<Form, FormsError>;

#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    pub forms: usize,
    pub projections: usize,
    pub fields: usize,
    pub lifts: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { seed: 2024, forms: 200, projections: 100, fields: 50, lifts: 20 }
    }
}

/// Random polynomial with small rational coefficients.
pub fn random_poly(rng: &mut ChaCha8Rng, vars: &[Expr], terms: usize, max_deg: usize) -> Expr {
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
pub fn random_form(rng: &mut ChaCha8Rng, vars: &[Expr], diffs: &[Coord], max_degree: usize) -> Form {
    let mut out = Form::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let k = rng.gen_range(0..=max_degree.min(diffs.len()));
        let mono: Vec<Coord> = (0..k).map(|_| diffs[rng.gen_range(0..diffs.len())]).collect();
        out = out + Form::monomial(random_poly(rng, vars, 2, 2), &mono);
    }
    out
}

/// Random projectable field satisfying the lift conditions when every field
/// admits exactly the directions `dirs`.
pub fn random_projectable(rng: &mut ChaCha8Rng, ctx: &JetContext, dirs: &[usize]) -> VectorField {
    let n1 = ctx.base_dim();
    let inside: Vec<Expr> = dirs.iter().map(|&mu| Expr::x(mu)).collect();
    let outside: Vec<Expr> = (0..n1).filter(|mu| !dirs.contains(mu)).map(Expr::x).collect();
    let mut fiber_vars = inside.clone();
    fiber_vars.extend((0..ctx.field_count()).map(Expr::y));
    let mut xi = VectorField::zero();
    for mu in 0..n1 {
        let vars = if dirs.contains(&mu) { &inside } else { &outside };
        let comp =
            if vars.is_empty() { Expr::frac(rng.gen_range(-3..=3), 2) } else { random_poly(rng, vars, 3, 2) };
        xi.set(Coord::base(mu), comp);
    }
    for i in 0..ctx.field_count() {
        xi.set(Coord::fiber(i), random_poly(rng, &fiber_vars, 3, 2));
    }
    xi
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn euclidean(n1: usize) -> JetContext {
    ContextBuilder::new(&names("x", n1), &names("u", 1)).full().build().expect("valid context")
}

/// Diagonal metric `diag(1, e^{2 x0} + 1, e^{2 x1} + 2, ...)`.
fn diagonal(n1: usize) -> JetContext {
    let mut g = alloc::vec![alloc::vec![Expr::zero(); n1]; n1];
    g[0][0] = Expr::one();
    for (k, row) in g.iter_mut().enumerate().skip(1) {
        row[k] = Expr::exp(Expr::int(2) * Expr::x(k - 1)) + Expr::int(k as i64);
    }
    ContextBuilder::new(&names("x", n1), &names("u", 1)).full().metric(g).build().expect("valid metric")
}

/// `dx^s ^ eta_{mu nu}` in `{eta_mu, -eta_nu, 0}` and `d eta_mu = dlambda_mu eta`
/// for n+1 in 2..=4, Euclidean and curved diagonal.
pub fn eta_table(eta: EtaTable<'_>) -> Suite {
    let mut s = Suite::new("eta table");
    for n1 in 2..=4 {
        for (label, ctx) in [("euclidean", euclidean(n1)), ("diagonal", diagonal(n1))] {
            let (Ok(vol), Ok(singles)) =
                (eta(&ctx, &[]), (0..n1).map(|mu| eta(&ctx, &[mu])).collect::<Result<Vec<_>, _>>())
            else {
                s.check(false, || format!("{label} n+1={n1}: eta undefined"));
                continue;
            };
            for mu in 0..n1 {
                s.check(exterior_d(&singles[mu]) == vol.scale(ctx.dlam(mu)), || {
                    format!("{label} n+1={n1}: d eta_{mu}")
                });
                for nu in (0..n1).filter(|&nu| nu != mu) {
                    let Ok(pair) = eta(&ctx, &[mu, nu]) else {
                        s.check(false, || format!("{label} n+1={n1}: eta_{mu}{nu} undefined"));
                        continue;
                    };
                    for sigma in 0..n1 {
                        let expected = if sigma == nu {
                            singles[mu].clone()
                        } else if sigma == mu {
                            -singles[nu].clone()
                        } else {
                            Form::zero()
                        };
                        s.check(Form::dx(sigma).wedge(&pair) == expected, || {
                            format!("{label} n+1={n1}: dx{sigma} ^ eta_{mu}{nu}")
                        });
                    }
                }
            }
        }
    }
    s
}

fn form_contexts() -> Vec<JetContext> {
    let build = |b: ContextBuilder| b.build().expect("valid context");
    alloc::vec![
        build(ContextBuilder::new(&["t", "x"], &["y"]).full()),
        build(ContextBuilder::new(&["t", "x"], &["y"]).pairs(&[(1, 0)])),
        build(ContextBuilder::new(&["t", "x", "z"], &["u", "v"]).full()),
    ]
}

fn coordinate_exprs(ctx: &JetContext) -> Vec<Expr> {
    ctx.coordinates().into_iter().map(Expr::coord).collect()
}

/// `d^2 = dhat^2 = dtilde^2 = 0` on `count` random forms each.
pub fn nilpotency(seed: u64, count: usize) -> [Suite; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Suite::new("d^2 = 0");
    let mut hat = Suite::new("dhat^2 = 0");
    let mut tilde = Suite::new("dtilde^2 = 0");
    let ctxs = form_contexts();
    for k in 0..count {
        let ctx = &ctxs[k % ctxs.len()];
        let vars = coordinate_exprs(ctx);
        let diffs = ctx.coordinates();
        let w = random_form(&mut rng, &vars, &diffs, 3);
        d.check(exterior_d(&exterior_d(&w)).is_zero(), || format!("form {k}"));
        let once = reduced_horizontal_d(ctx, &w, Mode::Full);
        hat.check(reduced_horizontal_d(ctx, &once, Mode::Full).is_zero(), || format!("form {k}"));
        let beta = random_form(&mut rng, &vars, &diffs, 3);
        let phi = MixedForm::new(w.part(1), beta.part(2)).expect("degrees n+1 apart");
        let ok = iglesias_d(&iglesias_d(&phi)).is_zero() && iglesias_dhat(ctx, &iglesias_dhat(ctx, &phi)).is_zero();
        tilde.check(ok, || format!("form {k}"));
    }
    [d, hat, tilde]
}

/// `h0((dhat - d) nu) = 0` on `count` random forms.
pub fn projection(seed: u64, count: usize) -> Suite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Suite::new("h0(dhat - d) = 0");
    let ctxs = form_contexts();
    for k in 0..count {
        let ctx = &ctxs[k % ctxs.len()];
        let w = random_form(&mut rng, &coordinate_exprs(ctx), &ctx.coordinates(), 2);
        let diff = &reduced_horizontal_d(ctx, &w, Mode::Full) - &exterior_d(&w);
        s.check(horizontal_projection(ctx, &diff, Mode::Full).is_zero(), || format!("form {k}"));
    }
    s
}

fn field_contexts() -> Vec<(JetContext, Vec<usize>)> {
    let build = |b: ContextBuilder| b.build().expect("valid context");
    alloc::vec![
        (build(ContextBuilder::new(&["t", "x"], &["y", "w"]).full()), alloc::vec![0, 1]),
        (build(ContextBuilder::new(&["t", "x"], &["y"]).pairs(&[(1, 0)])), alloc::vec![1]),
        (build(ContextBuilder::new(&["t", "x", "z"], &["u", "v"]).directions(&[1, 2])), alloc::vec![1, 2]),
    ]
}

/// `[xi, eta]^1 = [xi^1, eta^1]` for `count` random projectable pairs, and the
/// holonomic-frame prolongation agreeing with the coordinate one.
pub fn prolongation(seed: u64, count: usize) -> [Suite; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hom = Suite::new("prolongation homomorphism");
    let mut frame = Suite::new("torsion-free frame prolongation");
    let ctxs = field_contexts();
    for k in 0..count {
        let (ctx, dirs) = &ctxs[k % ctxs.len()];
        let a = random_projectable(&mut rng, ctx, dirs);
        let b = random_projectable(&mut rng, ctx, dirs);
        let ok = match (
            prolong_vector_field(ctx, &a.bracket(&b)),
            prolong_vector_field(ctx, &a),
            prolong_vector_field(ctx, &b),
        ) {
            (Ok(lhs), Ok(pa), Ok(pb)) => lhs == pa.bracket(&pb),
            _ => false,
        };
        hom.check(ok, || format!("pair {k}"));
        let holonomic = Frame::holonomic(ctx);
        let ok = matches!(
            (prolong_in_frame(ctx, &a, &holonomic, dirs), prolong_vector_field(ctx, &a)),
            (Ok(x), Ok(y)) if x == y
        );
        frame.check(ok, || format!("field {k}"));
    }
    [hom, frame]
}

/// Momentum-bundle lift moves the canonical form by `-d alpha`; the
/// source-bundle lift preserves `q_i dy^i ^ eta`.
pub fn dual_lifts(seed: u64, count: usize) -> [Suite; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut momentum = Suite::new("momentum lift");
    let mut source = Suite::new("source lift");
    let curved = ContextBuilder::new(&["t", "x"], &["u", "v"])
        .full()
        .metric(alloc::vec![
            alloc::vec![Expr::one(), Expr::zero()],
            alloc::vec![Expr::zero(), (Expr::one() + Expr::x(0).powi(2)).powi(2)],
        ])
        .build()
        .expect("valid metric");
    let flat = ContextBuilder::new(&["t", "x"], &["u", "v"]).full().build().expect("valid context");
    let ctxs = [flat, curved];
    for k in 0..count {
        let ctx = &ctxs[k % 2];
        let (n1, m) = (ctx.base_dim(), ctx.field_count());
        let eta = eta_form(ctx, &[]).expect("volume form");
        let etas: Vec<Form> = (0..n1).map(|mu| eta_form(ctx, &[mu]).expect("direction in range")).collect();
        let mut theta = eta.scale(&Expr::coord(Coord::MomentumScalar));
        for (mu, e) in etas.iter().enumerate() {
            for i in 0..m {
                let p = Expr::coord(Coord::Momentum(mu as u16, i as u16));
                theta = &theta + &Form::dy(i).wedge(e).scale(&p);
            }
        }
        let xi = random_projectable(&mut rng, ctx, &[0, 1]);
        let vars = [Expr::x(0), Expr::x(1), Expr::y(0), Expr::y(1)];
        let alpha: Vec<Expr> = (0..n1).map(|_| random_poly(&mut rng, &vars, 2, 2)).collect();
        let alpha_form: Form = etas.iter().zip(&alpha).map(|(e, a)| e.scale(a)).sum();
        let ok = lift_to_momentum_bundle(ctx, &xi, &alpha)
            .map(|l| lie_derivative(&l, &theta) == -exterior_d(&alpha_form))
            .unwrap_or(false);
        momentum.check(ok, || format!("field {k}"));
        let omega: Form =
            (0..m).map(|i| Form::dy(i).wedge(&eta).scale(&Expr::coord(Coord::Source(i as u16)))).sum();
        let ok = lift_to_source_bundle(ctx, &xi).map(|l| lie_derivative(&l, &omega).is_zero()).unwrap_or(false);
        source.check(ok, || format!("field {k}"));
    }
    [momentum, source]
}

/// Every suite with the given options and eta source.
pub fn run(opts: &Options, eta: EtaTable<'_>) -> Vec<Suite> {
    let mut out = alloc::vec![eta_table(eta)];
    out.extend(nilpotency(opts.seed, opts.forms));
    out.push(projection(opts.seed + 1, opts.projections));
    out.extend(prolongation(opts.seed + 2, opts.fields));
    out.extend(dual_lifts(opts.seed + 3, opts.lifts));
    out
}
