//! Rational extended thermodynamics in dual variables.
//!
//! Primal data live on the state space `U` with coordinates `u^i` (the fiber
//! coordinates of a RET context). Dual data use the Lagrange-Liu multipliers
//! `lambda^i`, again stored as fiber coordinates of a context whose fields are
//! named `lam1..lamm`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::balance::{BalanceSystem, Origin};
use crate::jetspace::{vanishes, ContextBuilder, ContextError, JetContext};
use crate::linalg;
use crate::symex::{equivalent, polynomial_coefficients, Coord, EvalError, Expr};

mod sampling;

pub use sampling::{DomainSampler, MIN_SAMPLES};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 100;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RetError {
    #[error("RET data need a context without jet coordinates")]
    NotRet,
    #[error("{0} may depend on the fields only")]
    NotOnFields(&'static str),
    #[error("{what} has {got} entries, expected {expected}")]
    Shape { what: &'static str, got: usize, expected: usize },
    #[error("singular Jacobian at Newton step {0}")]
    Singular(usize),
    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Hessian of the four-potential is not symmetric at ({mu}, {i}, {j})")]
    Asymmetric { mu: usize, i: usize, j: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Context(#[from] ContextError),
}

fn on_fields(e: &Expr) -> bool {
    !e.depends_on(&|c| !matches!(c, Coord::Fiber(_)))
}

fn check_fields(what: &'static str, es: &[Expr]) -> Result<(), RetError> {
    if es.iter().all(on_fields) {
        Ok(())
    } else {
        Err(RetError::NotOnFields(what))
    }
}

fn check_len<T>(what: &'static str, v: &[T], expected: usize) -> Result<(), RetError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(RetError::Shape { what, got: v.len(), expected })
    }
}

/// RET context over the same base with fields `lam1..lamm`.
pub fn dual_context(ctx: &JetContext) -> Result<JetContext, RetError> {
    let base: Vec<String> = (0..ctx.base_dim()).map(|mu| ctx.base_name(mu).into()).collect();
    let lams: Vec<String> = (1..=ctx.field_count()).map(|k| format!("lam{k}")).collect();
    let mut b = ContextBuilder::new(&base, &lams).ret();
    for p in ctx.params() {
        b = b.param(p);
    }
    Ok(b.build()?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimalData {
    /// `h^mu(u)`, entropy density first.
    pub entropy: Vec<Expr>,
    /// `F^mu_i(u)` indexed `[i][mu]`.
    pub flux: Vec<Vec<Expr>>,
    pub source: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualData {
    /// Four-potential `hhat^mu(lambda)`.
    pub potential: Vec<Expr>,
    pub source: Vec<Expr>,
    /// `Sigma = lambda^i Pi_i`.
    pub production: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RetData {
    Primal(PrimalData),
    Dual(DualData),
}

#[derive(Clone, Debug)]
pub struct RetSystem {
    ctx: JetContext,
    data: RetData,
}

impl RetSystem {
    pub fn primal(ctx: &JetContext, entropy: Vec<Expr>, flux: Vec<Vec<Expr>>, source: Vec<Expr>) -> Result<Self, RetError> {
        if !ctx.is_ret() {
            return Err(RetError::NotRet);
        }
        let (m, n1) = (ctx.field_count(), ctx.base_dim());
        check_len("entropy flux", &entropy, n1)?;
        check_len("flux", &flux, m)?;
        check_len("source", &source, m)?;
        for row in &flux {
            check_len("flux row", row, n1)?;
            check_fields("flux", row)?;
        }
        check_fields("entropy flux", &entropy)?;
        check_fields("source", &source)?;
        Ok(RetSystem { ctx: ctx.clone(), data: RetData::Primal(PrimalData { entropy, flux, source }) })
    }

    /// Dual data over `ctx`, whose fields are the multipliers.
    pub fn dual(ctx: &JetContext, potential: Vec<Expr>, source: Vec<Expr>) -> Result<Self, RetError> {
        if !ctx.is_ret() {
            return Err(RetError::NotRet);
        }
        check_len("four-potential", &potential, ctx.base_dim())?;
        check_len("source", &source, ctx.field_count())?;
        check_fields("four-potential", &potential)?;
        check_fields("source", &source)?;
        let production = production(&source);
        Ok(RetSystem { ctx: ctx.clone(), data: RetData::Dual(DualData { potential, source, production }) })
    }

    pub fn context(&self) -> &JetContext {
        &self.ctx
    }

    pub fn data(&self) -> &RetData {
        &self.data
    }
}

/// `lambda^i Pi_i` with the multipliers as fiber coordinates.
pub fn production(source: &[Expr]) -> Expr {
    Expr::add_all(source.iter().enumerate().map(|(i, p)| Expr::y(i) * p))
}

pub fn hessian(f: &Expr, m: usize) -> Vec<Vec<Expr>> {
    let grad: Vec<Expr> = (0..m).map(|i| f.diff(Coord::fiber(i))).collect();
    grad.iter().map(|g| (0..m).map(|j| g.diff(Coord::fiber(j))).collect()).collect()
}

/// `g_ij = -d^2 h0 / du^i du^j`.
pub fn ruppeiner_metric(h0: &Expr, m: usize) -> Vec<Vec<Expr>> {
    hessian(h0, m).into_iter().map(|row| row.into_iter().map(|e| -e).collect()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    NegativeDefinite,
    /// Semidefinite with a zero eigenvalue.
    Degenerate,
    /// Positive definite: convex where concave is required.
    WrongSign,
    Indefinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HessianSample {
    pub point: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub class: Definiteness,
}

/// Definiteness of the entropy Hessian at finitely many points. Passing means
/// "sampled negative definite", never a proof.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConvexityReport {
    pub samples: Vec<HessianSample>,
}

impl ConvexityReport {
    pub fn flagged(&self) -> impl Iterator<Item = &HessianSample> {
        self.samples.iter().filter(|s| s.class != Definiteness::NegativeDefinite)
    }

    pub fn sampled_definite(&self) -> bool {
        self.flagged().next().is_none()
    }
}

#[derive(Clone, Debug)]
pub struct LagrangeLiuMap {
    /// `lambda^i(u) = dh0/du^i`.
    pub lambda: Vec<Expr>,
    pub hessian: Vec<Vec<Expr>>,
    pub convexity: ConvexityReport,
}

fn bind(point: &[f64]) -> BTreeMap<Coord, f64> {
    point.iter().enumerate().map(|(i, v)| (Coord::fiber(i), *v)).collect()
}

fn eval_matrix(m: &[Vec<Expr>], point: &[f64], params: &BTreeMap<String, f64>) -> Result<DMatrix<f64>, EvalError> {
    let at = bind(point);
    let n = m.len();
    let mut out = DMatrix::zeros(n, n);
    for (r, row) in m.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            out[(r, c)] = e.eval(&at, params)?;
        }
    }
    Ok(out)
}

fn eval_all(es: &[Expr], point: &[f64], params: &BTreeMap<String, f64>) -> Result<Vec<f64>, EvalError> {
    let at = bind(point);
    es.iter().map(|e| e.eval(&at, params)).collect()
}

fn classify_eigenvalues(ev: &[f64]) -> Definiteness {
    let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-12 * scale.max(1.0);
    let neg = ev.iter().filter(|v| **v < -tol).count();
    let pos = ev.iter().filter(|v| **v > tol).count();
    match (neg, pos) {
        (n, 0) if n == ev.len() => Definiteness::NegativeDefinite,
        (0, p) if p == ev.len() => Definiteness::WrongSign,
        (_, 0) | (0, _) => Definiteness::Degenerate,
        _ => Definiteness::Indefinite,
    }
}

/// Multipliers `lambda^i = dh0/du^i` with the Hessian sampled at `points`.
pub fn lagrange_liu_map(
    h0: &Expr,
    m: usize,
    points: &[Vec<f64>],
    params: &BTreeMap<String, f64>,
) -> Result<LagrangeLiuMap, RetError> {
    check_fields("entropy density", core::slice::from_ref(h0))?;
    let lambda = (0..m).map(|i| h0.diff(Coord::fiber(i))).collect();
    let hessian = hessian(h0, m);
    let mut convexity = ConvexityReport::default();
    for p in points {
        check_len("sample point", p, m)?;
        let h = eval_matrix(&hessian, p, params)?;
        let mut eigenvalues: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        let class = classify_eigenvalues(&eigenvalues);
        convexity.samples.push(HessianSample { point: p.clone(), eigenvalues, class });
    }
    Ok(LagrangeLiuMap { lambda, hessian, convexity })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inversion {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Newton iteration for `lambda(u) = target`, Jacobian `d lambda^i / du^j`.
pub fn invert_legendre(
    lambda: &[Expr],
    target: &[f64],
    guess: &[f64],
    params: &BTreeMap<String, f64>,
) -> Result<Inversion, RetError> {
    let m = lambda.len();
    check_len("target", target, m)?;
    check_len("guess", guess, m)?;
    let jac: Vec<Vec<Expr>> = lambda.iter().map(|l| (0..m).map(|j| l.diff(Coord::fiber(j))).collect()).collect();
    let t = DVector::from_column_slice(target);
    let mut u = DVector::from_column_slice(guess);
    let residual_at = |u: &DVector<f64>| -> Result<DVector<f64>, RetError> {
        Ok(DVector::from_vec(eval_all(lambda, u.as_slice(), params)?) - &t)
    };
    let mut r = residual_at(&u)?;
    for k in 0..=NEWTON_MAX_ITER {
        let norm = r.norm();
        if norm < NEWTON_TOL {
            return Ok(Inversion { u: u.as_slice().to_vec(), iterations: k, residual: norm });
        }
        if k == NEWTON_MAX_ITER || !norm.is_finite() {
            return Err(RetError::NoConvergence { iterations: k, residual: norm });
        }
        let j = eval_matrix(&jac, u.as_slice(), params)?;
        let step = j.lu().solve(&r).filter(|s| s.iter().all(|v| v.is_finite())).ok_or(RetError::Singular(k))?;
        u -= step;
        r = residual_at(&u)?;
    }
    unreachable!()
}

/// `u(lambda)` when the multiplier map is affine with constant coefficients.
pub fn affine_inverse(lambda: &[Expr]) -> Option<Vec<Expr>> {
    let m = lambda.len();
    let mut a = alloc::vec![alloc::vec![Expr::zero(); m]; m];
    let mut b = alloc::vec![Expr::zero(); m];
    for (r, l) in lambda.iter().enumerate() {
        let coeffs = polynomial_coefficients(l, &|c| matches!(c, Coord::Fiber(_)))?;
        for (mono, c) in coeffs {
            if !c.is_constant() {
                return None;
            }
            match mono.as_slice() {
                [] => b[r] = c,
                [Coord::Fiber(j)] => a[r][*j as usize] = c,
                _ => return None,
            }
        }
    }
    let inv = linalg::inverse(&a)?;
    // u = A^{-1}(lambda - b)
    Some(
        inv.iter()
            .map(|row| Expr::add_all(row.iter().enumerate().map(|(j, c)| c * (Expr::y(j) - &b[j]))))
            .collect(),
    )
}

fn compose(e: &Expr, u_of_lambda: &[Expr]) -> Expr {
    let bindings: BTreeMap<Coord, Expr> =
        u_of_lambda.iter().enumerate().map(|(i, e)| (Coord::fiber(i), e.clone())).collect();
    e.substitute(&bindings)
}

/// Constitutive data written in the multipliers.
#[derive(Clone, Debug)]
pub struct SymbolicPotential {
    /// `hhat^mu(lambda)`.
    pub potential: Vec<Expr>,
    /// `F~^mu_i(lambda)` indexed `[i][mu]`.
    pub flux: Vec<Vec<Expr>>,
    /// `h~^mu(lambda)`.
    pub entropy: Vec<Expr>,
    /// `h~^mu = -hhat^mu + lambda^i dhhat^mu/dlambda^i` holds identically.
    pub reconstructs: bool,
}

/// Four-potential evaluated through the numeric inverse.
#[derive(Clone, Debug)]
pub struct NumericPotential {
    lambda: Vec<Expr>,
    flux: Vec<Vec<Expr>>,
    entropy: Vec<Expr>,
}

impl NumericPotential {
    /// `hhat^mu` at multiplier values `at`, Newton started from `guess`.
    pub fn eval(&self, at: &[f64], guess: &[f64], params: &BTreeMap<String, f64>) -> Result<Vec<f64>, RetError> {
        let u = invert_legendre(&self.lambda, at, guess, params)?.u;
        let f = self.flux.iter().map(|row| eval_all(row, &u, params)).collect::<Result<Vec<_>, _>>()?;
        let h = eval_all(&self.entropy, &u, params)?;
        Ok((0..h.len()).map(|mu| at.iter().zip(&f).map(|(l, row)| l * row[mu]).sum::<f64>() - h[mu]).collect())
    }
}

#[derive(Clone, Debug)]
pub enum FourPotential {
    Symbolic(SymbolicPotential),
    Numeric(NumericPotential),
}

/// `hhat^mu = lambda^i F~^mu_i - h~^mu`, symbolic when the multiplier map is affine.
pub fn four_potential(lambda: &[Expr], flux: &[Vec<Expr>], entropy: &[Expr]) -> Result<FourPotential, RetError> {
    let m = lambda.len();
    check_len("flux", flux, m)?;
    check_fields("multipliers", lambda)?;
    check_fields("entropy flux", entropy)?;
    for row in flux {
        check_len("flux row", row, entropy.len())?;
        check_fields("flux", row)?;
    }
    let Some(u) = affine_inverse(lambda) else {
        return Ok(FourPotential::Numeric(NumericPotential {
            lambda: lambda.to_vec(),
            flux: flux.to_vec(),
            entropy: entropy.to_vec(),
        }));
    };
    let flux: Vec<Vec<Expr>> = flux.iter().map(|row| row.iter().map(|f| compose(f, &u)).collect()).collect();
    let entropy: Vec<Expr> = entropy.iter().map(|h| compose(h, &u)).collect();
    let potential: Vec<Expr> = (0..entropy.len())
        .map(|mu| Expr::add_all((0..m).map(|i| Expr::y(i) * &flux[i][mu])) - &entropy[mu])
        .collect();
    let reconstructs = potential.iter().zip(&entropy).all(|(hh, h)| {
        let back = Expr::add_all((0..m).map(|i| Expr::y(i) * hh.diff(Coord::fiber(i)))) - hh;
        same(&back, h)
    });
    Ok(FourPotential::Symbolic(SymbolicPotential { potential, flux, entropy, reconstructs }))
}

fn same(a: &Expr, b: &Expr) -> bool {
    let d = a - b;
    vanishes(&d) || equivalent(a, b).holds()
}

/// `F~^mu_i = dhhat^mu / dlambda^i`, indexed `[i][mu]`.
pub fn flux_from_potential(potential: &[Expr], m: usize) -> Vec<Vec<Expr>> {
    (0..m).map(|i| potential.iter().map(|h| h.diff(Coord::fiber(i))).collect()).collect()
}

/// `h~^mu = -hhat^mu + lambda^i dhhat^mu/dlambda^i`.
pub fn entropy_from_potential(potential: &[Expr], m: usize) -> Vec<Expr> {
    potential
        .iter()
        .map(|h| Expr::add_all((0..m).map(|i| Expr::y(i) * h.diff(Coord::fiber(i)))) - h)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Holonomicity {
    /// Pairs `(mu, i)` where the flux is not the potential gradient.
    pub failures: Vec<(usize, usize)>,
}

impl Holonomicity {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn witness(&self) -> Option<(usize, usize)> {
        self.failures.first().copied()
    }
}

/// Symbolic test of `F~^mu_i = dhhat^mu / dlambda^i` for every pair.
pub fn holonomicity_check(potential: &[Expr], flux: &[Vec<Expr>]) -> Holonomicity {
    let mut failures = Vec::new();
    for mu in 0..potential.len() {
        for (i, row) in flux.iter().enumerate() {
            if !same(&row[mu], &potential[mu].diff(Coord::fiber(i))) {
                failures.push((mu, i));
            }
        }
    }
    Holonomicity { failures }
}

/// The same test on primal data: `dh^mu/du^i = lambda^j dF^mu_j/du^i`.
pub fn primal_holonomicity(lambda: &[Expr], flux: &[Vec<Expr>], entropy: &[Expr]) -> Holonomicity {
    let mut failures = Vec::new();
    for (mu, h) in entropy.iter().enumerate() {
        for i in 0..lambda.len() {
            let rhs = Expr::add_all(lambda.iter().zip(flux).map(|(l, row)| l * row[mu].diff(Coord::fiber(i))));
            if !same(&h.diff(Coord::fiber(i)), &rhs) {
                failures.push((mu, i));
            }
        }
    }
    Holonomicity { failures }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub samples: usize,
    pub min: f64,
    pub argmin: Vec<f64>,
    /// Points with a negative value, in sampling order.
    pub violations: Vec<(Vec<f64>, f64)>,
}

impl InequalityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `value >= 0` on every sampled point.
pub fn sample_nonnegative(
    value: &Expr,
    sampler: &DomainSampler,
    params: &BTreeMap<String, f64>,
) -> Result<InequalityReport, RetError> {
    let mut report =
        InequalityReport { samples: 0, min: f64::INFINITY, argmin: Vec::new(), violations: Vec::new() };
    for p in sampler.points() {
        let v = value.eval(&bind(&p), params)?;
        report.samples += 1;
        if v < report.min {
            report.min = v;
            report.argmin = p.clone();
        }
        if v < 0.0 || v.is_nan() {
            report.violations.push((p, v));
        }
    }
    Ok(report)
}

/// `Sigma = lambda^i Pi_i >= 0` on at least `MIN_SAMPLES` points.
///
/// The multipliers range over the vector space `R^m`, so `sampler` boxes are
/// taken in that space. Positivity is scalar, against a positive mass density.
pub fn residual_inequality(
    source: &[Expr],
    sampler: &DomainSampler,
    params: &BTreeMap<String, f64>,
) -> Result<InequalityReport, RetError> {
    check_fields("source", source)?;
    check_len("sampler dimension", &sampler.center, source.len())?;
    sample_nonnegative(&production(source), sampler, params)
}

/// `Pi_i = dPsi/dlambda^i`.
pub fn gradient_source(psi: &Expr, m: usize) -> Vec<Expr> {
    (0..m).map(|i| psi.diff(Coord::fiber(i))).collect()
}

/// Radial monotonicity `zeta . Psi = lambda^i dPsi/dlambda^i >= 0`, which
/// makes the gradient source satisfy the residual inequality.
pub fn radial_monotonicity(
    psi: &Expr,
    m: usize,
    sampler: &DomainSampler,
    params: &BTreeMap<String, f64>,
) -> Result<InequalityReport, RetError> {
    check_fields("Psi", core::slice::from_ref(psi))?;
    sample_nonnegative(&production(&gradient_source(psi, m)), sampler, params)
}

/// Entropy principle: holonomic currents plus a nonnegative production.
pub fn entropy_principle(h: &Holonomicity, residual: &InequalityReport) -> bool {
    h.holds() && residual.holds()
}

#[derive(Clone, Debug)]
pub struct DualSystem {
    pub system: BalanceSystem,
    /// `d^2 hhat^mu / dlambda^i dlambda^j`, indexed `[mu][i][j]`.
    pub matrices: Vec<Vec<Vec<Expr>>>,
}

/// `(d^2 hhat^mu / dlambda^i dlambda^j) lambda^j_mu - Pi_i` over the dual context.
pub fn dual_balance_system(ctx: &JetContext, potential: &[Expr], source: &[Expr]) -> Result<DualSystem, RetError> {
    let (m, n1) = (ctx.field_count(), ctx.base_dim());
    check_len("four-potential", potential, n1)?;
    check_len("source", source, m)?;
    check_fields("four-potential", potential)?;
    check_fields("source", source)?;
    let matrices: Vec<Vec<Vec<Expr>>> = potential.iter().map(|h| hessian(h, m)).collect();
    for (mu, a) in matrices.iter().enumerate() {
        for i in 0..m {
            for j in i + 1..m {
                if a[i][j] != a[j][i] && !same(&a[i][j], &a[j][i]) {
                    return Err(RetError::Asymmetric { mu, i, j });
                }
            }
        }
    }
    let residuals = (0..m)
        .map(|i| {
            let mut terms: Vec<Expr> = Vec::new();
            for (mu, a) in matrices.iter().enumerate() {
                for (j, c) in a[i].iter().enumerate() {
                    terms.push(c * Expr::z(j, mu));
                }
            }
            terms.push(-&source[i]);
            Expr::add_all(terms)
        })
        .collect();
    Ok(DualSystem { system: BalanceSystem::new(ctx, residuals, Origin::RetDual), matrices })
}
