//! Balance systems generated by constitutive relations.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::crel::ConstitutiveRelation;
use crate::forms::{eta_form, reduced_horizontal_d, total_derivative, Form, Mode};
use crate::jetspace::{vanishes, JetContext, JetKind};
use crate::symex::{Coord, EvalError, Expr};

mod classify;
mod section;

pub use classify::{classify, TypeIndex};
pub use section::{
    evaluate_on_grid, pullback_residuals, verify_section, Boundary, Grid, GridSection, NumericSection, SectionReport,
    VerifyOptions,
};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BalanceError {
    #[error("q^{mu} may not depend on {field_name}: {case}")]
    DivRestriction { case: Restriction, mu: usize, field: usize, field_name: alloc::string::String },
    #[error("witness components may depend on base and fiber coordinates only")]
    WitnessNotOnY,
    #[error("expected {0} witness components")]
    WitnessShape(usize),
    #[error("time derivative of field {field} enters {place}; only the time flux may contain it")]
    TimeDerivativeOutsideFlux { field: usize, place: &'static str },
    #[error("grid needs at least 8 points per axis and one axis per base coordinate")]
    GridTooSmall,
    #[error("sampled section has {got} values, grid has {expected}")]
    SampleShape { got: usize, expected: usize },
    #[error("section must give one expression of the base coordinates per field")]
    BadSection,
    #[error("stencil order must be 2 or 4")]
    StencilOrder,
    #[error("point does not bind {0:?}")]
    Unbound(Coord),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which of the context restrictions on a Div-equivalence witness fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restriction {
    /// No jets at all: `q` cannot depend on `y`.
    Ret,
    /// Only spatial jets: the time component `q^0` cannot depend on `y`.
    SpatialJets,
    /// Only time jets: spatial components cannot depend on `y`.
    TimeJets,
    /// Any other partial bundle: `q^mu` may depend on `y^i` only for admitted `(mu, i)`.
    Pair,
}

impl core::fmt::Display for Restriction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Restriction::Ret => "q cannot depend on y without jet coordinates",
            Restriction::SpatialJets => "q^0 cannot depend on y when only spatial jets exist",
            Restriction::TimeJets => "spatial q^A cannot depend on y when only time jets exist",
            Restriction::Pair => "the matching jet coordinate is not admitted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Generated from a relation of the named kind.
    Relation(&'static str),
    EulerLagrange,
    /// Noether balance of a symmetry.
    Noether,
    /// Energy-momentum balance, one residual per base direction.
    EnergyMomentum,
    /// Dual RET system in the multipliers.
    RetDual,
}

/// `residual_i = 0`, one expression per field, over second-jet coordinates.
#[derive(Clone, Debug)]
pub struct BalanceSystem {
    ctx: JetContext,
    residuals: Vec<Expr>,
    origin: Origin,
}

impl BalanceSystem {
    pub fn new(ctx: &JetContext, residuals: Vec<Expr>, origin: Origin) -> Self {
        BalanceSystem { ctx: ctx.clone(), residuals, origin }
    }

    pub fn context(&self) -> &JetContext {
        &self.ctx
    }

    pub fn residuals(&self) -> &[Expr] {
        &self.residuals
    }

    pub fn residual(&self, i: usize) -> &Expr {
        &self.residuals[i]
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }
}

/// `sum_mu d_mu F^mu_i + F^mu_i dlam_mu - Pi_i` with section-following total derivatives.
pub fn generate(cr: &ConstitutiveRelation) -> BalanceSystem {
    let ctx = cr.context();
    let residuals = (0..ctx.field_count())
        .map(|i| {
            let mut terms = Vec::new();
            for mu in 0..ctx.base_dim() {
                let f = cr.flux(mu, i);
                terms.push(total_derivative(ctx, mu, f, Mode::Full));
                terms.push(f * ctx.dlam(mu));
            }
            terms.push(-cr.source(i));
            Expr::add_all(terms)
        })
        .collect();
    BalanceSystem::new(ctx, residuals, Origin::Relation(cr.kind().name()))
}

/// `d^(F^mu_i eta_mu) - Pi_i eta` for each field: the reduced-horizontal route.
pub fn hat_forms(cr: &ConstitutiveRelation) -> Vec<Form> {
    let ctx = cr.context();
    let eta = eta_form(ctx, &[]).expect("volume form");
    (0..ctx.field_count())
        .map(|i| {
            let sigma: Form = (0..ctx.base_dim())
                .map(|mu| eta_form(ctx, &[mu]).expect("direction in range").scale(cr.flux(mu, i)))
                .sum();
            reduced_horizontal_d(ctx, &sigma, Mode::Full) - eta.scale(cr.source(i))
        })
        .collect()
}

/// Whether the reduced-horizontal route gives `residual_i eta` for every field.
pub fn routes_agree(cr: &ConstitutiveRelation) -> bool {
    let sys = generate(cr);
    let eta = eta_form(cr.context(), &[]).expect("volume form");
    hat_forms(cr).iter().zip(sys.residuals()).all(|(w, r)| {
        let diff = w - &eta.scale(r);
        let ok = diff.terms().all(|(_, c)| vanishes(c));
        ok
    })
}

/// Euler-Lagrange residuals `d_mu(L_{z^i_mu}) + L_{z^i_mu} dlam_mu - L_{y^i}`,
/// with the chain rule written out over the coordinates present.
pub fn euler_lagrange(ctx: &JetContext, l: &Expr) -> BalanceSystem {
    let m = ctx.field_count();
    let residuals = (0..m)
        .map(|i| {
            let mut terms = alloc::vec![-l.diff(Coord::fiber(i))];
            for mu in ctx.directions(i) {
                let g = l.diff(Coord::jet(i, mu));
                terms.push(g.diff(Coord::base(mu)));
                for j in 0..m {
                    terms.push(Expr::z(j, mu) * g.diff(Coord::fiber(j)));
                }
                let jets: BTreeSet<(u16, u16)> = g
                    .coords()
                    .into_iter()
                    .filter_map(|c| if let Coord::Jet(j, s) = c { Some((j, s)) } else { None })
                    .collect();
                for (j, s) in jets {
                    let (j, s) = (j as usize, s as usize);
                    terms.push(Expr::z2(j, s, mu) * g.diff(Coord::jet(j, s)));
                }
                terms.push(&g * ctx.dlam(mu));
            }
            Expr::add_all(terms)
        })
        .collect();
    BalanceSystem::new(ctx, residuals, Origin::EulerLagrange)
}

/// One law `F^mu eta_mu + Pi eta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceLaw {
    pub flux: Vec<Expr>,
    pub source: Expr,
}

impl BalanceLaw {
    pub fn of_field(cr: &ConstitutiveRelation, i: usize) -> BalanceLaw {
        let n1 = cr.context().base_dim();
        BalanceLaw { flux: (0..n1).map(|mu| cr.flux(mu, i).clone()).collect(), source: cr.source(i).clone() }
    }

    pub fn zero(ctx: &JetContext) -> BalanceLaw {
        BalanceLaw { flux: alloc::vec![Expr::zero(); ctx.base_dim()], source: Expr::zero() }
    }

    /// `d_mu F^mu + F^mu dlam_mu - Pi`.
    pub fn residual(&self, ctx: &JetContext) -> Expr {
        let mut terms: Vec<Expr> = self
            .flux
            .iter()
            .enumerate()
            .flat_map(|(mu, f)| [total_derivative(ctx, mu, f, Mode::Full), f * ctx.dlam(mu)])
            .collect();
        terms.push(-&self.source);
        Expr::add_all(terms)
    }
}

fn check_witness(ctx: &JetContext, q: &[Expr]) -> Result<(), BalanceError> {
    if q.len() != ctx.base_dim() {
        return Err(BalanceError::WitnessShape(ctx.base_dim()));
    }
    if q.iter().any(|e| e.depends_on(&|c| !matches!(c, Coord::Base(_) | Coord::Fiber(_)))) {
        return Err(BalanceError::WitnessNotOnY);
    }
    let case = match ctx.kind() {
        JetKind::Full => return Ok(()),
        JetKind::Ret => Restriction::Ret,
        JetKind::Partial(dirs) if !dirs.contains(&0) && dirs.len() + 1 == ctx.base_dim() => Restriction::SpatialJets,
        JetKind::Partial(dirs) if dirs.as_slice() == [0] => Restriction::TimeJets,
        _ => Restriction::Pair,
    };
    for (mu, qm) in q.iter().enumerate() {
        for i in 0..ctx.field_count() {
            if !ctx.admits(mu, i) && crate::jetspace::depends_on(qm, Coord::fiber(i)) {
                let field_name = ctx.field_name(i).into();
                return Err(BalanceError::DivRestriction { case, mu, field: i, field_name });
            }
        }
    }
    Ok(())
}

/// Checks `B2 - B1 = q^mu eta_mu + (d_mu q^mu + q^mu dlam_mu) eta`.
pub fn check_div_equivalence(
    ctx: &JetContext,
    b1: &BalanceLaw,
    b2: &BalanceLaw,
    q: &[Expr],
) -> Result<bool, BalanceError> {
    check_witness(ctx, q)?;
    let fluxes = b1.flux.iter().zip(&b2.flux).zip(q).all(|((f1, f2), qm)| vanishes(&(f2 - f1 - qm)));
    let div = Expr::add_all(
        q.iter().enumerate().map(|(mu, qm)| total_derivative(ctx, mu, qm, Mode::Full) + qm * ctx.dlam(mu)),
    );
    Ok(fluxes && vanishes(&(&b2.source - &b1.source - div)))
}

/// A law is trivial when it is Div-equivalent to zero through `q`.
pub fn is_trivial(ctx: &JetContext, b: &BalanceLaw, q: &[Expr]) -> Result<bool, BalanceError> {
    check_div_equivalence(ctx, &BalanceLaw::zero(ctx), b, q)
}
