//! Constitutive relations: fluxes `F^mu_i` and sources `Pi_i` on a partial jet
//! bundle, their Poincare-Cartan forms and transformations.

use alloc::vec::Vec;

use crate::jetspace::{JetContext, LiftError};
use crate::symex::{Coord, Expr};

mod semi;
mod theta;
mod transform;

pub use semi::{is_semi_lagrangian, SemiLagrangian};
pub use theta::{ccr_contact_forms, is_homogeneous, theta_covering, theta_pc, ContactForms};
pub use transform::{push_forward_cr, transform_cr, Automorphism};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CrelError {
    #[error("flux table must be {fields}x{dims}")]
    FluxShape { fields: usize, dims: usize },
    #[error("expected {0} source terms")]
    SourceShape(usize),
    #[error("expected {0} potential components")]
    PotentialShape(usize),
    #[error("{0:?} is not a coordinate of this jet space")]
    NotAdmitted(Coord),
    #[error("RET relations may not depend on jet coordinates ({0:?})")]
    JetDependence(Coord),
    #[error("relation has no Lagrangian")]
    NoLagrangian,
    #[error("automorphism needs {0} base and {1} fiber components")]
    AutomorphismShape(usize, usize),
    #[error("base map must depend on base coordinates only")]
    NotProjectable,
    #[error("fiber map may depend on base and fiber coordinates only")]
    FiberNotOnY,
    #[error("Jacobian is singular")]
    SingularJacobian,
    #[error("supplied inverse does not invert the map")]
    BadInverse,
    #[error("automorphism has no inverse attached")]
    NoInverse,
    #[error("map does not preserve the jet structure: image of {0:?} leaves the admitted set")]
    StructureViolation(Coord),
    #[error(transparent)]
    Lift(#[from] LiftError),
}

/// How a relation was produced; the derived `F`, `Pi` are stored regardless.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kind {
    General,
    Lagrangian(Expr),
    SemiLagrangian { lagrangian: Expr, source: Vec<Expr> },
    LPlusD { lagrangian: Expr, dissipation: Expr },
    VectorPotential(Vec<Expr>),
    Ret,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::General => "general",
            Kind::Lagrangian(_) => "lagrangian",
            Kind::SemiLagrangian { .. } => "semi_lagrangian",
            Kind::LPlusD { .. } => "l_plus_d",
            Kind::VectorPotential(_) => "vector_potential",
            Kind::Ret => "ret",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstitutiveRelation {
    ctx: JetContext,
    flux: Vec<Vec<Expr>>,
    source: Vec<Expr>,
    kind: Kind,
    negated: bool,
}

fn check_admitted(ctx: &JetContext, e: &Expr) -> Result<(), CrelError> {
    match e.coords().into_iter().find(|&c| !ctx.admits_coord(c)) {
        Some(c) => Err(CrelError::NotAdmitted(c)),
        None => Ok(()),
    }
}

/// `dL/dz^i_mu` over admitted pairs, zero elsewhere; indexed `[i][mu]`.
fn momenta(ctx: &JetContext, l: &Expr) -> Vec<Vec<Expr>> {
    (0..ctx.field_count())
        .map(|i| {
            (0..ctx.base_dim())
                .map(|mu| if ctx.admits(mu, i) { l.diff(Coord::jet(i, mu)) } else { Expr::zero() })
                .collect()
        })
        .collect()
}

fn y_gradient(ctx: &JetContext, l: &Expr) -> Vec<Expr> {
    (0..ctx.field_count()).map(|i| l.diff(Coord::fiber(i))).collect()
}

impl ConstitutiveRelation {
    /// General relation from `flux[i][mu]` and `source[i]`.
    pub fn general(ctx: &JetContext, flux: Vec<Vec<Expr>>, source: Vec<Expr>) -> Result<Self, CrelError> {
        Self::build(ctx, flux, source, Kind::General)
    }

    /// `F = dL/dz`, `Pi = dL/dy`.
    pub fn lagrangian(ctx: &JetContext, l: Expr) -> Result<Self, CrelError> {
        check_admitted(ctx, &l)?;
        let (flux, source) = (momenta(ctx, &l), y_gradient(ctx, &l));
        Self::build(ctx, flux, source, Kind::Lagrangian(l))
    }

    /// `F = dL/dz` with an independent source.
    pub fn semi_lagrangian(ctx: &JetContext, l: Expr, source: Vec<Expr>) -> Result<Self, CrelError> {
        check_admitted(ctx, &l)?;
        let flux = momenta(ctx, &l);
        Self::build(ctx, flux, source.clone(), Kind::SemiLagrangian { lagrangian: l, source })
    }

    /// `F = dL/dz`, `Pi_i = dL/dy^i + dD/dz^i_0` (dissipative potential `D`).
    pub fn l_plus_d(ctx: &JetContext, l: Expr, dissipation: Expr) -> Result<Self, CrelError> {
        check_admitted(ctx, &l)?;
        check_admitted(ctx, &dissipation)?;
        let flux = momenta(ctx, &l);
        let source = (0..ctx.field_count())
            .map(|i| {
                let dd = if ctx.admits(0, i) { dissipation.diff(Coord::jet(i, 0)) } else { Expr::zero() };
                l.diff(Coord::fiber(i)) + dd
            })
            .collect();
        Self::build(ctx, flux, source, Kind::LPlusD { lagrangian: l, dissipation })
    }

    /// `F^mu_i = dh^mu/dy^i`.
    pub fn vector_potential(ctx: &JetContext, h: Vec<Expr>, source: Vec<Expr>) -> Result<Self, CrelError> {
        if h.len() != ctx.base_dim() {
            return Err(CrelError::PotentialShape(ctx.base_dim()));
        }
        for e in &h {
            check_admitted(ctx, e)?;
        }
        let flux = (0..ctx.field_count()).map(|i| h.iter().map(|hm| hm.diff(Coord::fiber(i))).collect()).collect();
        Self::build(ctx, flux, source, Kind::VectorPotential(h))
    }

    /// Relation without jet dependence.
    pub fn ret(ctx: &JetContext, flux: Vec<Vec<Expr>>, source: Vec<Expr>) -> Result<Self, CrelError> {
        for e in flux.iter().flatten().chain(&source) {
            if let Some(c) = e.coords().into_iter().find(|c| matches!(c, Coord::Jet(..) | Coord::Jet2(..))) {
                return Err(CrelError::JetDependence(c));
            }
        }
        Self::build(ctx, flux, source, Kind::Ret)
    }

    fn build(ctx: &JetContext, flux: Vec<Vec<Expr>>, source: Vec<Expr>, kind: Kind) -> Result<Self, CrelError> {
        let (m, n1) = (ctx.field_count(), ctx.base_dim());
        if flux.len() != m || flux.iter().any(|r| r.len() != n1) {
            return Err(CrelError::FluxShape { fields: m, dims: n1 });
        }
        if source.len() != m {
            return Err(CrelError::SourceShape(m));
        }
        for e in flux.iter().flatten().chain(&source) {
            check_admitted(ctx, e)?;
        }
        Ok(ConstitutiveRelation { ctx: ctx.clone(), flux, source, kind, negated: false })
    }

    /// The relation with the sign of every source flipped when forms are built.
    pub fn negated(mut self) -> Self {
        self.negated = !self.negated;
        self
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    pub fn context(&self) -> &JetContext {
        &self.ctx
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn flux(&self, mu: usize, i: usize) -> &Expr {
        &self.flux[i][mu]
    }

    /// Fluxes indexed `[i][mu]`.
    pub fn fluxes(&self) -> &[Vec<Expr>] {
        &self.flux
    }

    /// The declared source, ignoring the negation flag.
    pub fn source(&self, i: usize) -> &Expr {
        &self.source[i]
    }

    pub fn sources(&self) -> &[Expr] {
        &self.source
    }

    /// Source as it enters the Poincare-Cartan form.
    pub fn form_source(&self, i: usize) -> Expr {
        if self.negated {
            -&self.source[i]
        } else {
            self.source[i].clone()
        }
    }

    pub fn lagrangian_density(&self) -> Option<&Expr> {
        match &self.kind {
            Kind::Lagrangian(l) | Kind::SemiLagrangian { lagrangian: l, .. } | Kind::LPlusD { lagrangian: l, .. } => {
                Some(l)
            }
            _ => None,
        }
    }

    /// `sum_{(mu,i) admitted} z^i_mu F^mu_i`.
    pub fn jet_pairing(&self) -> Expr {
        Expr::add_all(self.ctx.pairs().map(|(mu, i)| Expr::z(i, mu) * &self.flux[i][mu]))
    }

    pub fn is_zero(&self) -> bool {
        self.flux.iter().flatten().chain(&self.source).all(Expr::is_zero)
    }
}

/// Relation together with the scalar `p` of the `p eta` term.
#[derive(Clone, Debug)]
pub struct CoveringCr {
    cr: ConstitutiveRelation,
    p: Expr,
}

impl CoveringCr {
    pub fn new(cr: ConstitutiveRelation, p: Expr) -> Result<Self, CrelError> {
        check_admitted(cr.context(), &p)?;
        Ok(CoveringCr { cr, p })
    }

    /// Lifted covering: `p = -z^i_mu F^mu_i`.
    pub fn lift(cr: &ConstitutiveRelation) -> Self {
        CoveringCr { p: -cr.jet_pairing(), cr: cr.clone() }
    }

    /// Legendre covering `p = L - z^i_mu dL/dz^i_mu`.
    pub fn legendre(cr: &ConstitutiveRelation) -> Result<Self, CrelError> {
        let l = cr.lagrangian_density().ok_or(CrelError::NoLagrangian)?;
        let zl = Expr::add_all(cr.ctx.pairs().map(|(mu, i)| Expr::z(i, mu) * l.diff(Coord::jet(i, mu))));
        Ok(CoveringCr { p: l - &zl, cr: cr.clone() })
    }

    pub fn relation(&self) -> &ConstitutiveRelation {
        &self.cr
    }

    pub fn p(&self) -> &Expr {
        &self.p
    }

    /// Whether `p + z F` vanishes identically.
    pub fn is_lifted(&self) -> bool {
        crate::jetspace::vanishes(&(&self.p + &self.cr.jet_pairing()))
    }
}

/// Lifted covering relation of `cr`.
pub fn lift_ccr(cr: &ConstitutiveRelation) -> CoveringCr {
    CoveringCr::lift(cr)
}
