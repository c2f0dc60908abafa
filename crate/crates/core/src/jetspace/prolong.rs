use alloc::vec::Vec;

use super::{JetContext, JetKind, Split};
use crate::forms::VectorField;
use crate::symex::{equivalent, Coord, Expr};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LiftError {
    #[error("vector field must live on Y: component along {0:?} or jet dependence found")]
    NotOnTotalSpace(Coord),
    #[error("vector field is not projectable")]
    NotProjectable,
    #[error("fiber component {field} depends on x^{dir}, a direction without jet coordinate for it")]
    FiberAlongTransverse { field: usize, dir: usize },
    #[error("base component {comp} depends on x^{dir}, which is transverse for field {field}")]
    AdmittedBaseAlongTransverse { comp: usize, dir: usize, field: usize },
    #[error("fiber component {field} depends on y^{other}, whose jets leave the admitted set")]
    FiberCoupling { field: usize, other: usize },
    #[error("transverse base component {comp} depends on x^{dir}, which is admitted for field {field}")]
    TransverseAlongAdmitted { comp: usize, dir: usize, field: usize },
    #[error("fiber component {field} depends on y^{other} from another splitting class")]
    ClassMixing { field: usize, other: usize },
    #[error("splitting requires time and space components to stay separated (component {comp}, x^{dir})")]
    TimeSpaceMixing { comp: usize, dir: usize },
    #[error("frame must have {0} vectors with {0} components each")]
    FrameShape(usize),
    #[error("frame components may depend on base coordinates only")]
    FrameNotBasic,
    #[error("frame is degenerate")]
    FrameSingular,
    #[error("frame index {0} out of range")]
    FrameIndex(usize),
    #[error("frame admissibility fails at (sigma, nu) = ({sigma}, {nu})")]
    FrameAdmissibility { sigma: usize, nu: usize },
    #[error("fiber component {field} varies along transverse frame vector {sigma}")]
    FrameFiber { sigma: usize, field: usize },
    #[error("semibasic form needs {0} coefficients")]
    AlphaShape(usize),
    #[error("semibasic form coefficients may depend on base and fiber coordinates only")]
    AlphaNotOnY,
    #[error("connection must have {fields}x{dims} components")]
    ConnectionShape { fields: usize, dims: usize },
    #[error("connection components may depend on base and fiber coordinates only")]
    ConnectionNotOnY,
    #[error("base connection symbols must be symmetric: Gamma^{nu}_({la},{mu}) differs from its transpose")]
    AsymmetricChristoffel { nu: usize, la: usize, mu: usize },
}

pub(crate) fn vanishes(e: &Expr) -> bool {
    e.is_zero() || (!e.has_applied() && equivalent(e, &Expr::zero()).holds())
}

pub(crate) fn depends_on(e: &Expr, c: Coord) -> bool {
    !vanishes(&e.diff(c))
}

/// Check that a field lives on Y and is projectable.
pub(crate) fn check_on_y(xi: &VectorField) -> Result<(), LiftError> {
    for (c, e) in xi.components() {
        if !matches!(c, Coord::Base(_) | Coord::Fiber(_)) {
            return Err(LiftError::NotOnTotalSpace(c));
        }
        if let Some(bad) = e.coords().into_iter().find(|d| !matches!(d, Coord::Base(_) | Coord::Fiber(_))) {
            return Err(LiftError::NotOnTotalSpace(bad));
        }
    }
    if !xi.is_projectable() {
        return Err(LiftError::NotProjectable);
    }
    Ok(())
}

/// Conditions under which a projectable field lifts to the partial jet bundle.
pub fn check_liftable(ctx: &JetContext, xi: &VectorField) -> Result<(), LiftError> {
    check_on_y(xi)?;
    let n1 = ctx.base_dim();
    let m = ctx.field_count();
    let base = |nu: usize| xi.component(Coord::base(nu));
    let fiber = |i: usize| xi.component(Coord::fiber(i));
    for i in 0..m {
        let dirs = ctx.directions(i);
        let admitted = |mu: usize| dirs.contains(&mu);
        for mu in (0..n1).filter(|&mu| !admitted(mu)) {
            if depends_on(&fiber(i), Coord::base(mu)) {
                return Err(LiftError::FiberAlongTransverse { field: i, dir: mu });
            }
            for &nu in &dirs {
                if depends_on(&base(nu), Coord::base(mu)) {
                    return Err(LiftError::AdmittedBaseAlongTransverse { comp: nu, dir: mu, field: i });
                }
            }
        }
        for sigma in (0..n1).filter(|&s| !admitted(s)) {
            for &nu in &dirs {
                if depends_on(&base(sigma), Coord::base(nu)) {
                    return Err(LiftError::TransverseAlongAdmitted { comp: sigma, dir: nu, field: i });
                }
            }
        }
        for j in 0..m {
            let leaks = ctx.directions(j).into_iter().any(|mu| !admitted(mu));
            if leaks && depends_on(&fiber(i), Coord::fiber(j)) {
                return Err(LiftError::FiberCoupling { field: i, other: j });
            }
        }
    }
    if let JetKind::Split(classes) = ctx.kind() {
        if !ctx.is_full() {
            check_split(xi, classes, n1)?;
        }
    }
    Ok(())
}

fn check_split(xi: &VectorField, classes: &[Split], n1: usize) -> Result<(), LiftError> {
    for (i, ci) in classes.iter().enumerate() {
        for (j, cj) in classes.iter().enumerate() {
            if ci != cj && depends_on(&xi.component(Coord::fiber(i)), Coord::fiber(j)) {
                return Err(LiftError::ClassMixing { field: i, other: j });
            }
        }
    }
    for a in 1..n1 {
        if depends_on(&xi.component(Coord::base(a)), Coord::base(0)) {
            return Err(LiftError::TimeSpaceMixing { comp: a, dir: 0 });
        }
        if depends_on(&xi.component(Coord::base(0)), Coord::base(a)) {
            return Err(LiftError::TimeSpaceMixing { comp: 0, dir: a });
        }
    }
    Ok(())
}

/// First jet prolongation onto the admitted jet coordinates:
/// `xi^i_mu = d_mu xi^i - sum_{nu in D_i} z^i_nu d_mu xi^nu`, with the total
/// derivative restricted to admitted jets.
pub fn prolong_vector_field(ctx: &JetContext, xi: &VectorField) -> Result<VectorField, LiftError> {
    check_liftable(ctx, xi)?;
    let mut out = xi.clone();
    for (mu, i) in ctx.pairs() {
        out.set(Coord::jet(i, mu), jet_component(ctx, xi, mu, i));
    }
    Ok(out)
}

fn jet_component(ctx: &JetContext, xi: &VectorField, mu: usize, i: usize) -> Expr {
    let fi = xi.component(Coord::fiber(i));
    let mut terms: Vec<Expr> = alloc::vec![fi.diff(Coord::base(mu))];
    for j in 0..ctx.field_count() {
        if ctx.admits(mu, j) {
            terms.push(Expr::z(j, mu) * fi.diff(Coord::fiber(j)));
        }
    }
    for nu in ctx.directions(i) {
        terms.push(-(Expr::z(i, nu) * xi.component(Coord::base(nu)).diff(Coord::base(mu))));
    }
    Expr::add_all(terms)
}
