use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{ConstitutiveRelation, CoveringCr, CrelError, Kind};
use crate::jetspace::{vanishes, JetContext};
use crate::linalg;
use crate::symex::{Coord, Expr};

/// Fibered map `(x, y) -> (phibar(x), phi(x, y))`, optionally with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    base: Vec<Expr>,
    fiber: Vec<Expr>,
    inverse: Option<Box<(Vec<Expr>, Vec<Expr>)>>,
}

fn jacobian(f: &[Expr], vars: impl Fn(usize) -> Coord, n: usize) -> Vec<Vec<Expr>> {
    f.iter().map(|e| (0..n).map(|k| e.diff(vars(k))).collect()).collect()
}

impl Automorphism {
    pub fn new(ctx: &JetContext, base: Vec<Expr>, fiber: Vec<Expr>) -> Result<Self, CrelError> {
        let (n1, m) = (ctx.base_dim(), ctx.field_count());
        if base.len() != n1 || fiber.len() != m {
            return Err(CrelError::AutomorphismShape(n1, m));
        }
        if base.iter().any(|e| e.depends_on(&|c| !matches!(c, Coord::Base(_)))) {
            return Err(CrelError::NotProjectable);
        }
        if fiber.iter().any(|e| e.depends_on(&|c| !matches!(c, Coord::Base(_) | Coord::Fiber(_)))) {
            return Err(CrelError::FiberNotOnY);
        }
        let jb = linalg::det(&jacobian(&base, Coord::base, n1));
        let jf = linalg::det(&jacobian(&fiber, Coord::fiber, m));
        if vanishes(&jb) || vanishes(&jf) {
            return Err(CrelError::SingularJacobian);
        }
        Ok(Automorphism { base, fiber, inverse: None })
    }

    pub fn identity(ctx: &JetContext) -> Self {
        let base = (0..ctx.base_dim()).map(Expr::x).collect::<Vec<_>>();
        let fiber = (0..ctx.field_count()).map(Expr::y).collect::<Vec<_>>();
        Automorphism { inverse: Some(Box::new((base.clone(), fiber.clone()))), base, fiber }
    }

    /// Attach the inverse map after checking both compositions.
    pub fn with_inverse(self, ctx: &JetContext, base: Vec<Expr>, fiber: Vec<Expr>) -> Result<Self, CrelError> {
        let inv = Automorphism::new(ctx, base, fiber)?;
        if !composes_to_identity(&self, &inv) || !composes_to_identity(&inv, &self) {
            return Err(CrelError::BadInverse);
        }
        Ok(Automorphism { inverse: Some(Box::new((inv.base, inv.fiber))), ..self })
    }

    pub fn inverse(&self) -> Option<Automorphism> {
        let (b, f) = self.inverse.as_deref()?.clone();
        Some(Automorphism { base: b, fiber: f, inverse: Some(Box::new((self.base.clone(), self.fiber.clone()))) })
    }

    pub fn base(&self) -> &[Expr] {
        &self.base
    }

    pub fn fiber(&self) -> &[Expr] {
        &self.fiber
    }

    fn y_images(&self) -> BTreeMap<Coord, Expr> {
        let base = self.base.iter().enumerate().map(|(mu, e)| (Coord::base(mu), e.clone()));
        let fiber = self.fiber.iter().enumerate().map(|(i, e)| (Coord::fiber(i), e.clone()));
        base.chain(fiber).collect()
    }

    /// Images of all coordinates of the jet space under the first prolongation.
    pub fn prolonged_images(&self, ctx: &JetContext) -> Result<BTreeMap<Coord, Expr>, CrelError> {
        let n1 = ctx.base_dim();
        let a_inv = base_jacobian_inverse(self, n1)?;
        let mut out = self.y_images();
        for (mu, i) in ctx.pairs() {
            let phi = &self.fiber[i];
            let z = Expr::add_all((0..n1).map(|nu| {
                let d = phi.diff(Coord::base(nu))
                    + Expr::add_all((0..ctx.field_count()).map(|j| Expr::z(j, nu) * phi.diff(Coord::fiber(j))));
                d * &a_inv[nu][mu]
            }));
            if z.coords().into_iter().any(|c| !ctx.admits_coord(c)) {
                return Err(CrelError::StructureViolation(Coord::jet(i, mu)));
            }
            out.insert(Coord::jet(i, mu), z);
        }
        Ok(out)
    }
}

fn base_jacobian_inverse(phi: &Automorphism, n1: usize) -> Result<Vec<Vec<Expr>>, CrelError> {
    linalg::inverse(&jacobian(&phi.base, Coord::base, n1)).ok_or(CrelError::SingularJacobian)
}

fn composes_to_identity(outer: &Automorphism, inner: &Automorphism) -> bool {
    let b = inner.y_images();
    let base = outer.base.iter().enumerate().map(|(mu, e)| e.substitute(&b) - Expr::x(mu));
    let fiber = outer.fiber.iter().enumerate().map(|(i, e)| e.substitute(&b) - Expr::y(i));
    base.chain(fiber).all(|e| vanishes(&e))
}

/// Covering relation whose Poincare-Cartan form is the pullback of that of
/// `ccr` by the prolonged map: components are composed with the prolongation
/// and recombined with `det J`, `J^-1` and `dphi/dy`.
pub fn transform_cr(ccr: &CoveringCr, phi: &Automorphism) -> Result<CoveringCr, CrelError> {
    let cr = ccr.relation();
    let ctx = cr.context();
    let (n1, m) = (ctx.base_dim(), ctx.field_count());
    let images = phi.prolonged_images(ctx)?;
    let a_inv = base_jacobian_inverse(phi, n1)?;
    let det = linalg::det(&jacobian(&phi.base, Coord::base, n1)) * ctx.vol().substitute(&images) * ctx.vol().recip();
    let compose = |e: &Expr| e.substitute(&images);
    let flux: Vec<Vec<Expr>> = (0..m).map(|i| (0..n1).map(|mu| compose(cr.flux(mu, i))).collect()).collect();
    let dphi = |j: usize, c: Coord| phi.fiber[j].diff(c);

    let mut p = alloc::vec![compose(ccr.p())];
    for (i, row) in flux.iter().enumerate() {
        for (mu, f) in row.iter().enumerate() {
            for (nu, a_row) in a_inv.iter().enumerate() {
                p.push(f * &dphi(i, Coord::base(nu)) * &a_row[mu]);
            }
        }
    }
    let p = Expr::add_all(p) * &det;
    let new_flux = (0..m)
        .map(|j| {
            (0..n1)
                .map(|nu| {
                    let terms = (0..n1).flat_map(|mu| {
                        let flux = &flux;
                        let a = &a_inv[nu][mu];
                        (0..m).map(move |i| &flux[i][mu] * &dphi(i, Coord::fiber(j)) * a)
                    });
                    Expr::add_all(terms.collect::<Vec<_>>()) * &det
                })
                .collect()
        })
        .collect();
    let new_source = (0..m)
        .map(|j| Expr::add_all((0..m).map(|i| compose(cr.source(i)) * dphi(i, Coord::fiber(j)))) * &det)
        .collect();
    let kind = if matches!(cr.kind(), Kind::Ret) { Kind::Ret } else { Kind::General };
    let mut out = ConstitutiveRelation::build(ctx, new_flux, new_source, kind)?;
    out.negated = cr.negated;
    CoveringCr::new(out, p)
}

/// Image of `ccr` under `phi`: [`transform_cr`] by the inverse map.
pub fn push_forward_cr(ccr: &CoveringCr, phi: &Automorphism) -> Result<CoveringCr, CrelError> {
    let inv = phi.inverse().ok_or(CrelError::NoInverse)?;
    transform_cr(ccr, &inv)
}
