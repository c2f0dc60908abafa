use alloc::vec::Vec;

use super::prolong::{check_on_y, vanishes, LiftError};
use super::JetContext;
use crate::forms::VectorField;
use crate::linalg;
use crate::symex::{Coord, Expr};

/// Base frame `xi_mu = E[mu][la] d/dx^la` with its coframe and torsion.
#[derive(Clone, Debug)]
pub struct Frame {
    vectors: Vec<Vec<Expr>>,
    coframe: Vec<Vec<Expr>>,
    torsion: Vec<Vec<Vec<Expr>>>,
}

impl Frame {
    pub fn new(ctx: &JetContext, vectors: Vec<Vec<Expr>>) -> Result<Frame, LiftError> {
        let n1 = ctx.base_dim();
        if vectors.len() != n1 || vectors.iter().any(|v| v.len() != n1) {
            return Err(LiftError::FrameShape(n1));
        }
        if vectors.iter().flatten().any(|e| e.depends_on(&|c| !matches!(c, Coord::Base(_)))) {
            return Err(LiftError::FrameNotBasic);
        }
        let coframe = linalg::inverse(&linalg::transpose(&vectors)).ok_or(LiftError::FrameSingular)?;
        let half = Expr::frac(1, 2);
        let mut torsion = alloc::vec![alloc::vec![alloc::vec![Expr::zero(); n1]; n1]; n1];
        for (mu, t_mu) in torsion.iter_mut().enumerate() {
            for a in 0..n1 {
                for b in 0..n1 {
                    let mut terms = Vec::new();
                    for k in 0..n1 {
                        for l in 0..n1 {
                            let dc = coframe[mu][l].diff(Coord::base(k));
                            if dc.is_zero() {
                                continue;
                            }
                            let w = &vectors[a][k] * &vectors[b][l] - &vectors[a][l] * &vectors[b][k];
                            terms.push(dc * w);
                        }
                    }
                    t_mu[a][b] = Expr::add_all(terms) * &half;
                }
            }
        }
        Ok(Frame { vectors, coframe, torsion })
    }

    /// Coordinate frame `d/dx^mu`.
    pub fn holonomic(ctx: &JetContext) -> Frame {
        let n1 = ctx.base_dim();
        let id = (0..n1).map(|a| (0..n1).map(|b| Expr::int(i64::from(a == b))).collect()).collect();
        Frame::new(ctx, id).expect("identity frame is valid")
    }

    pub fn vectors(&self) -> &[Vec<Expr>] {
        &self.vectors
    }

    /// `C[mu][la]` with `psi^mu = C[mu][la] dx^la`.
    pub fn coframe(&self) -> &[Vec<Expr>] {
        &self.coframe
    }

    /// `T^mu_{ab}` with `d psi^mu = T^mu_{ab} psi^a ^ psi^b`, indexed `[mu][a][b]`.
    pub fn torsion(&self) -> &[Vec<Vec<Expr>>] {
        &self.torsion
    }

    pub fn is_holonomic(&self) -> bool {
        self.torsion.iter().flatten().flatten().all(vanishes)
    }

    /// Derivative of a function along frame vector `nu`.
    pub fn apply(&self, nu: usize, f: &Expr) -> Expr {
        Expr::add_all(self.vectors[nu].iter().enumerate().map(|(l, e)| e * &f.diff(Coord::base(l))))
    }

    /// Frame components `psi^b(xi)` of the base part of a field.
    pub fn components(&self, xi: &VectorField) -> Vec<Expr> {
        let base = xi.base_components(self.vectors.len());
        self.coframe.iter().map(|row| Expr::add_all(row.iter().zip(&base).map(|(c, x)| c * x))).collect()
    }
}

/// Prolongation in an adapted frame; the jet coordinate `Jet(i, nu)` stands for
/// the frame derivative `xi_nu . y^i` for `nu` in `k`.
pub fn prolong_in_frame(
    ctx: &JetContext,
    xi: &VectorField,
    frame: &Frame,
    k: &[usize],
) -> Result<VectorField, LiftError> {
    check_on_y(xi)?;
    let n1 = ctx.base_dim();
    if let Some(&bad) = k.iter().find(|&&nu| nu >= n1) {
        return Err(LiftError::FrameIndex(bad));
    }
    let bar = frame.components(xi);
    let t = frame.torsion();
    let two = Expr::int(2);
    // ξ_ν·ξ̄^β + 2 T^β_{δν} ξ̄^δ
    let transport = |nu: usize, beta: usize| {
        let mut terms = alloc::vec![frame.apply(nu, &bar[beta])];
        for (d, b) in bar.iter().enumerate() {
            terms.push(&two * &t[beta][d][nu] * b);
        }
        Expr::add_all(terms)
    };
    for sigma in (0..n1).filter(|s| !k.contains(s)) {
        for &nu in k {
            if !vanishes(&transport(sigma, nu)) {
                return Err(LiftError::FrameAdmissibility { sigma, nu });
            }
        }
        for i in 0..ctx.field_count() {
            if !vanishes(&frame.apply(sigma, &xi.component(Coord::fiber(i)))) {
                return Err(LiftError::FrameFiber { sigma, field: i });
            }
        }
    }
    let mut out = xi.clone();
    for i in 0..ctx.field_count() {
        let fi = xi.component(Coord::fiber(i));
        for &nu in k {
            let mut terms = alloc::vec![frame.apply(nu, &fi)];
            for j in 0..ctx.field_count() {
                terms.push(Expr::z(j, nu) * fi.diff(Coord::fiber(j)));
            }
            for &beta in k {
                terms.push(-(Expr::z(i, beta) * transport(nu, beta)));
            }
            out.set(Coord::jet(i, nu), Expr::add_all(terms));
        }
    }
    Ok(out)
}
