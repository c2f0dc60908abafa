use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::BalanceError;
use crate::crel::ConstitutiveRelation;
use crate::jetspace::depends_on;
use crate::linalg::{null_space, rank};
use crate::symex::{Coord, Expr};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Counts of hyperbolic, parabolic and stationary fields at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeIndex {
    pub hyperbolic: usize,
    pub parabolic: usize,
    pub stationary: usize,
    /// Basis of `ker A2` (no second time derivatives).
    pub k2: Vec<Vec<f64>>,
    /// Complement of `k` inside `k2` (parabolic directions).
    pub k1: Vec<Vec<f64>>,
    /// Basis of `ker A1 & ker A2` (no time derivatives at all).
    pub k: Vec<Vec<f64>>,
    /// `det A1 != 0`, reported when no time jets are admitted.
    pub regular: Option<bool>,
    /// Some singular value sits close to the threshold.
    pub marginal: bool,
}

fn matrix(rows: &[Vec<Expr>], point: &BTreeMap<Coord, f64>, params: &BTreeMap<String, f64>) -> Result<DMatrix<f64>, BalanceError> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let mut out = DMatrix::zeros(m, n);
    for (r, row) in rows.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            out[(r, c)] = e.eval(point, params)?;
        }
    }
    Ok(out)
}

fn orthonormal_complement(basis: &[Vec<f64>], inside: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut kept: Vec<Vec<f64>> = basis.to_vec();
    let mut out = Vec::new();
    for v in inside {
        let mut w = v.clone();
        for u in &kept {
            let c = dot(&w, u);
            w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
        let norm = libm::sqrt(dot(&w, &w));
        if norm > 1e-8 {
            w.iter_mut().for_each(|x| *x /= norm);
            kept.push(w.clone());
            out.push(w);
        }
    }
    out
}

/// Type index from `A1 = dF^0/dy` and `A2 = dF^0/dy_t` at a point.
pub fn classify(
    cr: &ConstitutiveRelation,
    point: &BTreeMap<Coord, f64>,
    params: &BTreeMap<String, f64>,
) -> Result<TypeIndex, BalanceError> {
    let ctx = cr.context();
    let m = ctx.field_count();
    for j in (0..m).filter(|&j| ctx.admits(0, j)) {
        let zt = Coord::jet(j, 0);
        for i in 0..m {
            if (1..ctx.base_dim()).any(|a| depends_on(cr.flux(a, i), zt)) {
                return Err(BalanceError::TimeDerivativeOutsideFlux { field: j, place: "a spatial flux" });
            }
            if depends_on(cr.source(i), zt) {
                return Err(BalanceError::TimeDerivativeOutsideFlux { field: j, place: "a source" });
            }
        }
    }
    let a1: Vec<Vec<Expr>> = (0..m).map(|i| (0..m).map(|j| cr.flux(0, i).diff(Coord::fiber(j))).collect()).collect();
    let a2: Vec<Vec<Expr>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if ctx.admits(0, j) { cr.flux(0, i).diff(Coord::jet(j, 0)) } else { Expr::zero() })
                .collect()
        })
        .collect();
    let a1 = matrix(&a1, point, params)?;
    let a2 = matrix(&a2, point, params)?;
    let mut stacked = DMatrix::zeros(2 * m, m);
    stacked.view_mut((0, 0), (m, m)).copy_from(&a1);
    stacked.view_mut((m, 0), (m, m)).copy_from(&a2);

    let (r2, marg2) = rank(&a2, RANK_TOL);
    let (rs, marg_s) = rank(&stacked, RANK_TOL);
    let (r1, marg1) = rank(&a1, RANK_TOL);
    let k2 = null_space(&a2, RANK_TOL);
    let k = null_space(&stacked, RANK_TOL);
    let k1 = orthonormal_complement(&k, &k2);
    let hyperbolic = r2;
    let stationary = m - rs;
    let has_time_jets = (0..m).any(|j| ctx.admits(0, j));
    Ok(TypeIndex {
        hyperbolic,
        parabolic: m - hyperbolic - stationary,
        stationary,
        k2,
        k1,
        k,
        regular: if has_time_jets { None } else { Some(r1 == m) },
        marginal: marg1 || marg2 || marg_s,
    })
}
