//! Small symbolic and numeric matrix helpers.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::symex::Expr;

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut terms = Vec::with_capacity(n);
            for (col, a) in m[0].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let minor = minor(m, 0, col);
                let t = a * &det(&minor);
                terms.push(if col % 2 == 0 { t } else { -t });
            }
            Expr::add_all(terms)
        }
    }
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(r, _)| *r != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, e)| e.clone()).collect())
        .collect()
}

/// Inverse through the adjugate; `None` when the determinant normalizes to zero.
pub fn inverse(m: &[Vec<Expr>]) -> Option<Vec<Vec<Expr>>> {
    let n = m.len();
    let d = det(m);
    if d.is_zero() {
        return None;
    }
    let inv_d = d.recip();
    if n == 1 {
        return Some(alloc::vec![alloc::vec![inv_d]]);
    }
    let mut out = alloc::vec![alloc::vec![Expr::zero(); n]; n];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            // adj[r][c] = (-1)^(r+c) det(minor(c, r))
            let cof = det(&minor(m, c, r));
            let cof = if (r + c) % 2 == 0 { cof } else { -cof };
            *slot = cof * &inv_d;
        }
    }
    Some(out)
}

pub fn transpose(m: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols).map(|c| (0..rows).map(|r| m[r][c].clone()).collect()).collect()
}

/// Numerical rank: singular values above `rel_tol` times the largest.
///
/// The flag reports a singular value within a factor 100 of the threshold.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> (usize, bool) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, false);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return (0, false);
    }
    let cut = rel_tol * max;
    let rank = sv.iter().filter(|s| **s > cut).count();
    let marginal = sv.iter().any(|s| *s > cut / 100.0 && *s < cut * 100.0);
    (rank, marginal)
}

/// Orthonormal basis of the numerical kernel (threshold as in [`rank`]).
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<Vec<f64>> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::<f64>::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * max;
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| max == 0.0 || **s <= cut)
        .map(|(k, _)| v_t.row(k).iter().copied().collect())
        .collect()
}
