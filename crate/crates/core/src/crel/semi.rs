use alloc::vec::Vec;

use super::ConstitutiveRelation;
use crate::symex::{equivalent, polynomial_coefficients, Coord, Equivalence, Expr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemiLagrangian {
    /// `F^mu_i = dL/dz^i_mu` with `L` vanishing at `z = 0`.
    Yes(Expr),
    /// Mixed derivatives of `F^sigma_i` and `F^lambda_j` disagree; pairs are `(mu, i)`.
    No { witness: ((usize, usize), (usize, usize)) },
    /// `symmetric` tells whether the mixed-derivative test passed; `L` could not
    /// be reconstructed in closed form.
    Inconclusive { symmetric: bool },
}

/// Mixed-derivative test `dF^s_i/dz^j_l = dF^l_j/dz^i_s` over admitted pairs,
/// followed by straight-line integration from `z = 0`.
pub fn is_semi_lagrangian(cr: &ConstitutiveRelation) -> SemiLagrangian {
    let ctx = cr.context();
    let pairs: Vec<(usize, usize)> = ctx.pairs().collect();
    let mut decided = true;
    for (a, &(s, i)) in pairs.iter().enumerate() {
        for &(l, j) in &pairs[a + 1..] {
            let lhs = cr.flux(s, i).diff(Coord::jet(j, l));
            let rhs = cr.flux(l, j).diff(Coord::jet(i, s));
            let diff = &lhs - &rhs;
            if diff.is_zero() {
                continue;
            }
            if diff.has_applied() {
                decided = false;
                continue;
            }
            if let Equivalence::NotEqual = equivalent(&lhs, &rhs) {
                return SemiLagrangian::No { witness: ((s, i), (l, j)) };
            }
        }
    }
    if !decided {
        return SemiLagrangian::Inconclusive { symmetric: false };
    }
    let is_jet = |c: Coord| matches!(c, Coord::Jet(..));
    let mut terms = Vec::new();
    for &(s, i) in &pairs {
        let Some(poly) = polynomial_coefficients(cr.flux(s, i), &is_jet) else {
            return SemiLagrangian::Inconclusive { symmetric: true };
        };
        for (mono, coeff) in poly {
            let degree = mono.len() as i64 + 1;
            let monomial = Expr::mul_all(mono.into_iter().map(Expr::coord));
            terms.push(Expr::z(i, s) * monomial * coeff * Expr::frac(1, degree));
        }
    }
    SemiLagrangian::Yes(Expr::add_all(terms))
}
