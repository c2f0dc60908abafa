use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{check_vertical, NoetherError};
use crate::crel::ConstitutiveRelation;
use crate::forms::VectorField;
use crate::jetspace::vanishes;
use crate::symex::{polynomial_coefficients, Coord, Expr};

/// Which jet variable produced by the total derivative an equation is the
/// coefficient of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Marker {
    /// Terms free of chain-rule jets.
    Free,
    /// Coefficient of `z^field_dir`.
    First { field: usize, dir: usize },
    /// Coefficient of `z^field_{a b}`, `a <= b`.
    Second { field: usize, a: usize, b: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminingEquation {
    pub marker: Marker,
    /// Jet monomial of the ansatz itself multiplying the marker.
    pub monomial: Vec<Coord>,
    pub expr: Expr,
}

/// Equations whose simultaneous vanishing characterizes the property tested.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeterminingSystem {
    pub equations: Vec<DeterminingEquation>,
}

impl DeterminingSystem {
    pub(super) fn push(&mut self, marker: Marker, monomial: Vec<Coord>, expr: Expr) {
        if !expr.is_zero() {
            self.equations.push(DeterminingEquation { marker, monomial, expr });
        }
    }

    /// Equations not identically zero.
    pub fn nontrivial(&self) -> impl Iterator<Item = &DeterminingEquation> {
        self.equations.iter().filter(|e| !vanishes(&e.expr))
    }

    pub fn is_satisfied(&self) -> bool {
        self.nontrivial().next().is_none()
    }

    pub fn get(&self, marker: Marker) -> Option<&Expr> {
        self.equations.iter().find(|e| e.marker == marker && e.monomial.is_empty()).map(|e| &e.expr)
    }
}

/// Which pairs `(mu, i)` the admissibility sum runs over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Route {
    /// Every direction: `FDiv = F^mu_i d_mu xi^i`.
    #[default]
    Full,
    /// Admitted pairs only, the algebraic P-vertical form with `xi^i_mu = d_mu xi^i`.
    Admitted,
}

/// Admissibility condition of a vertical ansatz split by the jet variables the
/// total derivative introduces. Jet dependence of the fluxes is kept inside the
/// coefficients; the ansatz may itself be polynomial in admitted jets, whose
/// monomials split the equations further.
pub fn admissibility_system(
    cr: &ConstitutiveRelation,
    xi: &VectorField,
    route: Route,
) -> Result<DeterminingSystem, NoetherError> {
    check_vertical(xi)?;
    let ctx = cr.context();
    let (m, n1) = (ctx.field_count(), ctx.base_dim());
    let mut acc: BTreeMap<(Marker, Vec<Coord>), Vec<Expr>> = BTreeMap::new();
    let is_jet = |c: Coord| matches!(c, Coord::Jet(..));
    let mut add = |marker: Marker, f: &Expr, g: Expr| -> Result<(), NoetherError> {
        if g.is_zero() {
            return Ok(());
        }
        let coeffs = polynomial_coefficients(&g, &is_jet).ok_or_else(|| {
            NoetherError::NonPolynomial(g.coords().into_iter().find(|c| is_jet(*c)).unwrap_or(Coord::base(0)))
        })?;
        for (mono, c) in coeffs {
            acc.entry((marker, mono)).or_default().push(f * &c);
        }
        Ok(())
    };
    for i in 0..m {
        let x = xi.component(Coord::fiber(i));
        if x.is_zero() {
            continue;
        }
        for mu in 0..n1 {
            if route == Route::Admitted && !ctx.admits(mu, i) {
                continue;
            }
            let f = cr.flux(mu, i);
            if f.is_zero() {
                continue;
            }
            add(Marker::Free, f, x.diff(Coord::base(mu)))?;
            for j in 0..m {
                add(Marker::First { field: j, dir: mu }, f, x.diff(Coord::fiber(j)))?;
            }
            for (j, s) in ctx.pairs().map(|(s, j)| (j, s)) {
                let (a, b) = if s <= mu { (s, mu) } else { (mu, s) };
                add(Marker::Second { field: j, a, b }, f, x.diff(Coord::jet(j, s)))?;
            }
        }
    }
    let mut out = DeterminingSystem::default();
    for ((marker, mono), terms) in acc {
        out.push(marker, mono, Expr::add_all(terms));
    }
    Ok(out)
}
