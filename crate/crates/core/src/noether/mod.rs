//! Admissible variations, symmetry determining equations, Noether currents and
//! the energy-momentum tensor.

use alloc::vec::Vec;

use crate::balance::{
    verify_section, BalanceError, BalanceLaw, BalanceSystem, NumericSection, Origin, SectionReport, VerifyOptions,
};
use crate::crel::{theta_covering, ConstitutiveRelation, CoveringCr, Kind};
use crate::forms::{
    contact_generators, exterior_d, horizontal_projection, interior_product, lie_derivative, reduced_horizontal_d, total_derivative, Form,
    Mode, VectorField,
};
use crate::jetspace::{prolong_vector_field, vanishes, Connection, JetContext, LiftError};
use crate::symex::{polynomial_coefficients, Coord, Expr};

mod determining;

pub use determining::{admissibility_system, DeterminingEquation, DeterminingSystem, Marker, Route};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NoetherError {
    #[error("vector field must be vertical (no base components)")]
    NotVertical,
    #[error("vector field components may depend on base, fiber and admitted jet coordinates only")]
    BadComponent(Coord),
    #[error("vector field has a base component along x^{0}, a direction carrying jet coordinates")]
    NotPVertical(usize),
    #[error("vector field is not admissible: FDiv = {residual}")]
    NotAdmissible { residual: alloc::string::String },
    #[error("coefficient of {0:?} is not polynomial in the jet coordinates")]
    NonPolynomial(Coord),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
}

fn check_vertical(xi: &VectorField) -> Result<(), NoetherError> {
    for (c, e) in xi.components() {
        match c {
            Coord::Base(_) => return Err(NoetherError::NotVertical),
            Coord::Fiber(_) => {}
            other => return Err(NoetherError::BadComponent(other)),
        }
        if let Some(bad) = e.coords().into_iter().find(|d| matches!(d, Coord::Jet2(..))) {
            return Err(NoetherError::BadComponent(bad));
        }
    }
    Ok(())
}

/// `FDiv(xi) = F^mu_i d_mu xi^i`, with section-following total derivatives.
pub fn fdiv(cr: &ConstitutiveRelation, xi: &VectorField) -> Result<Expr, NoetherError> {
    check_vertical(xi)?;
    let ctx = cr.context();
    let mut terms = Vec::new();
    for i in 0..ctx.field_count() {
        let xi_i = xi.component(Coord::fiber(i));
        if xi_i.is_zero() {
            continue;
        }
        for mu in 0..ctx.base_dim() {
            terms.push(cr.flux(mu, i) * total_derivative(ctx, mu, &xi_i, Mode::Full));
        }
    }
    Ok(Expr::add_all(terms))
}

/// `F^mu_i d_mu xi^i` with the fiber coordinates held fixed, so only explicit
/// base dependence of `xi` is differentiated.
pub fn fdiv_frozen(cr: &ConstitutiveRelation, xi: &VectorField) -> Result<Expr, NoetherError> {
    check_vertical(xi)?;
    let ctx = cr.context();
    let mut terms = Vec::new();
    for i in 0..ctx.field_count() {
        let xi_i = xi.component(Coord::fiber(i));
        for mu in 0..ctx.base_dim() {
            terms.push(cr.flux(mu, i) * xi_i.diff(Coord::base(mu)));
        }
    }
    Ok(Expr::add_all(terms))
}

/// Algebraic form `sum_{(mu,i) in P} xi^i_mu F^mu_i` for a field given on the
/// jet space; the field must be P-vertical.
pub fn p_vertical_form(cr: &ConstitutiveRelation, xi: &VectorField) -> Result<Expr, NoetherError> {
    let ctx = cr.context();
    if let Some((mu, _)) = ctx.pairs().find(|&(mu, _)| !xi.component(Coord::base(mu)).is_zero()) {
        return Err(NoetherError::NotPVertical(mu));
    }
    Ok(Expr::add_all(ctx.pairs().map(|(mu, i)| xi.component(Coord::jet(i, mu)) * cr.flux(mu, i))))
}

/// Secondary law `(xi^i F^mu_i) eta_mu + (xi^i Pi_i) eta` of an admissible vertical field.
pub fn secondary_balance_law(cr: &ConstitutiveRelation, xi: &VectorField) -> Result<BalanceLaw, NoetherError> {
    let residual = fdiv(cr, xi)?;
    if !vanishes(&residual) {
        return Err(NoetherError::NotAdmissible { residual: cr.context().render(&residual) });
    }
    let ctx = cr.context();
    let xs: Vec<Expr> = (0..ctx.field_count()).map(|i| xi.component(Coord::fiber(i))).collect();
    let flux = (0..ctx.base_dim())
        .map(|mu| Expr::add_all(xs.iter().enumerate().map(|(i, x)| x * cr.flux(mu, i))))
        .collect();
    let source = Expr::add_all(xs.iter().enumerate().map(|(i, x)| x * cr.source(i)));
    Ok(BalanceLaw { flux, source })
}

/// Flux and source families of the infinitesimal symmetry condition
/// `L_{xi^1} Theta_C = 0`, read off the `dy^i ^ eta_mu` and `dy^k ^ eta`
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetrySystem {
    /// Indexed `[i][mu]`.
    pub flux: Vec<Vec<Expr>>,
    pub source: Vec<Expr>,
}

impl SymmetrySystem {
    pub fn holds(&self) -> bool {
        self.flux.iter().flatten().chain(&self.source).all(vanishes)
    }

    /// Every equation split into coefficients of jet monomials.
    pub fn determining(&self) -> Result<DeterminingSystem, NoetherError> {
        let mut out = DeterminingSystem::default();
        for e in self.flux.iter().flatten().chain(&self.source) {
            let coeffs = polynomial_coefficients(e, &|c| matches!(c, Coord::Jet(..) | Coord::Jet2(..)))
                .ok_or_else(|| NoetherError::NonPolynomial(first_jet(e)))?;
            for (monomial, expr) in coeffs {
                out.push(Marker::Free, monomial, expr);
            }
        }
        Ok(out)
    }
}

fn first_jet(e: &Expr) -> Coord {
    e.coords().into_iter().find(|c| matches!(c, Coord::Jet(..) | Coord::Jet2(..))).unwrap_or(Coord::base(0))
}

/// Determining equations of a projectable field: Lie derivative of the flux
/// and source parts of the Poincare-Cartan form.
pub fn symmetry_system(cr: &ConstitutiveRelation, xi: &VectorField) -> Result<SymmetrySystem, NoetherError> {
    let ctx = cr.context();
    let xi1 = prolong_vector_field(ctx, xi)?;
    let (m, n1) = (ctx.field_count(), ctx.base_dim());
    let base: Vec<Expr> = xi.base_components(n1);
    let fib: Vec<Expr> = (0..m).map(|i| xi.component(Coord::fiber(i))).collect();
    let div = Expr::add_all((0..n1).map(|mu| base[mu].diff(Coord::base(mu)) + &base[mu] * ctx.dlam(mu)));
    let flux = (0..m)
        .map(|i| {
            (0..n1)
                .map(|nu| {
                    let mut terms = alloc::vec![xi1.apply(cr.flux(nu, i)), cr.flux(nu, i) * &div];
                    for j in 0..m {
                        terms.push(cr.flux(nu, j) * fib[j].diff(Coord::fiber(i)));
                    }
                    for mu in 0..n1 {
                        terms.push(-(cr.flux(mu, i) * base[nu].diff(Coord::base(mu))));
                    }
                    Expr::add_all(terms)
                })
                .collect()
        })
        .collect();
    let source = (0..m)
        .map(|k| {
            let mut terms = alloc::vec![xi1.apply(cr.source(k)), cr.source(k) * &div];
            for j in 0..m {
                terms.push(cr.source(j) * fib[j].diff(Coord::fiber(k)));
            }
            Expr::add_all(terms)
        })
        .collect();
    Ok(SymmetrySystem { flux, source })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymmetryClass {
    Variational,
    /// Symmetry up to the differential of the supplied form.
    Noether(Form),
    Cartan,
    None,
}

/// A field on Y is prolonged; a field with jet components is used as given.
fn lifted(ctx: &JetContext, xi: &VectorField) -> Result<VectorField, NoetherError> {
    if xi.components().any(|(c, _)| matches!(c, Coord::Jet(..))) {
        if let Some((c, _)) = xi.components().find(|(c, _)| !ctx.admits_coord(*c)) {
            return Err(NoetherError::BadComponent(c));
        }
        Ok(xi.clone())
    } else {
        Ok(prolong_vector_field(ctx, xi)?)
    }
}

fn horizontal_vanishes(ctx: &JetContext, w: &Form) -> bool {
    horizontal_projection(ctx, w, Mode::Reduced).terms().all(|(_, c)| vanishes(c))
}

/// Variational, Noether or Cartan symmetry of a covering relation.
///
/// Fields on Y are prolonged and tested for the variational, then the Noether
/// condition with `alpha`; fields given on the jet space are tested as Cartan
/// symmetries (contact ideal preserved, `alpha` defaulting to zero).
pub fn classify_symmetry(
    ccr: &CoveringCr,
    xi: &VectorField,
    alpha: Option<&Form>,
) -> Result<SymmetryClass, NoetherError> {
    let ctx = ccr.relation().context();
    let on_jets = xi.components().any(|(c, _)| matches!(c, Coord::Jet(..)));
    let x = lifted(ctx, xi)?;
    let theta = theta_covering(ccr, None);
    if !lie_derivative(&x, theta.beta()).terms().all(|(_, c)| vanishes(c)) {
        return Ok(SymmetryClass::None);
    }
    let l = lie_derivative(&x, theta.alpha());
    if on_jets {
        let preserves = contact_generators(ctx)
            .iter()
            .all(|w| horizontal_vanishes(ctx, &lie_derivative(&x, w)));
        let shifted = match alpha {
            Some(a) => &l - &exterior_d(a),
            None => l,
        };
        return Ok(if preserves && horizontal_vanishes(ctx, &shifted) { SymmetryClass::Cartan } else { SymmetryClass::None });
    }
    if horizontal_vanishes(ctx, &l) {
        return Ok(SymmetryClass::Variational);
    }
    match alpha {
        Some(a) if horizontal_vanishes(ctx, &(&l - &exterior_d(a))) => Ok(SymmetryClass::Noether(a.clone())),
        _ => Ok(SymmetryClass::None),
    }
}

/// Multimomentum `i_{xi^1} Theta^{n+1}`, an n-form on the jet space.
pub fn noether_current(ccr: &CoveringCr, xi: &VectorField) -> Result<Form, NoetherError> {
    let ctx = ccr.relation().context();
    let x = lifted(ctx, xi)?;
    Ok(interior_product(&x, theta_covering(ccr, None).alpha()))
}

fn admissibility_exempt(cr: &ConstitutiveRelation) -> bool {
    matches!(cr.kind(), Kind::Lagrangian(_) | Kind::SemiLagrangian { .. } | Kind::Ret)
}

/// Source entering the Noether balance: `Pi_i - d(p + z F)/dy^i`, which is
/// `Pi - L_y` for a Legendre covering and `Pi` for a lifted one.
fn noether_source(ccr: &CoveringCr, i: usize) -> Expr {
    let cr = ccr.relation();
    cr.source(i) - (ccr.p() + &cr.jet_pairing()).diff(Coord::fiber(i))
}

/// Scalar `R` with `d (j^1 s)^* J - (w^i(xi) Pi_i) eta = (R o j^2 s) eta`.
pub fn noether_balance(ccr: &CoveringCr, xi: &VectorField) -> Result<BalanceSystem, NoetherError> {
    let cr = ccr.relation();
    let ctx = cr.context();
    let x = lifted(ctx, xi)?;
    if !admissibility_exempt(cr) {
        let residual = p_vertical_form(cr, &x)?;
        if !vanishes(&residual) {
            return Err(NoetherError::NotAdmissible { residual: ctx.render(&residual) });
        }
    }
    let current = interior_product(&x, theta_covering(ccr, None).alpha());
    let horizontal = horizontal_projection(ctx, &current, Mode::Full);
    let top: Vec<Coord> = (0..ctx.base_dim()).map(Coord::base).collect();
    let div = reduced_horizontal_d(ctx, &horizontal, Mode::Full).coefficient(&top) * ctx.vol().recip();
    let rhs = Expr::add_all((0..ctx.field_count()).map(|i| x.characteristic(ctx, i) * noether_source(ccr, i)));
    Ok(BalanceSystem::new(ctx, alloc::vec![div - rhs], Origin::Noether))
}

/// Noether balance residual along a section, exact or finite-difference.
pub fn noether_residual(
    ccr: &CoveringCr,
    xi: &VectorField,
    section: &NumericSection,
    opts: &VerifyOptions,
) -> Result<SectionReport, NoetherError> {
    Ok(verify_section(&noether_balance(ccr, xi)?, section, opts)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnergyMomentum {
    /// `T^nu_mu`, indexed `[nu][mu]`.
    pub tensor: Vec<Vec<Expr>>,
    /// `F^nu_i d_nu Gamma^i_mu` per direction.
    pub conditions: Vec<Expr>,
    /// Whether the lifted horizontal field along each direction is admissible.
    pub admissible: Vec<bool>,
}

/// `T^nu_mu = F^nu_i G^i_mu - delta^nu_mu F^s_i z^i_s + F^nu_i z^i_mu` for the
/// connection `dy^i - G^i_mu dx^mu`.
pub fn energy_momentum(cr: &ConstitutiveRelation, conn: &Connection) -> EnergyMomentum {
    let ctx = cr.context();
    let (m, n1) = (ctx.field_count(), ctx.base_dim());
    let trace = Expr::add_all((0..m).flat_map(|i| (0..n1).map(move |s| (i, s))).map(|(i, s)| cr.flux(s, i) * Expr::z(i, s)));
    let tensor = (0..n1)
        .map(|nu| {
            (0..n1)
                .map(|mu| {
                    let mut terms: Vec<Expr> =
                        (0..m).map(|i| cr.flux(nu, i) * (conn.component(i, mu) + Expr::z(i, mu))).collect();
                    if nu == mu {
                        terms.push(-&trace);
                    }
                    Expr::add_all(terms)
                })
                .collect()
        })
        .collect();
    let conditions: Vec<Expr> = (0..n1)
        .map(|mu| {
            Expr::add_all((0..m).flat_map(|i| {
                (0..n1).map(move |nu| cr.flux(nu, i) * total_derivative(ctx, nu, conn.component(i, mu), Mode::Full))
            }))
        })
        .collect();
    let exempt = admissibility_exempt(cr);
    let admissible = (0..n1)
        .map(|mu| exempt || (ctx.pairs().all(|(nu, _)| nu != mu) && vanishes(&conditions[mu])))
        .collect();
    EnergyMomentum { tensor, conditions, admissible }
}

/// `d_nu T^nu_mu + T^nu_mu dlam_nu - Pi_i (G^i_mu - z^i_mu)`, one residual per direction.
pub fn energy_momentum_balance(cr: &ConstitutiveRelation, conn: &Connection) -> BalanceSystem {
    let ctx = cr.context();
    let (m, n1) = (ctx.field_count(), ctx.base_dim());
    let t = energy_momentum(cr, conn).tensor;
    let residuals = (0..n1)
        .map(|mu| {
            let mut terms = Vec::new();
            for (nu, row) in t.iter().enumerate() {
                terms.push(total_derivative(ctx, nu, &row[mu], Mode::Full));
                terms.push(&row[mu] * ctx.dlam(nu));
            }
            for i in 0..m {
                terms.push(-(cr.source(i) * (conn.component(i, mu) - Expr::z(i, mu))));
            }
            Expr::add_all(terms)
        })
        .collect();
    BalanceSystem::new(ctx, residuals, Origin::EnergyMomentum)
}
