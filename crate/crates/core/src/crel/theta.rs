use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{ConstitutiveRelation, CoveringCr, CrelError};
use crate::forms::{eta_form, lie_derivative, total_derivative, Form, MixedForm, Mode};
use crate::jetspace::{prolong_connection, vanishes, Connection, JetContext};
use crate::symex::{Coord, Expr};

fn eta(ctx: &JetContext) -> Form {
    eta_form(ctx, &[]).expect("volume form")
}

fn eta_mu(ctx: &JetContext, mu: usize) -> Form {
    eta_form(ctx, &[mu]).expect("direction in range")
}

/// `F^mu_i (dy^i - L^i_nu dx^nu) ^ eta_mu`; without a connection `L = 0`.
fn flux_part(cr: &ConstitutiveRelation, conn: Option<&Connection>) -> Form {
    let ctx = cr.context();
    let mut out = Form::zero();
    let mut shift = Vec::new();
    for (i, row) in cr.fluxes().iter().enumerate() {
        for (mu, f) in row.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            out = out + Form::dy(i).wedge(&eta_mu(ctx, mu)).scale(f);
            if let Some(c) = conn {
                shift.push(f * c.component(i, mu));
            }
        }
    }
    if shift.is_empty() {
        out
    } else {
        out - eta(ctx).scale(&Expr::add_all(shift))
    }
}

fn source_part(cr: &ConstitutiveRelation) -> Form {
    let ctx = cr.context();
    let eta = eta(ctx);
    (0..ctx.field_count())
        .map(|i| cr.form_source(i))
        .enumerate()
        .filter(|(_, s)| !s.is_zero())
        .map(|(i, s)| Form::dy(i).wedge(&eta).scale(&s))
        .sum()
}

/// Poincare-Cartan form `F^mu_i dy^i ^ eta_mu + Pi_i dy^i ^ eta`, optionally
/// lifted by a connection on Y.
pub fn theta_pc(cr: &ConstitutiveRelation, conn: Option<&Connection>) -> MixedForm {
    MixedForm::new(flux_part(cr, conn), source_part(cr)).expect("homogeneous degrees")
}

/// [`theta_pc`] plus `p eta`.
pub fn theta_covering(ccr: &CoveringCr, conn: Option<&Connection>) -> MixedForm {
    let cr = ccr.relation();
    let alpha = flux_part(cr, conn) + eta(cr.context()).scale(ccr.p());
    MixedForm::new(alpha, source_part(cr)).expect("homogeneous degrees")
}

/// Coefficients of the two contact forms of a covering relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContactForms {
    /// Euler-Lagrange part, one entry per field.
    pub first: Vec<Expr>,
    /// Keyed by admitted `(mu, i)`.
    pub second: BTreeMap<(usize, usize), Expr>,
}

pub fn ccr_contact_forms(ccr: &CoveringCr) -> ContactForms {
    let cr = ccr.relation();
    let ctx = cr.context();
    let total = ccr.p() + &cr.jet_pairing();
    let first = (0..ctx.field_count())
        .map(|i| {
            let mut terms = Vec::new();
            for mu in 0..ctx.base_dim() {
                let f = cr.flux(mu, i);
                terms.push(total_derivative(ctx, mu, f, Mode::Full));
                terms.push(f * ctx.dlam(mu));
            }
            terms.push(-cr.form_source(i));
            terms.push(-total.diff(Coord::fiber(i)));
            Expr::add_all(terms)
        })
        .collect();
    let second = ctx.pairs().map(|(mu, i)| ((mu, i), cr.flux(mu, i) - total.diff(Coord::jet(i, mu)))).collect();
    ContactForms { first, second }
}

/// Per base direction: is the Poincare-Cartan form invariant, modulo multiples
/// of `eta`, under the lifted horizontal field of the connection?
pub fn is_homogeneous(cr: &ConstitutiveRelation, conn: &Connection) -> Result<Vec<bool>, CrelError> {
    let ctx = cr.context();
    let lifts = prolong_connection(ctx, conn, &ctx.christoffel())?;
    let theta = theta_pc(cr, None);
    let volume: Vec<Coord> = (0..ctx.base_dim()).map(Coord::base).collect();
    Ok(lifts
        .iter()
        .map(|x| {
            let la = lie_derivative(x, theta.alpha());
            let lb = lie_derivative(x, theta.beta());
            la.terms().all(|(m, c)| m == volume.as_slice() || vanishes(c)) && lb.terms().all(|(_, c)| vanishes(c))
        })
        .collect())
}
