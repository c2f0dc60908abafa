use alloc::vec::Vec;

use super::prolong::{check_on_y, LiftError};
use super::JetContext;
use crate::forms::VectorField;
use crate::symex::{Coord, Expr};

/// `div xi + xi^mu dlam_mu`, the rate at which `xi` scales the volume form.
fn volume_rate(ctx: &JetContext, xi: &VectorField) -> Expr {
    let n1 = ctx.base_dim();
    Expr::add_all((0..n1).map(|mu| {
        let x = xi.component(Coord::base(mu));
        x.diff(Coord::base(mu)) + &x * ctx.dlam(mu)
    }))
}

/// Lift to the multimomentum bundle with coordinates `(x, y, p, p^mu_i)` that
/// moves the canonical form `p eta + p^mu_i dy^i ^ eta_mu` by `-d alpha`,
/// where `alpha = alpha^nu eta_nu`.
pub fn lift_to_momentum_bundle(ctx: &JetContext, xi: &VectorField, alpha: &[Expr]) -> Result<VectorField, LiftError> {
    check_on_y(xi)?;
    let n1 = ctx.base_dim();
    let m = ctx.field_count();
    let alpha: Vec<Expr> = match alpha.len() {
        0 => alloc::vec![Expr::zero(); n1],
        k if k == n1 => alpha.to_vec(),
        _ => return Err(LiftError::AlphaShape(n1)),
    };
    if alpha.iter().any(|a| a.depends_on(&|c| !matches!(c, Coord::Base(_) | Coord::Fiber(_)))) {
        return Err(LiftError::AlphaNotOnY);
    }
    let rate = volume_rate(ctx, xi);
    let p = Expr::coord(Coord::MomentumScalar);
    let pm = |mu: usize, i: usize| Expr::coord(Coord::Momentum(mu as u16, i as u16));
    let base = |mu: usize| xi.component(Coord::base(mu));
    let fiber = |i: usize| xi.component(Coord::fiber(i));

    let mut scalar = alloc::vec![-(&p * &rate)];
    for mu in 0..n1 {
        for i in 0..m {
            scalar.push(-(pm(mu, i) * fiber(i).diff(Coord::base(mu))));
        }
        scalar.push(-alpha[mu].diff(Coord::base(mu)));
        scalar.push(-(&alpha[mu] * ctx.dlam(mu)));
    }
    let mut out = xi.clone();
    out.set(Coord::MomentumScalar, Expr::add_all(scalar));
    for mu in 0..n1 {
        for i in 0..m {
            let mut terms = Vec::new();
            for nu in 0..n1 {
                terms.push(pm(nu, i) * base(mu).diff(Coord::base(nu)));
            }
            for j in 0..m {
                terms.push(-(pm(mu, j) * fiber(j).diff(Coord::fiber(i))));
            }
            terms.push(-(pm(mu, i) * &rate));
            terms.push(-alpha[mu].diff(Coord::fiber(i)));
            out.set(Coord::Momentum(mu as u16, i as u16), Expr::add_all(terms));
        }
    }
    Ok(out)
}

/// Lift to the source bundle `(x, y, q_i)` leaving `q_i dy^i ^ eta` invariant.
pub fn lift_to_source_bundle(ctx: &JetContext, xi: &VectorField) -> Result<VectorField, LiftError> {
    check_on_y(xi)?;
    let m = ctx.field_count();
    let rate = volume_rate(ctx, xi);
    let q = |i: usize| Expr::coord(Coord::Source(i as u16));
    let mut out = xi.clone();
    for k in 0..m {
        let mut terms = alloc::vec![-(q(k) * &rate)];
        for j in 0..m {
            terms.push(-(q(j) * xi.component(Coord::fiber(j)).diff(Coord::fiber(k))));
        }
        out.set(Coord::Source(k as u16), Expr::add_all(terms));
    }
    Ok(out)
}
