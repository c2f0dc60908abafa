use alloc::vec::Vec;

use super::prolong::{vanishes, LiftError};
use super::JetContext;
use crate::forms::VectorField;
use crate::symex::{Coord, Expr};

/// Connection on Y given by `dy^i - L^i_mu(x, y) dx^mu = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    comps: Vec<Vec<Expr>>,
}

impl Connection {
    /// Components indexed `[field][direction]`.
    pub fn new(ctx: &JetContext, comps: Vec<Vec<Expr>>) -> Result<Connection, LiftError> {
        let (m, n1) = (ctx.field_count(), ctx.base_dim());
        if comps.len() != m || comps.iter().any(|r| r.len() != n1) {
            return Err(LiftError::ConnectionShape { fields: m, dims: n1 });
        }
        if comps.iter().flatten().any(|e| e.depends_on(&|c| !matches!(c, Coord::Base(_) | Coord::Fiber(_)))) {
            return Err(LiftError::ConnectionNotOnY);
        }
        Ok(Connection { comps })
    }

    pub fn flat(ctx: &JetContext) -> Connection {
        Connection { comps: alloc::vec![alloc::vec![Expr::zero(); ctx.base_dim()]; ctx.field_count()] }
    }

    pub fn component(&self, i: usize, mu: usize) -> &Expr {
        &self.comps[i][mu]
    }

    /// Horizontal lift `d_mu + L^i_mu d_i` on Y.
    pub fn horizontal(&self, mu: usize) -> VectorField {
        let mut out = VectorField::coordinate(Coord::base(mu));
        for (i, row) in self.comps.iter().enumerate() {
            out.set(Coord::fiber(i), row[mu].clone());
        }
        out
    }
}

/// Horizontal lifts of the coordinate fields to the admitted jet space, one per
/// direction, using base connection symbols `gamma[nu][la][mu]`.
pub fn prolong_connection(
    ctx: &JetContext,
    conn: &Connection,
    gamma: &[Vec<Vec<Expr>>],
) -> Result<Vec<VectorField>, LiftError> {
    let n1 = ctx.base_dim();
    for nu in 0..n1 {
        for la in 0..n1 {
            for mu in la + 1..n1 {
                if !vanishes(&(&gamma[nu][la][mu] - &gamma[nu][mu][la])) {
                    return Err(LiftError::AsymmetricChristoffel { nu, la, mu });
                }
            }
        }
    }
    let mut lifts = Vec::with_capacity(n1);
    for la in 0..n1 {
        let mut v = conn.horizontal(la);
        for (mu, i) in ctx.pairs() {
            let l = conn.component(i, mu);
            let mut terms = alloc::vec![l.diff(Coord::base(la))];
            for j in 0..ctx.field_count() {
                if ctx.admits(la, j) {
                    terms.push(Expr::z(j, la) * l.diff(Coord::fiber(j)));
                }
            }
            for nu in ctx.directions(i) {
                terms.push(&gamma[nu][la][mu] * (Expr::z(i, nu) - conn.component(i, nu)));
            }
            v.set(Coord::jet(i, mu), Expr::add_all(terms));
        }
        lifts.push(v);
    }
    Ok(lifts)
}
