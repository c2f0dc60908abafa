use alloc::vec::Vec;

use super::{Form, FormsError, VectorField};
use crate::jetspace::JetContext;
use crate::symex::{Coord, Expr};

/// `eta = vol dx^0 ^ ... ^ dx^n` and its contractions with up to two base
/// coordinate fields: `eta_mu = i_mu eta`, `eta_{mu nu} = i_nu i_mu eta`.
pub fn eta_form(ctx: &JetContext, indices: &[usize]) -> Result<Form, FormsError> {
    let n1 = ctx.base_dim();
    if indices.len() > 2 {
        return Err(FormsError::TooManyIndices);
    }
    if let Some(&bad) = indices.iter().find(|&&mu| mu >= n1) {
        return Err(FormsError::IndexOutOfRange(bad));
    }
    if indices.len() == 2 && indices[0] == indices[1] {
        return Err(FormsError::RepeatedIndex(indices[0]));
    }
    let all: Vec<Coord> = (0..n1).map(Coord::base).collect();
    let mut form = Form::monomial(ctx.vol().clone(), &all);
    for &mu in indices {
        form = interior_product(&VectorField::coordinate(Coord::base(mu)), &form);
    }
    Ok(form)
}

pub fn exterior_d(w: &Form) -> Form {
    let mut out = Form::zero();
    for (m, c) in w.terms() {
        for v in c.coords() {
            let dc = c.diff(v);
            if dc.is_zero() {
                continue;
            }
            let mut mono = Vec::with_capacity(m.len() + 1);
            mono.push(v);
            mono.extend_from_slice(m);
            out.push(dc, mono);
        }
    }
    out
}

/// Contraction `i_X w`, an antiderivation of degree -1.
pub fn interior_product(x: &VectorField, w: &Form) -> Form {
    let mut out = Form::zero();
    for (m, c) in w.terms() {
        for (k, v) in m.iter().enumerate() {
            let comp = x.component(*v);
            if comp.is_zero() {
                continue;
            }
            let mut rest = m.to_vec();
            rest.remove(k);
            let coeff = c * &comp;
            out.push(if k % 2 == 0 { coeff } else { -coeff }, rest);
        }
    }
    out
}

/// `L_X w = d i_X w + i_X d w`.
pub fn lie_derivative(x: &VectorField, w: &Form) -> Form {
    exterior_d(&interior_product(x, w)) + interior_product(x, &exterior_d(w))
}

impl Form {
    /// Apply a substitution to every coefficient.
    pub fn substitute(&self, b: &alloc::collections::BTreeMap<Coord, Expr>) -> Form {
        self.map_coefficients(|c| c.substitute(b))
    }
}
