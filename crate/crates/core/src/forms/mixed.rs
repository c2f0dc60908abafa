use alloc::string::String;

use super::{exterior_d, reduced_horizontal_d, Form, FormsError, Mode};
use crate::jetspace::JetContext;
use crate::symex::Names;

/// Pair `(alpha, beta)` of forms of degrees `k` and `k + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MixedForm {
    alpha: Form,
    beta: Form,
}

/// Degree of a homogeneous form; `Ok(None)` for zero.
fn homogeneous_degree(w: &Form) -> Result<Option<usize>, FormsError> {
    let mut degrees = w.terms().map(|(m, _)| m.len());
    let Some(first) = degrees.next() else { return Ok(None) };
    match degrees.find(|&k| k != first) {
        Some(other) => Err(FormsError::DegreeMismatch(first, other)),
        None => Ok(Some(first)),
    }
}

impl MixedForm {
    pub fn new(alpha: Form, beta: Form) -> Result<MixedForm, FormsError> {
        let a = homogeneous_degree(&alpha)?;
        let b = homogeneous_degree(&beta)?;
        if let (Some(a), Some(b)) = (a, b) {
            if b != a + 1 {
                return Err(FormsError::DegreeMismatch(a, b));
            }
        }
        Ok(MixedForm { alpha, beta })
    }

    pub fn alpha(&self) -> &Form {
        &self.alpha
    }

    pub fn beta(&self) -> &Form {
        &self.beta
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_zero() && self.beta.is_zero()
    }

    pub fn render(&self, names: &dyn Names) -> String {
        alloc::format!("[{}] + [{}]", self.alpha.render(names), self.beta.render(names))
    }
}

/// `d~(alpha, beta) = (-d alpha + beta, d beta)`.
pub fn iglesias_d(phi: &MixedForm) -> MixedForm {
    MixedForm { alpha: &phi.beta - &exterior_d(&phi.alpha), beta: exterior_d(&phi.beta) }
}

/// [`iglesias_d`] with `d` replaced by the reduced horizontal differential.
pub fn iglesias_dhat(ctx: &JetContext, phi: &MixedForm) -> MixedForm {
    MixedForm {
        alpha: &phi.beta - &reduced_horizontal_d(ctx, &phi.alpha, Mode::Full),
        beta: reduced_horizontal_d(ctx, &phi.beta, Mode::Full),
    }
}
