//! Exterior algebra over jet coordinates.

mod horizontal;
mod mixed;
mod ops;
mod vector;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Add, Neg, Sub};

use crate::symex::{Coord, Expr, Names};

pub use horizontal::{
    contact_generators, horizontal_d, horizontal_projection, pullback, pullback_section, reduced_horizontal_d, total_derivative,
    vertical_endomorphism, Mode,
};
pub use mixed::{iglesias_d, iglesias_dhat, MixedForm};
pub use ops::{eta_form, exterior_d, interior_product, lie_derivative};
pub use vector::VectorField;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FormsError {
    #[error("repeated index {0} in eta form")]
    RepeatedIndex(usize),
    #[error("eta form takes at most two indices")]
    TooManyIndices,
    #[error("base index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("operation needs the full jet bundle")]
    NotFullJet,
    #[error("expected a 1-form")]
    NotDegreeOne,
    #[error("section components may depend on base coordinates only")]
    SectionNotBasic,
    #[error("section has {got} components for {fields} fields")]
    SectionLength { got: usize, fields: usize },
    #[error("form involves differentials of dual-bundle coordinates")]
    DualCoordinate,
    #[error("mixed form degrees {0} and {1} do not differ by one")]
    DegreeMismatch(usize, usize),
}

/// Graded sum of wedge monomials with symbolic coefficients.
///
/// Monomials are strictly increasing lists of coordinates, read as
/// `dc_1 ^ dc_2 ^ ...`; the sign of any reordering lives in the coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Form {
    terms: BTreeMap<Vec<Coord>, Expr>,
}

/// Sort `cs` in place; returns the permutation sign, or 0 on a repeat.
fn sort_sign(cs: &mut [Coord]) -> i64 {
    let mut sign = 1;
    for i in 1..cs.len() {
        let mut j = i;
        while j > 0 && cs[j - 1] > cs[j] {
            cs.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if cs.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

impl Form {
    pub fn zero() -> Form {
        Form::default()
    }

    /// A 0-form.
    pub fn scalar(e: Expr) -> Form {
        Form::monomial(e, &[])
    }

    /// The differential `dc`.
    pub fn d(c: Coord) -> Form {
        Form::monomial(Expr::one(), &[c])
    }

    pub fn dx(mu: usize) -> Form {
        Form::d(Coord::base(mu))
    }

    pub fn dy(i: usize) -> Form {
        Form::d(Coord::fiber(i))
    }

    pub fn dz(i: usize, mu: usize) -> Form {
        Form::d(Coord::jet(i, mu))
    }

    /// `coeff * dc_1 ^ ... ^ dc_k` for differentials in any order.
    pub fn monomial(coeff: Expr, diffs: &[Coord]) -> Form {
        let mut out = Form::zero();
        out.push(coeff, diffs.to_vec());
        out
    }

    fn push(&mut self, coeff: Expr, mut diffs: Vec<Coord>) {
        if coeff.is_zero() {
            return;
        }
        let sign = sort_sign(&mut diffs);
        if sign == 0 {
            return;
        }
        let coeff = if sign < 0 { -coeff } else { coeff };
        match self.terms.get_mut(&diffs) {
            Some(slot) => {
                let sum = &*slot + &coeff;
                if sum.is_zero() {
                    self.terms.remove(&diffs);
                } else {
                    *slot = sum;
                }
            }
            None => {
                self.terms.insert(diffs, coeff);
            }
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<Coord>, Expr)>>(terms: I) -> Form {
        let mut out = Form::zero();
        for (m, c) in terms {
            out.push(c, m);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Coord], &Expr)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a monomial given in any order (sign adjusted).
    pub fn coefficient(&self, diffs: &[Coord]) -> Expr {
        let mut key = diffs.to_vec();
        let sign = sort_sign(&mut key);
        if sign == 0 {
            return Expr::zero();
        }
        let c = self.terms.get(&key).cloned().unwrap_or_else(Expr::zero);
        if sign < 0 {
            -c
        } else {
            c
        }
    }

    /// Homogeneous component of degree `k`.
    pub fn part(&self, k: usize) -> Form {
        Form { terms: self.terms.iter().filter(|(m, _)| m.len() == k).map(|(m, c)| (m.clone(), c.clone())).collect() }
    }

    /// Degree when the form is homogeneous and nonzero.
    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|m| m.len());
        let first = it.next()?;
        it.all(|k| k == first).then_some(first)
    }

    pub fn scale(&self, e: &Expr) -> Form {
        Form::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), c * e)))
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> Form {
        Form::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut m = a.clone();
                m.extend_from_slice(b);
                out.push(ca * cb, m);
            }
        }
        out
    }

    /// Differentials occurring in the monomials.
    pub fn differentials(&self) -> alloc::collections::BTreeSet<Coord> {
        self.terms.keys().flatten().copied().collect()
    }

    pub fn render(&self, names: &dyn Names) -> String {
        if self.terms.is_empty() {
            return String::from("0");
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                out.push_str(" + ");
            }
            let coeff = crate::symex::render(c, names);
            if m.is_empty() {
                out.push_str(&alloc::format!("({coeff})"));
                continue;
            }
            if !c.is_one() {
                out.push_str(&alloc::format!("({coeff})*"));
            }
            let ds: Vec<String> = m
                .iter()
                .map(|c| {
                    let n = names.coord(*c);
                    if n.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                        alloc::format!("d{n}")
                    } else {
                        alloc::format!("d[{n}]")
                    }
                })
                .collect();
            out.push_str(&ds.join("^"));
        }
        out
    }
}

impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.push(c.clone(), m.clone());
        }
        out
    }
}

impl Add for Form {
    type Output = Form;
    fn add(self, rhs: Form) -> Form {
        &self + &rhs
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.map_coefficients(|c| -c)
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        -&self
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self + &(-rhs)
    }
}

impl Sub for Form {
    type Output = Form;
    fn sub(self, rhs: Form) -> Form {
        &self - &rhs
    }
}

impl core::iter::Sum for Form {
    fn sum<I: Iterator<Item = Form>>(iter: I) -> Form {
        let mut out = Form::zero();
        for f in iter {
            for (m, c) in f.terms {
                out.push(c, m);
            }
        }
        out
    }
}
