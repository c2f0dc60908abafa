use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::jetspace::JetContext;
use crate::symex::{Coord, Expr, Names};

/// Vector field given by its components in the coordinate basis.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VectorField {
    comps: BTreeMap<Coord, Expr>,
}

impl VectorField {
    pub fn zero() -> VectorField {
        VectorField::default()
    }

    pub fn from_components<I: IntoIterator<Item = (Coord, Expr)>>(it: I) -> VectorField {
        let mut out = VectorField::zero();
        for (c, e) in it {
            out.set(c, e);
        }
        out
    }

    /// The coordinate field `d/dc`.
    pub fn coordinate(c: Coord) -> VectorField {
        VectorField::from_components([(c, Expr::one())])
    }

    pub fn set(&mut self, c: Coord, e: Expr) {
        if e.is_zero() {
            self.comps.remove(&c);
        } else {
            self.comps.insert(c, e);
        }
    }

    pub fn with(mut self, c: Coord, e: Expr) -> VectorField {
        self.set(c, e);
        self
    }

    pub fn component(&self, c: Coord) -> Expr {
        self.comps.get(&c).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn components(&self) -> impl Iterator<Item = (Coord, &Expr)> {
        self.comps.iter().map(|(c, e)| (*c, e))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// `X(f)`, the derivative of a function along the field.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::add_all(self.comps.iter().map(|(c, x)| x * &f.diff(*c)))
    }

    /// Lie bracket `[X, Y]`.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        let mut all: Vec<Coord> = self.comps.keys().chain(other.comps.keys()).copied().collect();
        all.sort();
        all.dedup();
        VectorField::from_components(
            all.into_iter().map(|c| (c, self.apply(&other.component(c)) - other.apply(&self.component(c)))),
        )
    }

    pub fn scale(&self, e: &Expr) -> VectorField {
        VectorField::from_components(self.comps.iter().map(|(c, x)| (*c, x * e)))
    }

    pub fn map_components(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField::from_components(self.comps.iter().map(|(c, x)| (*c, f(x))))
    }

    /// Part along the given coordinates.
    pub fn restrict(&self, keep: impl Fn(Coord) -> bool) -> VectorField {
        VectorField::from_components(self.comps.iter().filter(|(c, _)| keep(**c)).map(|(c, x)| (*c, x.clone())))
    }

    /// Base components, indexed by direction.
    pub fn base_components(&self, n1: usize) -> Vec<Expr> {
        (0..n1).map(|mu| self.component(Coord::base(mu))).collect()
    }

    pub fn is_vertical(&self) -> bool {
        !self.comps.keys().any(|c| matches!(c, Coord::Base(_)))
    }

    /// Base components depend on base coordinates only.
    pub fn is_projectable(&self) -> bool {
        self.comps
            .iter()
            .filter(|(c, _)| matches!(c, Coord::Base(_)))
            .all(|(_, e)| !e.depends_on(&|d| !matches!(d, Coord::Base(_))))
    }

    /// Base components vanish along every direction that carries a jet coordinate.
    pub fn is_p_vertical(&self, ctx: &JetContext) -> bool {
        ctx.pairs().all(|(mu, _)| self.component(Coord::base(mu)).is_zero())
    }

    /// Characteristic `xi^i - sum_{(mu,i) in P} z^i_mu xi^mu`.
    pub fn characteristic(&self, ctx: &JetContext, i: usize) -> Expr {
        let mut terms = alloc::vec![self.component(Coord::fiber(i))];
        for mu in ctx.directions(i) {
            terms.push(-(Expr::z(i, mu) * self.component(Coord::base(mu))));
        }
        Expr::add_all(terms)
    }

    pub fn render(&self, names: &dyn Names) -> String {
        if self.comps.is_empty() {
            return String::from("0");
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(c, e)| alloc::format!("({})*D[{}]", crate::symex::render(e, names), names.coord(*c)))
            .collect();
        parts.join(" + ")
    }
}

impl core::ops::Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        let mut out = self.clone();
        for (c, e) in &rhs.comps {
            let v = out.component(*c) + e;
            out.set(*c, v);
        }
        out
    }
}

impl core::ops::Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self + &rhs.scale(&Expr::int(-1))
    }
}
