//! Exact symbolic scalars over jet-bundle coordinates.
//!
//! Expressions are kept in an expanded normal form: sums and products are
//! flattened and sorted, like terms and like powers are combined, integer
//! powers of sums are expanded. Fractional powers and logarithms assume
//! positive arguments, so `(a*b)^(1/2)` splits as `a^(1/2)*b^(1/2)`.

mod calculus;
mod expr;
mod parse;
mod rational;
mod render;

pub use calculus::{
    differentiate, equivalent, evaluate, polynomial_coefficients, slot, substitute, EvalError, Equivalence,
    SAMPLE_POINTS, SAMPLE_TOL,
};
pub use expr::{Applied, Coord, Elementary, Expr, Node, Symbol};
pub use parse::{parse, ParseError, ParseErrorKind, PlainScope, Scope};
pub use rational::Rational;
pub use render::{render, Names, PlainNames};
