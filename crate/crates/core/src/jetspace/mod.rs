//! Jet bundle charts and lifts of vector fields.

mod connection;
mod context;
mod frame;
mod lift;
mod prolong;

pub use connection::{prolong_connection, Connection};
pub use context::{ContextBuilder, ContextError, JetContext, JetKind, Split};
pub use frame::{prolong_in_frame, Frame};
pub use lift::{lift_to_momentum_bundle, lift_to_source_bundle};
pub use prolong::{check_liftable, prolong_vector_field, LiftError};
pub(crate) use prolong::{depends_on, vanishes};
