//! Symbolic verification engine for deformed Poisson pencils of
//! hydrodynamic type.

pub mod brackets;
pub mod catalog;
pub mod coefffield;
pub mod invariants;
pub mod jetspace;
pub mod lift;
pub mod localops;
pub mod miura;
pub mod parse;
pub mod rational;
pub mod suite;

pub use coefffield::{CoeffExpr, Field, FieldError};
pub use rational::Q;
