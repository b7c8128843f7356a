//! Exact coefficient field: Laurent polynomials in field variables,
//! parameters and generators, over denominators built from registered
//! irreducible factors.

pub mod atoms;
pub mod expr;
pub mod field;
pub mod poly;

pub use atoms::{AtomId, AtomKind};
pub use expr::{CoeffExpr, FieldError};
pub use field::{Field, Rewrite};
pub use poly::{Mono, Poly};

#[cfg(test)]
mod tests;
