//! Proof terms, typing and reduction for intuitionistic arithmetic
//! extended with excluded middle restricted to atomic universal formulas.

// Errors carry the offending terms.
#![allow(clippy::result_large_err)]

pub mod extract;
pub mod lang;
pub mod oracle;
pub mod post;
pub mod reduce;
pub mod syntax;
pub mod term;
pub mod translate;
pub mod typing;
