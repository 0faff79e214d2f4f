//! Batch front end for the haem kernel: judgment files, commands and the
//! example corpus.

// Errors carry the offending terms.
#![allow(clippy::result_large_err)]

pub mod commands;
pub mod corpus;
pub mod judgment;
