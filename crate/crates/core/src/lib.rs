//! Diagonalization of real-symmetric idempotent matrix functions over polydisc chains
//! and symmetric factorization of real-symmetric unitary-valued functions.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diag1;
mod error;
pub mod factor2;
pub mod funcrep;
pub mod instances;
pub mod kato;
pub mod numc;
pub mod ode;

pub use error::{Error, Result};
