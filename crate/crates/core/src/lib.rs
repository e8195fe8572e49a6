#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod aed;
pub mod completeness;
pub mod config;
pub mod deformed;
pub mod deriv;
pub mod divergences;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod expr;
pub mod families;
pub mod glf;
pub mod linalg;
pub mod optim;
pub mod par;
pub mod quad;
pub mod special;
pub mod stress;

pub use error::{Error, Result};
