#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical toolkit for variable-order nonlocal operators in one dimension.

pub mod config;
pub mod error;
pub mod experiments;
pub mod holder;
pub mod kernels;
pub mod quad;
pub mod scale;
pub mod solver;

pub use error::{Error, Result};
