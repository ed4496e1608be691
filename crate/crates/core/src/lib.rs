#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod cli;
pub mod document;
pub mod error;
pub mod expr;
pub mod legendre;
pub mod levy;
pub mod minimize;
pub mod model;
pub mod montecarlo;
pub mod path;
pub mod quadrature;
pub mod simulate;

pub use error::{Error, Result};
