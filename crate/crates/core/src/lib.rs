#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hypothesis;
pub mod kac;
pub mod levy;
pub mod presets;
pub mod quadrature;
pub mod report;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
