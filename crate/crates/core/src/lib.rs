// `!(x > 0.0)` style checks are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cartan;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod geospin;
pub mod exec;
pub mod expr;
pub mod flow;
pub mod linalg;
pub mod metric;
pub mod report;
pub mod sample;
pub mod suite;

pub use error::{Error, Result};
