#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cmc;
pub mod com;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod jet;
pub mod prescription;
pub mod quadrature;

pub use error::{Error, Result};
