//! Spectral toolkit for traveling free-surface waves over an inclined shear layer.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod domain;
pub mod error;
pub mod geometry;
pub mod linear;
pub mod multipliers;
pub mod nonlinear;
pub mod report;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
