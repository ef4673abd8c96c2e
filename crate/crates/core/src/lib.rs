//! Bentkus-type confidence sequences for bounded random variables.
//!
//! The crate is layered bottom-up:
//!
//! * [`special`] and [`binom`]: log-gamma, erfc, the normal quantile and
//!   stable binomial tail tables.
//! * [`bentkus`]: the fixed-n Bentkus tail `P2` and its quantile.
//! * [`stitching`]: geometric epochs and the uniform-in-n boundary.
//! * [`variance`]: uniform over-estimates of the standard deviation.
//! * [`confseq`]: online confidence sequences, including the classical baselines.
//! * [`apps`]: adaptive stopping and best-arm identification.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod bentkus;
pub mod binom;
pub mod confseq;
mod error;
pub mod special;
pub mod stitching;
pub mod variance;

pub use error::{Error, Result};
