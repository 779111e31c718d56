//! Two-stage forecasting toolkit: penalized-regression feature selection
//! (ridge, LASSO, SCAD) followed by a dilated CNN-LSTM forecaster, with an
//! experiment harness for comparing model variants on time-series panels.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod neural;
pub mod numcore;
pub mod pipeline;
pub mod regsel;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
