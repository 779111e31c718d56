//! Dilated CNN-LSTM forecaster with hand-written reverse-mode gradients.
//!
//! A `T×F` window is read as a one-channel image, convolved by a 3×3
//! (optionally dilated) kernel bank, then fed row by row to an LSTM whose
//! last hidden state goes through a dense head. The `cnn` and `lstm`
//! variants drop one of the two stages.

mod adam;
mod conv;
mod dense;
mod gradcheck;
mod lstm;
mod model;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv2d_backward, conv2d_forward, receptive_field, Conv2dLayer, ConvCache, ConvGrads, KERNEL};
pub use dense::{mse_loss, Dense};
pub use gradcheck::{relative_error, run_gradcheck, BlockCheck, GradcheckOptions, GradcheckReport};
pub use lstm::{
    lstm_backward, lstm_backward_into, lstm_forward, lstm_step, LstmGrads, LstmParams, LstmState, LstmStepCache,
};
pub use model::{Init, Model, ModelCache, ModelConfig, ModelRecord, ParamBlock, Variant};
