//! LSTM regression network written from scratch: forward pass,
//! backpropagation through time, Adam, dropout, normalisation and model
//! files. All arithmetic is `f64`.

mod adam;
mod lstm;
mod matrix;
mod model;
mod normalizer;

pub use adam::{adam_step, AdamState};
pub use lstm::{
    lstm_cell_step, mse_loss, sigmoid, Activation, Architecture, ForwardCache, Gate, LstmLayer, Mode, Network,
};
pub use matrix::{axpy, dot, Matrix};
pub use model::{Model, ModelMetadata, MODEL_MAGIC, MODEL_VERSION};
pub use normalizer::Normalizer;
