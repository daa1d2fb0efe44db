//! From-scratch 1D-CNN and LSTM classifiers.
//!
//! Both networks end in a 3-unit softmax over the classes `[G, F, W]` and are
//! trained on mean categorical cross-entropy with adam. Gradients are derived
//! by hand: max-pool gradients are routed through the recorded argmax, and
//! the LSTM uses full backpropagation through time.

mod adam;
mod cnn;
mod layers;
mod lstm;
mod net;
mod params;

pub use adam::{adam_step, AdamState};
pub use layers::{
    conv1d_forward, cross_entropy, dense_forward, lstm_forward, maxpool1d, softmax, Activation,
    LstmWeights,
};
pub use net::{
    backprop, batch_loss, load_model, predict, save_model, train, Architecture, CnnSpec, Gradients,
    LstmSpec, TrainedNet, MODEL_FORMAT_VERSION,
};
pub use params::{ParamBuffer, ParamSet};
