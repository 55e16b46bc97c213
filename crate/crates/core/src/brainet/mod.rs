//! Convolution + multi-head attention regressor that maps sub-6 GHz CSI and
//! mm-wave probe pilots to a normalized beam index.

mod model;

pub use model::{
    build_model, forward, forward_graph, position_major, predict, predict_beam, ConvSpec, Forward, Model,
    ModelConfig, INFERENCE_CHUNK,
};
