//! Local alignment network: per-point features in, per-point offsets out.

mod checkpoint;
mod layers;
mod network;
mod params;
mod tensor;
mod train;

pub use layers::{
    attention_heads, circular_conv, cyclic_positional_encoding, lstm_step, multi_head_attention,
    sample_point_features, AttentionWeights, CircularKernel, FeaturePyramid, LamState, LstmWeights,
    PointFeatures, PyramidLevel,
};
pub use checkpoint::{checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint};
pub use network::{build_input, lam_backward, lam_forward, lam_forward_cached, ForwardCache};
pub use params::{LamConfig, LamParams, Tensor};
pub use tensor::Mat;
pub use train::{make_samples, mean_objective, sample_objective, train, Adam, TrainConfig, TrainSample};
