//! Forward passes of the matching network's components and its training
//! losses with analytic gradients.

mod encoder;
mod encoding;
mod heads;
mod layers;
mod losses;
mod weights;

pub use encoder::{cross_encoder_forward, encoder_layer_forward, multi_head_attention, AttentionWeights, EncoderLayer, FeedForward};
pub use encoding::positional_encoding;
pub use heads::{coordinate_mlp, overlap_head, point_to_node_decode, DenseConditioned};
pub use layers::{layer_norm, relu, sigmoid, softmax_rows, Linear, LAYER_NORM_EPS};
pub use losses::{
    focal_matching_loss, overlap_loss, total_loss, weighted_chamfer_loss, ChamferLoss, FocalLoss, FocalParams,
    LossWeights,
};
pub use weights::{network_forward, CloudInput, CloudOutput, NetworkWeights};
