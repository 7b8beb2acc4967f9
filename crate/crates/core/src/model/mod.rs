//! Generator forward pass: configuration, weight container and codec.

mod codec;
mod config;
mod layers;
mod weights;

pub use codec::Codec;
pub use config::{DecoderConfig, EncoderConfig, ModelConfig};
pub use layers::{Conv1d, ConvTranspose1d, Signal};
pub use weights::{load_weights, parameter_count, tensor_layout, ModelWeights, ParamCount, Tensor, TensorMap};

/// Weight-file magic and version.
pub mod format {
    pub use super::weights::{MAGIC, VERSION};
}
