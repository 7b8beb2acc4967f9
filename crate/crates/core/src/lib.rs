//! Low frame-rate speech codec toolkit.
//!
//! 22.05 kHz mono speech is encoded at 21.5 frames per second into eight
//! parallel FSQ codes per frame (levels `[8, 7, 6, 6]`, 11 bits each), for
//! 1.89 kbps. The crate provides the quantizer, the convolutional
//! encoder/decoder forward pass, the `.lfsc` bitstream container, rate
//! accounting and the objective metrics used to compare codecs.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision.

pub mod audio;
pub mod bitstream;
pub mod error;
pub mod fsq;
pub mod metrics;
pub mod model;
pub mod rates;
pub mod scalar;

pub use audio::AudioBuffer;
pub use bitstream::{pack, unpack, BitstreamHeader, StreamParams};
pub use error::{Error, Result};
pub use fsq::{CodeSequence, FsqSpec, LatentSequence};
pub use metrics::{MetricReport, SpectralConfig};
pub use model::{load_weights, Codec, ModelConfig, ModelWeights, ParamCount};
pub use rates::{bitrate, frame_rate, token_rate, Rate, RateSummary};
pub use scalar::Scalar;

pub type Codec32 = Codec<f32>;
pub type Codec64 = Codec<f64>;
pub type Audio32 = AudioBuffer<f32>;
pub type Audio64 = AudioBuffer<f64>;
pub type Latent32 = LatentSequence<f32>;
pub type Latent64 = LatentSequence<f64>;
