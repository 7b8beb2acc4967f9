use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Interleaved PCM samples with their sample rate. Amplitudes are nominally
/// in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl<T: Scalar> AudioBuffer<T> {
    pub fn mono(samples: Vec<T>, sample_rate: u32) -> Self {
        Self { samples, sample_rate, channels: 1 }
    }

    /// Number of sample frames (samples per channel).
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub(crate) fn require_mono(&self) -> Result<&[T]> {
        if self.channels != 1 {
            return Err(Error::UnsupportedLayout(format!("expected mono audio, got {} channels", self.channels)));
        }
        Ok(&self.samples)
    }
}
