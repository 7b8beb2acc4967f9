use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsq::FsqSpec;

/// Encoder: a stem convolution, then per block a residual stack followed by
/// a strided downsampling convolution that doubles the channel count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub initial_channels: usize,
    pub strides: Vec<usize>,
    pub residual_layers_per_block: usize,
    pub residual_kernel: usize,
    pub dilation: usize,
    pub stem_kernel: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            initial_channels: 48,
            strides: vec![2, 2, 4, 8, 8],
            residual_layers_per_block: 3,
            residual_kernel: 3,
            dilation: 1,
            stem_kernel: 7,
        }
    }
}

impl EncoderConfig {
    pub fn num_blocks(&self) -> usize {
        self.strides.len()
    }

    /// Channel width entering block `k` (and leaving block `k - 1`).
    pub fn channels_at(&self, k: usize) -> usize {
        self.initial_channels << k
    }

    pub fn output_channels(&self) -> usize {
        self.channels_at(self.num_blocks())
    }

    pub fn total_stride(&self) -> usize {
        self.strides.iter().product()
    }
}

/// HiFi-GAN style decoder: transposed-convolution upsamplers that halve the
/// channel count, each followed by a multi-receptive-field fusion of
/// residual stacks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub initial_channels: usize,
    pub upsample_rates: Vec<usize>,
    pub resblock_kernels: Vec<usize>,
    pub resblock_dilations: Vec<usize>,
    pub post_kernel: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            initial_channels: 1024,
            upsample_rates: vec![8, 8, 4, 2, 2],
            resblock_kernels: vec![3, 7, 11],
            resblock_dilations: vec![1, 3, 5],
            post_kernel: 7,
        }
    }
}

impl DecoderConfig {
    pub fn num_upsamples(&self) -> usize {
        self.upsample_rates.len()
    }

    /// Channel width after upsampler `k` (`k = 0` is the input width).
    pub fn channels_at(&self, k: usize) -> usize {
        self.initial_channels >> k
    }

    pub fn output_channels(&self) -> usize {
        self.channels_at(self.num_upsamples())
    }

    pub fn total_upsample(&self) -> usize {
        self.upsample_rates.iter().product()
    }
}

/// Everything needed to rebuild the generator from a weight file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub sample_rate: u32,
    pub fsq: FsqSpec,
    pub encoder: EncoderConfig,
    pub decoder: DecoderConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            fsq: FsqSpec::lfsc_default(),
            encoder: EncoderConfig::default(),
            decoder: DecoderConfig::default(),
        }
    }
}

impl ModelConfig {
    /// Same strides, quantizer and kernels as the default model, with
    /// narrow channels so the forward pass is cheap on one CPU core.
    pub fn reduced() -> Self {
        Self {
            encoder: EncoderConfig { initial_channels: 4, ..EncoderConfig::default() },
            decoder: DecoderConfig { initial_channels: 64, ..DecoderConfig::default() },
            ..Self::default()
        }
    }

    /// Samples per frame.
    pub fn hop_length(&self) -> usize {
        self.encoder.total_stride()
    }

    pub fn latent_dim(&self) -> usize {
        self.fsq.latent_dim()
    }

    /// Frames produced for an input of `num_samples` samples.
    pub fn frames_for(&self, num_samples: usize) -> usize {
        num_samples.div_ceil(self.hop_length())
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.encoder;
        let d = &self.decoder;
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.sample_rate == 0 {
            return bad("sample rate must be positive".into());
        }
        if e.initial_channels == 0
            || e.strides.is_empty()
            || e.residual_kernel.is_multiple_of(2)
            || e.stem_kernel.is_multiple_of(2)
        {
            return bad(format!("invalid encoder config {e:?}"));
        }
        if e.dilation == 0 || e.strides.iter().any(|&s| s < 2 || s % 2 == 1) {
            return bad(format!("encoder strides must be even: {:?}", e.strides));
        }
        if d.upsample_rates.is_empty() || d.upsample_rates.iter().any(|&r| r < 2 || r % 2 == 1) {
            return bad(format!("decoder rates must be even: {:?}", d.upsample_rates));
        }
        if d.resblock_kernels.is_empty()
            || d.resblock_kernels.iter().any(|&k| k % 2 == 0)
            || d.resblock_dilations.is_empty()
            || d.resblock_dilations.contains(&0)
            || d.post_kernel.is_multiple_of(2)
        {
            return bad(format!("invalid decoder residual config {d:?}"));
        }
        if d.initial_channels >> d.num_upsamples() == 0 || !d.initial_channels.is_multiple_of(1 << d.num_upsamples()) {
            return bad(format!("decoder width {} cannot be halved {} times", d.initial_channels, d.num_upsamples()));
        }
        if e.total_stride() != d.total_upsample() {
            return bad(format!(
                "encoder stride {} differs from decoder upsampling {}",
                e.total_stride(),
                d.total_upsample()
            ));
        }
        if e.total_stride() > u16::MAX as usize {
            return bad(format!("hop length {} exceeds 65535", e.total_stride()));
        }
        Ok(())
    }
}
