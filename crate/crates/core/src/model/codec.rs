use super::config::ModelConfig;
use super::layers::{Conv1d, ConvTranspose1d, Signal};
use super::weights::ModelWeights;
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::fsq::{dequantize_frames, quantize_frames, CodeSequence, LatentSequence};
use crate::scalar::Scalar;

const LEAKY_SLOPE: f64 = 0.1;

#[derive(Debug, Clone)]
struct ResidualLayer<T> {
    conv1: Conv1d<T>,
    conv2: Conv1d<T>,
}

impl<T: Scalar> ResidualLayer<T> {
    fn forward(&self, x: &mut Signal<T>, slope: T) {
        let mut h = self.conv1.forward(&x.leaky_relu_copy(slope));
        h.leaky_relu(slope);
        let h = self.conv2.forward(&h);
        x.add_assign(&h);
    }
}

#[derive(Debug, Clone)]
struct EncoderBlock<T> {
    residual: Vec<ResidualLayer<T>>,
    down: Conv1d<T>,
}

/// One HiFi-GAN residual stack: a pair of convolutions per dilation.
#[derive(Debug, Clone)]
struct ResStack<T> {
    layers: Vec<ResidualLayer<T>>,
}

#[derive(Debug, Clone)]
struct UpsampleStage<T> {
    up: ConvTranspose1d<T>,
    mrf: Vec<ResStack<T>>,
}

/// Generator forward pass at scalar precision `T`, built from validated
/// [`ModelWeights`]. Immutable; share it freely across threads.
#[derive(Debug, Clone)]
pub struct Codec<T> {
    config: ModelConfig,
    stem: Conv1d<T>,
    blocks: Vec<EncoderBlock<T>>,
    enc_proj: Conv1d<T>,
    dec_proj: Conv1d<T>,
    stages: Vec<UpsampleStage<T>>,
    post: Conv1d<T>,
}

impl<T: Scalar> Codec<T> {
    pub fn new(weights: &ModelWeights) -> Result<Self> {
        let config = weights.config().clone();
        config.validate()?;
        let pair = |prefix: &str| -> Result<_> {
            Ok((weights.get(&format!("{prefix}.weight"))?, weights.get(&format!("{prefix}.bias"))?))
        };
        let same = |prefix: &str, dilation: usize| -> Result<Conv1d<T>> {
            let (w, b) = pair(prefix)?;
            Ok(Conv1d::same(w, b, dilation))
        };

        let e = &config.encoder;
        let stem = same("encoder.stem", 1)?;
        let mut blocks = Vec::with_capacity(e.num_blocks());
        for (b, &stride) in e.strides.iter().enumerate() {
            let residual = (0..e.residual_layers_per_block)
                .map(|l| {
                    Ok(ResidualLayer {
                        conv1: same(&format!("encoder.blocks.{b}.res.{l}.conv1"), e.dilation)?,
                        conv2: same(&format!("encoder.blocks.{b}.res.{l}.conv2"), 1)?,
                    })
                })
                .collect::<Result<_>>()?;
            let (w, bias) = pair(&format!("encoder.blocks.{b}.down"))?;
            let down = Conv1d::new(w, bias, stride, 1, stride / 2);
            blocks.push(EncoderBlock { residual, down });
        }
        let enc_proj = same("encoder.proj", 1)?;

        let d = &config.decoder;
        let dec_proj = same("decoder.proj", 1)?;
        let mut stages = Vec::with_capacity(d.num_upsamples());
        for (u, &rate) in d.upsample_rates.iter().enumerate() {
            let (w, bias) = pair(&format!("decoder.ups.{u}"))?;
            let up = ConvTranspose1d::new(w, bias, rate, rate / 2);
            let mrf = (0..d.resblock_kernels.len())
                .map(|r| {
                    let layers = d
                        .resblock_dilations
                        .iter()
                        .enumerate()
                        .map(|(j, &dil)| {
                            Ok(ResidualLayer {
                                conv1: same(&format!("decoder.mrf.{u}.{r}.convs1.{j}"), dil)?,
                                conv2: same(&format!("decoder.mrf.{u}.{r}.convs2.{j}"), 1)?,
                            })
                        })
                        .collect::<Result<_>>()?;
                    Ok(ResStack { layers })
                })
                .collect::<Result<_>>()?;
            stages.push(UpsampleStage { up, mrf });
        }
        let post = same("decoder.post", 1)?;

        Ok(Self { config, stem, blocks, enc_proj, dec_proj, stages, post })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn hop_length(&self) -> usize {
        self.config.hop_length()
    }

    pub fn sample_rate(&self) -> u32 {
        self.config.sample_rate
    }

    pub fn frame_rate(&self) -> f64 {
        self.config.sample_rate as f64 / self.hop_length() as f64
    }

    fn slope() -> T {
        T::lit(LEAKY_SLOPE)
    }

    fn check_input<'a>(&self, audio: &'a AudioBuffer<T>) -> Result<&'a [T]> {
        if audio.sample_rate != self.config.sample_rate {
            return Err(Error::UnsupportedRate { got: audio.sample_rate, expected: self.config.sample_rate });
        }
        let samples = audio.require_mono()?;
        if samples.is_empty() {
            return Err(Error::InvalidInput("audio has no samples".into()));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample {v:?}")));
        }
        Ok(samples)
    }

    /// Continuous latent before quantization, `frames x latent_dim`.
    pub fn encode_latent(&self, audio: &AudioBuffer<T>) -> Result<LatentSequence<T>> {
        let samples = self.check_input(audio)?;
        let hop = self.hop_length();
        let frames = samples.len().div_ceil(hop);
        let mut padded = samples.to_vec();
        padded.resize(frames * hop, T::zero());

        let slope = Self::slope();
        let mut x = self.stem.forward(&Signal::new(padded, 1, frames * hop));
        for block in &self.blocks {
            for layer in &block.residual {
                layer.forward(&mut x, slope);
            }
            x.leaky_relu(slope);
            x = block.down.forward(&x);
        }
        x.leaky_relu(slope);
        let z = self.enc_proj.forward(&x);
        debug_assert_eq!(z.len, frames);

        let width = z.channels;
        let mut rows = vec![T::zero(); frames * width];
        for c in 0..width {
            for (t, &v) in z.channel(c).iter().enumerate() {
                rows[t * width + c] = v;
            }
        }
        LatentSequence::new(rows, width, self.frame_rate())
    }

    /// Audio to codes: zero right-padding to whole frames, encoder, FSQ.
    pub fn encode(&self, audio: &AudioBuffer<T>) -> Result<CodeSequence> {
        let latent = self.encode_latent(audio)?;
        quantize_frames(&latent, &self.config.fsq)
    }

    /// Decoder forward pass on a continuous latent, before clamping.
    pub fn decode_latent(&self, latent: &LatentSequence<T>) -> Result<Vec<T>> {
        let width = self.config.latent_dim();
        if latent.width() != width {
            return Err(Error::Shape(format!("latent width {} but model expects {width}", latent.width())));
        }
        let frames = latent.num_frames();
        if frames == 0 {
            return Ok(Vec::new());
        }
        let mut cm = vec![T::zero(); frames * width];
        for (t, row) in latent.values().chunks_exact(width).enumerate() {
            for (c, &v) in row.iter().enumerate() {
                cm[c * frames + t] = v;
            }
        }
        let slope = Self::slope();
        let mut x = self.dec_proj.forward(&Signal::new(cm, width, frames));
        for stage in &self.stages {
            x.leaky_relu(slope);
            x = stage.up.forward(&x);
            let mut acc: Option<Signal<T>> = None;
            for stack in &stage.mrf {
                let mut h = x.clone();
                for layer in &stack.layers {
                    layer.forward(&mut h, slope);
                }
                match acc.as_mut() {
                    Some(a) => a.add_assign(&h),
                    None => acc = Some(h),
                }
            }
            x = acc.expect("at least one residual stack");
            x.scale(T::one() / T::lit(stage.mrf.len() as f64));
        }
        x.leaky_relu(slope);
        let y = self.post.forward(&x);
        debug_assert_eq!(y.len, frames * self.hop_length());
        Ok(y.data)
    }

    /// Codes to audio. The raw output is `frames * hop` samples, clamped to
    /// `[-1, 1]` and trimmed to `original_length` when given.
    pub fn decode(&self, codes: &CodeSequence, original_length: Option<usize>) -> Result<AudioBuffer<T>> {
        let spec = &self.config.fsq;
        if codes.spec() != spec {
            return Err(Error::InvalidCode(format!(
                "codes use quantizer {:?} x {}, model expects {:?} x {}",
                codes.spec().levels(),
                codes.spec().num_codebooks(),
                spec.levels(),
                spec.num_codebooks()
            )));
        }
        let full = codes.num_frames() * self.hop_length();
        if let Some(n) = original_length {
            if n > full {
                return Err(Error::Length(format!(
                    "original length {n} exceeds {} frames x {} samples",
                    codes.num_frames(),
                    self.hop_length()
                )));
            }
        }
        let latent = dequantize_frames(codes, spec, self.frame_rate())?;
        let mut samples = self.decode_latent(&latent)?;
        let one = T::one();
        for v in &mut samples {
            *v = v.max(-one).min(one);
        }
        if let Some(n) = original_length {
            samples.truncate(n);
        }
        Ok(AudioBuffer::mono(samples, self.config.sample_rate))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::{DecoderConfig, EncoderConfig};
    use crate::FsqSpec;

    fn tiny() -> ModelConfig {
        ModelConfig {
            sample_rate: 8000,
            fsq: FsqSpec::new(2, vec![5, 4]).unwrap(),
            encoder: EncoderConfig { initial_channels: 2, strides: vec![2, 4], ..EncoderConfig::default() },
            decoder: DecoderConfig { initial_channels: 8, upsample_rates: vec![4, 2], ..DecoderConfig::default() },
        }
    }

    fn sine(n: usize, sr: u32) -> AudioBuffer<f64> {
        let s = (0..n).map(|i| 0.5 * (i as f64 * 0.05).sin()).collect();
        AudioBuffer::mono(s, sr)
    }

    #[test]
    fn frames_and_lengths() {
        let w = ModelWeights::random(tiny(), 11).unwrap();
        let codec = Codec::<f64>::new(&w).unwrap();
        for n in [1, 7, 8, 9, 100] {
            let codes = codec.encode(&sine(n, 8000)).unwrap();
            assert_eq!(codes.num_frames(), n.div_ceil(8));
            assert_eq!(codes.spec().num_codebooks(), 2);
            let raw = codec.decode(&codes, None).unwrap();
            assert_eq!(raw.len(), codes.num_frames() * 8);
            let trimmed = codec.decode(&codes, Some(n)).unwrap();
            assert_eq!(trimmed.len(), n);
            assert!(trimmed.samples.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
        }
    }

    #[test]
    fn input_contract() {
        let w = ModelWeights::random(tiny(), 11).unwrap();
        let codec = Codec::<f32>::new(&w).unwrap();
        let wrong_rate = AudioBuffer::mono(vec![0.0f32; 16], 16000);
        assert!(matches!(codec.encode(&wrong_rate), Err(Error::UnsupportedRate { .. })));
        let stereo = AudioBuffer { samples: vec![0.0f32; 16], sample_rate: 8000, channels: 2 };
        assert!(matches!(codec.encode(&stereo), Err(Error::UnsupportedLayout(_))));
        let empty = AudioBuffer::mono(Vec::<f32>::new(), 8000);
        assert!(matches!(codec.encode(&empty), Err(Error::InvalidInput(_))));

        let codes = CodeSequence::new(tiny().fsq, vec![0, 1, 2, 3]).unwrap();
        assert!(matches!(codec.decode(&codes, Some(17)), Err(Error::Length(_))));
        let foreign = CodeSequence::new(FsqSpec::lfsc_default(), vec![0; 8]).unwrap();
        assert!(matches!(codec.decode(&foreign, None), Err(Error::InvalidCode(_))));
    }

    #[test]
    fn f32_and_f64_agree_on_latent() {
        let w = ModelWeights::random(tiny(), 5).unwrap();
        let a = Codec::<f64>::new(&w).unwrap().encode_latent(&sine(64, 8000)).unwrap();
        let audio32 = AudioBuffer::mono(sine(64, 8000).samples.iter().map(|&v| v as f32).collect(), 8000);
        let b = Codec::<f32>::new(&w).unwrap().encode_latent(&audio32).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - *y as f64).abs() < 1e-4);
        }
    }

    #[test]
    fn empty_code_sequence_decodes_to_silence() {
        let w = ModelWeights::random(tiny(), 5).unwrap();
        let codec = Codec::<f64>::new(&w).unwrap();
        let out = codec.decode(&CodeSequence::empty(tiny().fsq), Some(0)).unwrap();
        assert!(out.is_empty());
    }
}
