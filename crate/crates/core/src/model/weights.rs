//! Named-tensor weight container and its on-disk format.
//!
//! All integers little-endian:
//!
//! ```text
//! magic "LFSW" | version u16 | config_len u32 | config (UTF-8 JSON)
//! tensor_count u32
//! per tensor, sorted by name:
//!   name_len u16 | name | rank u8 | dims u32 x rank | dtype u8 (0 = f32) | data f32 x numel
//! crc32 u32 over every preceding byte
//! ```
//!
//! Tensors are always written in name order, so saving the same weights
//! twice yields identical bytes.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"LFSW";
pub const VERSION: u16 = 1;
const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

pub type TensorMap = BTreeMap<String, Tensor>;

/// Parameter totals split by the `encoder.` / `decoder.` name prefix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParamCount {
    pub encoder: usize,
    pub decoder: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.encoder + self.decoder
    }
}

pub fn parameter_count(tensors: &TensorMap) -> ParamCount {
    let mut count = ParamCount::default();
    for (name, t) in tensors {
        if name.starts_with("encoder.") {
            count.encoder += t.numel();
        } else if name.starts_with("decoder.") {
            count.decoder += t.numel();
        }
    }
    count
}

/// Expected `(name, shape)` of every tensor for `config`. Convolution
/// weights are `[out, in, kernel]`; transposed convolutions `[in, out, kernel]`.
pub fn tensor_layout(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    let mut conv = |prefix: String, shape: [usize; 3], bias: usize| {
        out.push((format!("{prefix}.weight"), shape.to_vec()));
        out.push((format!("{prefix}.bias"), vec![bias]));
    };
    let e = &config.encoder;
    let latent = config.latent_dim();
    conv("encoder.stem".into(), [e.initial_channels, 1, e.stem_kernel], e.initial_channels);
    for (b, &stride) in e.strides.iter().enumerate() {
        let c = e.channels_at(b);
        for l in 0..e.residual_layers_per_block {
            for j in 1..=2 {
                conv(format!("encoder.blocks.{b}.res.{l}.conv{j}"), [c, c, e.residual_kernel], c);
            }
        }
        conv(format!("encoder.blocks.{b}.down"), [2 * c, c, 2 * stride], 2 * c);
    }
    conv("encoder.proj".into(), [latent, e.output_channels(), 1], latent);

    let d = &config.decoder;
    conv("decoder.proj".into(), [d.initial_channels, latent, 1], d.initial_channels);
    for (u, &rate) in d.upsample_rates.iter().enumerate() {
        let (cin, cout) = (d.channels_at(u), d.channels_at(u + 1));
        conv(format!("decoder.ups.{u}"), [cin, cout, 2 * rate], cout);
        for (r, &k) in d.resblock_kernels.iter().enumerate() {
            for j in 0..d.resblock_dilations.len() {
                conv(format!("decoder.mrf.{u}.{r}.convs1.{j}"), [cout, cout, k], cout);
                conv(format!("decoder.mrf.{u}.{r}.convs2.{j}"), [cout, cout, k], cout);
            }
        }
    }
    conv("decoder.post".into(), [1, d.output_channels(), d.post_kernel], 1);
    out
}

/// Immutable, validated generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    config: ModelConfig,
    tensors: TensorMap,
}

impl ModelWeights {
    /// Checks that `tensors` holds exactly the layout `config` requires.
    pub fn new(config: ModelConfig, tensors: TensorMap) -> Result<Self> {
        config.validate()?;
        let layout = tensor_layout(&config);
        for (name, shape) in &layout {
            match tensors.get(name) {
                None => return Err(Error::Validation(format!("missing tensor `{name}`"))),
                Some(t) if &t.shape != shape => {
                    return Err(Error::Validation(format!(
                        "tensor `{name}` has shape {:?}, expected {shape:?}",
                        t.shape
                    )))
                }
                Some(_) => {}
            }
        }
        if tensors.len() != layout.len() {
            let known: std::collections::BTreeSet<_> = layout.iter().map(|(n, _)| n.as_str()).collect();
            let extra = tensors.keys().find(|k| !known.contains(k.as_str())).expect("extra tensor");
            return Err(Error::Validation(format!("unexpected tensor `{extra}`")));
        }
        Ok(Self { config, tensors })
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` initialization, seeded.
    pub fn random(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = TensorMap::new();
        let layout = tensor_layout(&config);
        for pair in layout.chunks_exact(2) {
            let (wname, wshape) = &pair[0];
            let (bname, bshape) = &pair[1];
            // [out, in, k] and transposed [in, out, k] both use dims 1..
            let fan_in = wshape[1] * wshape[2];
            let bound = 1.0 / (fan_in as f32).sqrt();
            let mut fill = |shape: &Vec<usize>| {
                let n: usize = shape.iter().product();
                let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
                Tensor { shape: shape.clone(), data }
            };
            tensors.insert(wname.clone(), fill(wshape));
            tensors.insert(bname.clone(), fill(bshape));
        }
        Self::new(config, tensors)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tensors(&self) -> &TensorMap {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors.get(name).ok_or_else(|| Error::Validation(format!("missing tensor `{name}`")))
    }

    pub fn parameter_count(&self) -> ParamCount {
        parameter_count(&self.tensors)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let config = serde_json::to_vec(&self.config).expect("config serializes");
        let numel: usize = self.tensors.values().map(Tensor::numel).sum();
        let mut out = Vec::with_capacity(16 + config.len() + 4 * numel + 64 * self.tensors.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(&config);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.shape.len() as u8);
            for &d in &t.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            out.push(DTYPE_F32);
            for &v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic").map_err(|_| Error::Format("file too short for magic".into()))?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad weight-file magic {magic:02x?}")));
        }
        let version = r.u16("version").map_err(|_| Error::Format("file too short for version".into()))?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported weight-file version {version}")));
        }
        let config_len = r.u32("config length")? as usize;
        let config_bytes = r.take(config_len, "config")?;
        let count = r.u32("tensor count")? as usize;
        let mut tensors = TensorMap::new();
        for i in 0..count {
            let name_len = r.u16("tensor name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
                .map_err(|_| Error::Validation(format!("tensor {i} name is not UTF-8")))?
                .to_owned();
            let rank = r.take(1, "rank")?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32("dims")? as usize);
            }
            let dtype = r.take(1, "dtype")?[0];
            if dtype != DTYPE_F32 {
                return Err(Error::Validation(format!("tensor `{name}` has unknown dtype tag {dtype}")));
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(|| Error::Validation(format!("tensor `{name}` shape {shape:?} overflows")))?;
            let raw = r.take(numel, &name)?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
            if tensors.insert(name.clone(), Tensor { shape, data }).is_some() {
                return Err(Error::Validation(format!("duplicate tensor `{name}`")));
            }
        }
        let body_end = r.pos;
        let stored = u32::from_le_bytes(r.take(4, "checksum")?.try_into().expect("4 bytes"));
        if r.pos != bytes.len() {
            return Err(Error::Validation(format!("{} trailing bytes after checksum", bytes.len() - r.pos)));
        }
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let config: ModelConfig =
            serde_json::from_slice(config_bytes).map_err(|e| Error::Validation(format!("config block: {e}")))?;
        Self::new(config, tensors)
    }

    pub fn load<R: Read>(mut source: R) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Reads a weight file from any byte source.
pub fn load_weights<R: Read>(source: R) -> Result<ModelWeights> {
    ModelWeights::load(source)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Validation(format!("truncated weight file while reading {what} at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}
