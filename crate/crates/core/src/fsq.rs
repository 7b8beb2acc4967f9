//! Finite scalar quantization.
//!
//! Each latent dimension is squashed with `tanh`, stretched onto
//! `[0, L - 1]` and rounded half up, so a codebook of `d` dimensions with
//! levels `[L0, .., Ld-1]` has an implicit codebook of `prod(Li)` entries.
//! Per-dimension indices are combined into one code with a mixed-radix map
//! whose least significant digit is dimension 0.
//!
//! Training uses the straight-through estimator: the backward pass treats
//! rounding as identity, so the surrogate gradient of quantize-then-
//! dequantize is the gradient of [`bound_dim`] alone (see
//! [`straight_through_grad`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shape of the quantizer: how many codebooks and the level count of each
/// dimension inside a codebook.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FsqSpecRepr", into = "FsqSpecRepr")]
pub struct FsqSpec {
    num_codebooks: usize,
    levels: Vec<u32>,
    codes_per_codebook: u64,
}

#[derive(Serialize, Deserialize)]
struct FsqSpecRepr {
    num_codebooks: usize,
    levels: Vec<u32>,
}

impl TryFrom<FsqSpecRepr> for FsqSpec {
    type Error = Error;

    fn try_from(r: FsqSpecRepr) -> Result<Self> {
        FsqSpec::new(r.num_codebooks, r.levels)
    }
}

impl From<FsqSpec> for FsqSpecRepr {
    fn from(s: FsqSpec) -> Self {
        FsqSpecRepr { num_codebooks: s.num_codebooks, levels: s.levels }
    }
}

impl FsqSpec {
    /// Largest implicit codebook we accept; codes must fit in a `u32`.
    pub const MAX_CODES: u64 = 1 << 32;

    pub fn new(num_codebooks: usize, levels: Vec<u32>) -> Result<Self> {
        if num_codebooks == 0 {
            return Err(Error::InvalidArgument("num_codebooks must be positive".into()));
        }
        if levels.is_empty() {
            return Err(Error::InvalidArgument("levels must not be empty".into()));
        }
        let mut product: u64 = 1;
        for &l in &levels {
            if l < 2 {
                return Err(Error::InvalidArgument(format!("level count {l} < 2")));
            }
            product = product
                .checked_mul(l as u64)
                .filter(|&p| p <= Self::MAX_CODES)
                .ok_or_else(|| Error::InvalidArgument(format!("levels {levels:?} exceed {} codes", Self::MAX_CODES)))?;
        }
        Ok(Self { num_codebooks, levels, codes_per_codebook: product })
    }

    /// Eight codebooks of levels `[8, 7, 6, 6]`: 2016 codes, 11 bits each.
    pub fn lfsc_default() -> Self {
        Self::new(8, vec![8, 7, 6, 6]).expect("valid default")
    }

    /// 1000-code stand-in (`[8, 5, 5, 5]`) for the smaller ablation codebook.
    pub fn codes_1000() -> Self {
        Self::new(8, vec![8, 5, 5, 5]).expect("valid")
    }

    /// 4032-code stand-in (`[8, 7, 6, 12]`) for the larger ablation codebook.
    pub fn codes_4032() -> Self {
        Self::new(8, vec![8, 7, 6, 12]).expect("valid")
    }

    pub fn num_codebooks(&self) -> usize {
        self.num_codebooks
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn dims_per_code(&self) -> usize {
        self.levels.len()
    }

    /// Width of the latent the quantizer consumes.
    pub fn latent_dim(&self) -> usize {
        self.num_codebooks * self.levels.len()
    }

    pub fn codes_per_codebook(&self) -> u64 {
        self.codes_per_codebook
    }

    /// Smallest `w` with `2^w >= codes_per_codebook`.
    pub fn code_bit_width(&self) -> u32 {
        64 - (self.codes_per_codebook - 1).leading_zeros()
    }

    pub fn bits_per_frame(&self) -> u64 {
        self.num_codebooks as u64 * self.code_bit_width() as u64
    }

    pub fn check_code(&self, code: u32) -> Result<()> {
        if (code as u64) < self.codes_per_codebook {
            Ok(())
        } else {
            Err(Error::InvalidCode(format!("code {code} out of range for {} codes", self.codes_per_codebook)))
        }
    }
}

impl Default for FsqSpec {
    fn default() -> Self {
        Self::lfsc_default()
    }
}

fn check_levels(levels: u32) -> Result<()> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!("level count {levels} < 2")));
    }
    Ok(())
}

/// Continuous bounded value in `[0, L - 1]` before rounding.
pub fn bound_dim<T: Scalar>(z: T, levels: u32) -> T {
    let half = T::lit((levels - 1) as f64 / 2.0);
    half * z.tanh() + half
}

/// Straight-through surrogate gradient of quantize-then-dequantize with
/// respect to `z`: rounding passes the gradient through unchanged, leaving
/// `d/dz [bound_dim(z) / ((L-1)/2) - 1] = 1 - tanh(z)^2`.
pub fn straight_through_grad<T: Scalar>(z: T) -> T {
    let t = z.tanh();
    T::one() - t * t
}

/// Quantizes one latent value to an index in `0..levels`.
pub fn quantize_dim<T: Scalar>(z: T, levels: u32) -> Result<u32> {
    check_levels(levels)?;
    if !z.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite latent value {z:?}")));
    }
    let rounded = (bound_dim(z, levels) + T::lit(0.5)).floor();
    let top = T::lit((levels - 1) as f64);
    let clamped = rounded.max(T::zero()).min(top);
    Ok(clamped.to_u32().expect("clamped to level range"))
}

/// Grid value in `[-1, 1]` for a level index.
pub fn dequantize_dim<T: Scalar>(index: u32, levels: u32) -> Result<T> {
    check_levels(levels)?;
    if index >= levels {
        return Err(Error::InvalidCode(format!("index {index} out of range for {levels} levels")));
    }
    let span = (levels - 1) as f64;
    Ok(T::lit((2.0 * index as f64 - span) / span))
}

/// Mixed-radix combination of one codebook's per-dimension indices.
pub fn indices_to_code(indices: &[u32], spec: &FsqSpec) -> Result<u32> {
    if indices.len() != spec.levels.len() {
        return Err(Error::Shape(format!("{} indices for {} levels", indices.len(), spec.levels.len())));
    }
    let mut code: u64 = 0;
    for (&i, &l) in indices.iter().zip(&spec.levels).rev() {
        if i >= l {
            return Err(Error::InvalidCode(format!("index {i} out of range for {l} levels")));
        }
        code = code * l as u64 + i as u64;
    }
    Ok(code as u32)
}

/// Inverse of [`indices_to_code`].
pub fn code_to_indices(code: u32, spec: &FsqSpec) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(spec.levels.len());
    code_to_indices_into(code, spec, &mut out)?;
    Ok(out)
}

fn code_to_indices_into(code: u32, spec: &FsqSpec, out: &mut Vec<u32>) -> Result<()> {
    spec.check_code(code)?;
    let mut rest = code;
    for &l in &spec.levels {
        out.push(rest % l);
        rest /= l;
    }
    Ok(())
}

/// Continuous encoder output between encoder and quantizer, row-major
/// `frames x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSequence<T> {
    values: Vec<T>,
    width: usize,
    pub frame_rate: f64,
}

impl<T: Scalar> LatentSequence<T> {
    pub fn new(values: Vec<T>, width: usize, frame_rate: f64) -> Result<Self> {
        if width == 0 || !values.len().is_multiple_of(width) {
            return Err(Error::Shape(format!("{} values do not form rows of width {width}", values.len())));
        }
        Ok(Self { values, width, frame_rate })
    }

    pub fn num_frames(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn frame(&self, i: usize) -> &[T] {
        &self.values[i * self.width..(i + 1) * self.width]
    }
}

/// `frames x num_codebooks` code matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSequence {
    spec: FsqSpec,
    codes: Vec<u32>,
}

impl CodeSequence {
    pub fn new(spec: FsqSpec, codes: Vec<u32>) -> Result<Self> {
        if !codes.len().is_multiple_of(spec.num_codebooks) {
            return Err(Error::Shape(format!(
                "{} codes do not form frames of {} codebooks",
                codes.len(),
                spec.num_codebooks
            )));
        }
        for &c in &codes {
            spec.check_code(c)?;
        }
        Ok(Self { spec, codes })
    }

    pub fn empty(spec: FsqSpec) -> Self {
        Self { spec, codes: Vec::new() }
    }

    pub fn spec(&self) -> &FsqSpec {
        &self.spec
    }

    pub fn num_frames(&self) -> usize {
        self.codes.len() / self.spec.num_codebooks
    }

    pub fn num_tokens(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn frame(&self, i: usize) -> &[u32] {
        let n = self.spec.num_codebooks;
        &self.codes[i * n..(i + 1) * n]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[u32]> {
        self.codes.chunks_exact(self.spec.num_codebooks)
    }
}

/// Quantizes every codebook of every frame.
pub fn quantize_frames<T: Scalar>(latent: &LatentSequence<T>, spec: &FsqSpec) -> Result<CodeSequence> {
    if latent.width != spec.latent_dim() {
        return Err(Error::Shape(format!(
            "latent width {} but spec needs {} ({} codebooks x {} dims)",
            latent.width,
            spec.latent_dim(),
            spec.num_codebooks,
            spec.dims_per_code()
        )));
    }
    let dims = spec.dims_per_code();
    let mut idx = vec![0u32; dims];
    let mut codes = Vec::with_capacity(latent.num_frames() * spec.num_codebooks);
    for group in latent.values.chunks_exact(dims) {
        for ((slot, &z), &l) in idx.iter_mut().zip(group).zip(&spec.levels) {
            *slot = quantize_dim(z, l)?;
        }
        codes.push(indices_to_code(&idx, spec)?);
    }
    Ok(CodeSequence { spec: spec.clone(), codes })
}

/// Maps codes back to their grid values in `[-1, 1]`.
pub fn dequantize_frames<T: Scalar>(
    codes: &CodeSequence,
    spec: &FsqSpec,
    frame_rate: f64,
) -> Result<LatentSequence<T>> {
    if codes.spec.num_codebooks != spec.num_codebooks {
        return Err(Error::Shape(format!(
            "codes have {} codebooks, spec has {}",
            codes.spec.num_codebooks, spec.num_codebooks
        )));
    }
    let mut values = Vec::with_capacity(codes.codes.len() * spec.dims_per_code());
    let mut idx = Vec::with_capacity(spec.dims_per_code());
    for &c in &codes.codes {
        idx.clear();
        code_to_indices_into(c, spec, &mut idx)?;
        for (&i, &l) in idx.iter().zip(&spec.levels) {
            values.push(dequantize_dim(i, l)?);
        }
    }
    LatentSequence::new(values, spec.latent_dim(), frame_rate)
}
