//! Frame-rate, token-rate and bitrate accounting in exact rational
//! arithmetic.
//!
//! Rates are kept as [`Rate`] (a reduced `u64` fraction) so rounding only
//! happens at display time. [`RateSummary::table_row`] applies the
//! published-table convention: the frame rate is first rounded to one
//! decimal (21.5, 86.1, 75.0) and token rate and bitrate are derived from
//! that rounded frame rate. This convention reproduces every published row
//! (172 tok/s, 688, 774, 1.89/1.72/2.06 kbps); the full-precision values
//! differ in the last displayed digit for some rows (2067.19 bps, 775.20
//! tok/s), which is why both views exist.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fsq::FsqSpec;

pub type Rate = Ratio<u64>;

fn check_positive(sample_rate: u32, total_stride: u32) -> Result<()> {
    if total_stride == 0 {
        return Err(Error::InvalidArgument("total stride must be positive".into()));
    }
    if sample_rate == 0 {
        return Err(Error::InvalidArgument("sample rate must be positive".into()));
    }
    Ok(())
}

/// Frames per second: `sample_rate / total_stride`.
pub fn frame_rate(sample_rate: u32, total_stride: u32) -> Result<Rate> {
    check_positive(sample_rate, total_stride)?;
    Ok(Ratio::new(sample_rate as u64, total_stride as u64))
}

/// Tokens per second: one token per codebook per frame.
pub fn token_rate(spec: &FsqSpec, sample_rate: u32, total_stride: u32) -> Result<Rate> {
    Ok(frame_rate(sample_rate, total_stride)? * spec.num_codebooks() as u64)
}

/// Bits per second of the fixed-width bitstream payload.
pub fn bitrate(spec: &FsqSpec, sample_rate: u32, total_stride: u32) -> Result<Rate> {
    Ok(token_rate(spec, sample_rate, total_stride)? * spec.code_bit_width() as u64)
}

pub fn to_f64(r: Rate) -> f64 {
    r.to_f64().expect("finite rate")
}

/// All three rates for one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateSummary {
    pub frame_rate: Rate,
    pub token_rate: Rate,
    pub bitrate: Rate,
    pub num_codebooks: u64,
    pub code_bit_width: u64,
}

/// Rates as they appear in published comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    /// Frame rate rounded to one decimal.
    pub frames_per_sec: f64,
    /// Tokens per second, truncated to an integer.
    pub tokens_per_sec: u64,
    /// Bitrate in kbps rounded to two decimals.
    pub kbps: f64,
}

impl RateSummary {
    pub fn new(spec: &FsqSpec, sample_rate: u32, total_stride: u32) -> Result<Self> {
        Ok(Self {
            frame_rate: frame_rate(sample_rate, total_stride)?,
            token_rate: token_rate(spec, sample_rate, total_stride)?,
            bitrate: bitrate(spec, sample_rate, total_stride)?,
            num_codebooks: spec.num_codebooks() as u64,
            code_bit_width: spec.code_bit_width() as u64,
        })
    }

    pub fn kbps(&self) -> f64 {
        to_f64(self.bitrate) / 1000.0
    }

    pub fn table_row(&self) -> TableRow {
        let fps = (self.frame_rate * 10).round() / 10;
        let tokens = fps * self.num_codebooks;
        let kbps_centi = (tokens * self.code_bit_width / 10).round();
        TableRow { frames_per_sec: to_f64(fps), tokens_per_sec: tokens.to_integer(), kbps: to_f64(kbps_centi) / 100.0 }
    }
}
