//! Objective codec metrics: SI-SDR, log-mel and log-magnitude STFT L1
//! distances, and a spectral-rolloff bandwidth estimate.

pub mod spectral;

use serde::Serialize;

pub use spectral::{mel_power, SpectralConfig, Stft};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Upper bound reported by [`si_sdr`] when the residual vanishes.
pub const SI_SDR_CAP_DB: f64 = 100.0;

/// Default cumulative-energy fraction for [`estimate_bandwidth`].
pub const DEFAULT_ENERGY_FRACTION: f64 = 0.99;

fn check_pair<'a, T: Scalar>(a: &'a AudioBuffer<T>, b: &'a AudioBuffer<T>) -> Result<(&'a [T], &'a [T])> {
    if a.sample_rate != b.sample_rate {
        return Err(Error::UnsupportedRate { got: b.sample_rate, expected: a.sample_rate });
    }
    let (x, y) = (a.require_mono()?, b.require_mono()?);
    if x.len() != y.len() {
        return Err(Error::Shape(format!("signal lengths differ: {} vs {}", x.len(), y.len())));
    }
    Ok((x, y))
}

/// Scale-invariant SDR in dB, zero-mean convention, capped at
/// [`SI_SDR_CAP_DB`].
pub fn si_sdr<T: Scalar>(reference: &AudioBuffer<T>, estimate: &AudioBuffer<T>) -> Result<T> {
    let (r, e) = check_pair(reference, estimate)?;
    if r.len() < 2 {
        return Err(Error::Shape(format!("SI-SDR needs at least 2 samples, got {}", r.len())));
    }
    let n = T::lit(r.len() as f64);
    let r_mean = r.iter().copied().sum::<T>() / n;
    let e_mean = e.iter().copied().sum::<T>() / n;
    let (mut dot, mut rr, mut raw) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in r.iter().zip(e) {
        raw += a * a;
        let (a, b) = (a - r_mean, b - e_mean);
        dot += a * b;
        rr += a * a;
    }
    // constant references leave only rounding residue after mean removal
    if rr <= T::epsilon() * raw {
        return Err(Error::InvalidInput("reference signal is identically zero after mean removal".into()));
    }
    let alpha = dot / rr;
    let (mut target, mut noise) = (T::zero(), T::zero());
    for (&a, &b) in r.iter().zip(e) {
        let t = alpha * (a - r_mean);
        let d = (b - e_mean) - t;
        target += t * t;
        noise += d * d;
    }
    let cap = T::lit(SI_SDR_CAP_DB);
    if noise <= T::zero() {
        return Ok(cap);
    }
    Ok((T::lit(10.0) * (target / noise).log10()).min(cap))
}

fn mean_abs_log_diff<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>], floor: T) -> T {
    let mut acc = T::zero();
    let mut count = 0usize;
    for (ra, rb) in a.iter().zip(b) {
        for (&x, &y) in ra.iter().zip(rb) {
            acc += ((x + floor).ln() - (y + floor).ln()).abs();
            count += 1;
        }
    }
    if count == 0 {
        T::zero()
    } else {
        acc / T::lit(count as f64)
    }
}

fn check_frames<T: Scalar>(x: &[T], cfg: &SpectralConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.num_frames(x.len()) == 0 {
        return Err(Error::Shape(format!(
            "signal of {} samples is shorter than the {}-sample analysis window",
            x.len(),
            cfg.fft_size
        )));
    }
    Ok(())
}

/// Mean absolute difference of `ln(mel_power + floor)` over all cells.
pub fn mel_distance<T: Scalar>(a: &AudioBuffer<T>, b: &AudioBuffer<T>, cfg: &SpectralConfig) -> Result<T> {
    let (x, y) = check_pair(a, b)?;
    check_frames(x, cfg)?;
    let (ma, mb) = (mel_power(x, cfg)?, mel_power(y, cfg)?);
    Ok(mean_abs_log_diff(&ma, &mb, T::lit(cfg.log_floor)))
}

/// Mean absolute difference of `ln(|STFT| + floor)` over all cells.
pub fn stft_distance<T: Scalar>(a: &AudioBuffer<T>, b: &AudioBuffer<T>, cfg: &SpectralConfig) -> Result<T> {
    let (x, y) = check_pair(a, b)?;
    check_frames(x, cfg)?;
    let stft = Stft::new(cfg);
    Ok(mean_abs_log_diff(&stft.magnitude(x), &stft.magnitude(y), T::lit(cfg.log_floor)))
}

/// Long-term average power spectrum, one value per bin.
pub fn average_power_spectrum<T: Scalar>(x: &[T], cfg: &SpectralConfig) -> Vec<T> {
    let mut acc = vec![T::zero(); cfg.num_bins()];
    let mut frames = 0usize;
    Stft::new(cfg).for_each_frame(x, |_, spec| {
        frames += 1;
        for (a, c) in acc.iter_mut().zip(spec) {
            *a += c.norm_sqr();
        }
    });
    if frames > 0 {
        let n = T::lit(frames as f64);
        acc.iter_mut().for_each(|a| *a = *a / n);
    }
    acc
}

/// Smallest frequency whose cumulative long-term power reaches
/// `energy_fraction` of the total, using `cfg`'s analysis window.
pub fn estimate_bandwidth_with<T: Scalar>(
    audio: &AudioBuffer<T>,
    energy_fraction: f64,
    cfg: &SpectralConfig,
) -> Result<f64> {
    if !(energy_fraction > 0.0 && energy_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("energy fraction {energy_fraction} outside (0, 1)")));
    }
    let x = audio.require_mono()?;
    check_frames(x, cfg)?;
    let spectrum: Vec<f64> =
        average_power_spectrum(x, cfg).into_iter().map(|v| v.to_f64().expect("finite power")).collect();
    let total: f64 = spectrum.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::UndefinedBandwidth("signal has no energy".into()));
    }
    let target = energy_fraction * total;
    let mut cum = 0.0;
    for (k, &p) in spectrum.iter().enumerate() {
        cum += p;
        if cum >= target {
            return Ok(k as f64 * cfg.bin_hz());
        }
    }
    Ok((spectrum.len() - 1) as f64 * cfg.bin_hz())
}

/// [`estimate_bandwidth_with`] on the default analysis grid for the
/// signal's rate.
pub fn estimate_bandwidth<T: Scalar>(audio: &AudioBuffer<T>, energy_fraction: f64) -> Result<f64> {
    estimate_bandwidth_with(audio, energy_fraction, &SpectralConfig::for_rate(audio.sample_rate))
}

/// Keeps recordings whose estimated bandwidth reaches `min_hz`.
///
/// A flat spectrum band-limited at exactly `B` rolls off at
/// `energy_fraction * B`, so the estimate is compared against
/// `energy_fraction * min_hz`, less one FFT bin of resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthFilter {
    pub min_hz: f64,
    pub energy_fraction: f64,
}

impl BandwidthFilter {
    pub fn new(min_hz: f64) -> Self {
        Self { min_hz, energy_fraction: DEFAULT_ENERGY_FRACTION }
    }

    pub fn threshold_hz(&self, cfg: &SpectralConfig) -> f64 {
        self.energy_fraction * self.min_hz - cfg.bin_hz()
    }

    pub fn passes<T: Scalar>(&self, audio: &AudioBuffer<T>) -> Result<bool> {
        let cfg = SpectralConfig::for_rate(audio.sample_rate);
        let bw = estimate_bandwidth_with(audio, self.energy_fraction, &cfg)?;
        Ok(bw >= self.threshold_hz(&cfg))
    }
}

/// Which metrics [`evaluate`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSelection {
    pub si_sdr: bool,
    pub mel: bool,
    pub stft: bool,
    pub bandwidth: bool,
}

impl MetricSelection {
    pub const ALL: Self = Self { si_sdr: true, mel: true, stft: true, bandwidth: true };
    pub const NONE: Self = Self { si_sdr: false, mel: false, stft: false, bandwidth: false };
}

/// Results for one reference/estimate pair. Absent fields were not
/// requested. `bandwidth` describes the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub si_sdr: Option<f64>,
    pub mel_dist: Option<f64>,
    pub stft_dist: Option<f64>,
    pub bandwidth: Option<f64>,
}

pub fn evaluate<T: Scalar>(
    reference: &AudioBuffer<T>,
    estimate: &AudioBuffer<T>,
    cfg: &SpectralConfig,
    which: MetricSelection,
) -> Result<MetricReport> {
    check_pair(reference, estimate)?;
    let f = |v: T| v.to_f64().expect("finite metric");
    Ok(MetricReport {
        si_sdr: which.si_sdr.then(|| si_sdr(reference, estimate).map(f)).transpose()?,
        mel_dist: which.mel.then(|| mel_distance(reference, estimate, cfg).map(f)).transpose()?,
        stft_dist: which.stft.then(|| stft_distance(reference, estimate, cfg).map(f)).transpose()?,
        bandwidth: which
            .bandwidth
            .then(|| estimate_bandwidth_with(estimate, DEFAULT_ENERGY_FRACTION, cfg))
            .transpose()?,
    })
}
