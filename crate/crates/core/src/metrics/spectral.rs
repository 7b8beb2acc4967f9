//! STFT front end shared by the spectral distances and the bandwidth
//! estimator.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Spectral analysis parameters. Frames are taken without centering:
/// frame `m` covers samples `[m*hop, m*hop + fft_size)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub mel_bins: usize,
    pub mel_low_hz: f64,
    pub mel_high_hz: f64,
    pub log_floor: f64,
}

impl SpectralConfig {
    /// fft 1024, hop 256, 80 mel bins over 0 Hz to Nyquist, floor 1e-5.
    pub fn for_rate(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            fft_size: 1024,
            hop: 256,
            mel_bins: 80,
            mel_low_hz: 0.0,
            mel_high_hz: sample_rate as f64 / 2.0,
            log_floor: 1e-5,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.fft_size as f64
    }

    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.fft_size {
            0
        } else {
            (len - self.fft_size) / self.hop + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.sample_rate == 0 || self.fft_size < 2 || self.hop == 0 || self.mel_bins == 0 {
            return bad(format!("invalid spectral config {self:?}"));
        }
        if self.hop > self.fft_size {
            return bad(format!("hop {} exceeds fft size {}", self.hop, self.fft_size));
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return bad(format!("log floor must be positive, got {}", self.log_floor));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(0.0 <= self.mel_low_hz && self.mel_low_hz < self.mel_high_hz && self.mel_high_hz <= nyquist) {
            return bad(format!("mel range {}..{} Hz outside 0..{nyquist}", self.mel_low_hz, self.mel_high_hz));
        }
        Ok(())
    }

    /// Triangular HTK-scale filters, `mel_bins x num_bins`, unnormalized.
    /// Fails if any filter covers no FFT bin.
    pub fn mel_filterbank<T: Scalar>(&self) -> Result<Vec<Vec<T>>> {
        self.validate()?;
        let (lo, hi) = (hz_to_mel(self.mel_low_hz), hz_to_mel(self.mel_high_hz));
        let edges: Vec<f64> =
            (0..self.mel_bins + 2).map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (self.mel_bins + 1) as f64)).collect();
        let bin_hz = self.bin_hz();
        let mut bank = Vec::with_capacity(self.mel_bins);
        for m in 0..self.mel_bins {
            let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let row: Vec<T> = (0..self.num_bins())
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let w = ((f - left) / (centre - left)).min((right - f) / (right - centre)).max(0.0);
                    T::lit(w)
                })
                .collect();
            if row.iter().all(|&w| w <= T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; use fewer mel bins or a larger FFT"
                )));
            }
            bank.push(row);
        }
        Ok(bank)
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Periodic Hann window of length `n`.
pub fn hann<T: Scalar>(n: usize) -> Vec<T> {
    (0..n).map(|i| T::lit(0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())).collect()
}

/// Reusable windowed real-input STFT.
pub struct Stft<T: Scalar> {
    fft: Arc<dyn Fft<T>>,
    window: Vec<T>,
    hop: usize,
    bins: usize,
}

impl<T: Scalar> Stft<T> {
    pub fn new(cfg: &SpectralConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Self { fft, window: hann(cfg.fft_size), hop: cfg.hop, bins: cfg.num_bins() }
    }

    /// Calls `f(frame_index, spectrum)` with the positive-frequency half
    /// of each frame's spectrum.
    pub fn for_each_frame(&self, x: &[T], mut f: impl FnMut(usize, &[Complex<T>])) {
        let n = self.window.len();
        if x.len() < n {
            return;
        }
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.fft.get_inplace_scratch_len()];
        for (m, start) in (0..=x.len() - n).step_by(self.hop).enumerate() {
            for ((b, &s), &w) in buf.iter_mut().zip(&x[start..start + n]).zip(&self.window) {
                *b = Complex::new(s * w, T::zero());
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            f(m, &buf[..self.bins]);
        }
    }

    /// `frames x bins` magnitudes.
    pub fn magnitude(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut out = Vec::new();
        self.for_each_frame(x, |_, spec| out.push(spec.iter().map(|c| c.norm()).collect()));
        out
    }

    /// `frames x bins` power (squared magnitude).
    pub fn power(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut out = Vec::new();
        self.for_each_frame(x, |_, spec| out.push(spec.iter().map(|c| c.norm_sqr()).collect()));
        out
    }
}

/// `frames x mel_bins` mel power spectrogram.
pub fn mel_power<T: Scalar>(x: &[T], cfg: &SpectralConfig) -> Result<Vec<Vec<T>>> {
    let bank = cfg.mel_filterbank::<T>()?;
    let stft = Stft::new(cfg);
    Ok(stft
        .power(x)
        .into_iter()
        .map(|p| bank.iter().map(|row| row.iter().zip(&p).map(|(&w, &v)| w * v).sum()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_scale_round_trip() {
        for hz in [0.0, 100.0, 1000.0, 11025.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(1000.0) - 1000.0).abs() < 0.1);
    }

    #[test]
    fn default_filterbank_rows_positive() {
        let cfg = SpectralConfig::for_rate(22050);
        let bank = cfg.mel_filterbank::<f64>().unwrap();
        assert_eq!(bank.len(), 80);
        assert!(bank.iter().all(|r| r.len() == 513 && r.iter().sum::<f64>() > 0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SpectralConfig::for_rate(22050);
        cfg.hop = 2048;
        assert!(cfg.validate().is_err());
        let mut cfg = SpectralConfig::for_rate(22050);
        cfg.log_floor = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SpectralConfig::for_rate(22050);
        cfg.fft_size = 16;
        cfg.hop = 8;
        assert!(cfg.mel_filterbank::<f64>().is_err(), "80 mel rows cannot fit 9 bins");
    }

    #[test]
    fn hann_is_periodic() {
        let w: Vec<f64> = hann(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[1] - w[7]).abs() < 1e-15);
    }

    #[test]
    fn sine_peaks_in_its_bin() {
        let cfg = SpectralConfig { fft_size: 64, hop: 32, ..SpectralConfig::for_rate(6400) };
        // 1000 Hz lands exactly on bin 10 at 100 Hz/bin
        let x: Vec<f64> = (0..640).map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 6400.0).sin()).collect();
        let mags = Stft::new(&cfg).magnitude(&x);
        assert_eq!(mags.len(), cfg.num_frames(640));
        for frame in mags {
            let peak = frame.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(peak, 10);
        }
    }
}
