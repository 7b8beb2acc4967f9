//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the library's FFT, filterbank or mixed-radix
//! code; every value is computed from first principles.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Enumerates index tuples with dimension 0 varying fastest; the position
/// of a tuple in this order is its code.
pub fn enumerate_codes(levels: &[u32]) -> Vec<Vec<u32>> {
    let total: u64 = levels.iter().map(|&l| l as u64).product();
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0u32; levels.len()];
    for _ in 0..total {
        out.push(idx.clone());
        for (d, &l) in levels.iter().enumerate() {
            idx[d] += 1;
            if idx[d] < l {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Direct formula: `floor(((L-1)/2) tanh z + (L-1)/2 + 1/2)`.
pub fn quantize_dim(z: f64, levels: u32) -> u32 {
    let half = (levels as f64 - 1.0) / 2.0;
    let v = (half * z.tanh() + half + 0.5).floor();
    v.clamp(0.0, levels as f64 - 1.0) as u32
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| (PI * i as f64 / n as f64).sin().powi(2)).collect()
}

/// `frames x (fft/2 + 1)` complex spectra by the O(N^2) DFT sum.
pub fn dft_frames(x: &[f64], fft: usize, hop: usize) -> Vec<Vec<(f64, f64)>> {
    let w = hann(fft);
    let mut frames = Vec::new();
    let mut start = 0;
    while start + fft <= x.len() {
        let seg: Vec<f64> = (0..fft).map(|n| x[start + n] * w[n]).collect();
        let bins = (0..=fft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, &s) in seg.iter().enumerate() {
                    let ang = -2.0 * PI * (k * n) as f64 / fft as f64;
                    re += s * ang.cos();
                    im += s * ang.sin();
                }
                (re, im)
            })
            .collect();
        frames.push(bins);
        start += hop;
    }
    frames
}

/// HTK-scale triangular filters written out from the definition.
pub fn mel_filters(sample_rate: f64, fft: usize, mels: usize, lo_hz: f64, hi_hz: f64) -> Vec<Vec<f64>> {
    let to_mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let to_hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let (mlo, mhi) = (to_mel(lo_hz), to_mel(hi_hz));
    let step = (mhi - mlo) / (mels + 1) as f64;
    (0..mels)
        .map(|m| {
            let l = to_hz(mlo + step * m as f64);
            let c = to_hz(mlo + step * (m + 1) as f64);
            let r = to_hz(mlo + step * (m + 2) as f64);
            (0..=fft / 2)
                .map(|k| {
                    let f = k as f64 * sample_rate / fft as f64;
                    if f <= l || f >= r {
                        0.0
                    } else if f <= c {
                        (f - l) / (c - l)
                    } else {
                        (r - f) / (r - c)
                    }
                })
                .collect()
        })
        .collect()
}

fn mean_abs(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            s += (x - y).abs();
            n += 1;
        }
    }
    s / n as f64
}

pub struct Analysis {
    pub sample_rate: f64,
    pub fft: usize,
    pub hop: usize,
    pub mels: usize,
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub floor: f64,
}

impl Analysis {
    fn log_mag(&self, x: &[f64]) -> Vec<Vec<f64>> {
        dft_frames(x, self.fft, self.hop)
            .into_iter()
            .map(|f| f.into_iter().map(|(re, im)| ((re * re + im * im).sqrt() + self.floor).ln()).collect())
            .collect()
    }

    fn log_mel(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let bank = mel_filters(self.sample_rate, self.fft, self.mels, self.lo_hz, self.hi_hz);
        dft_frames(x, self.fft, self.hop)
            .into_iter()
            .map(|f| {
                let p: Vec<f64> = f.into_iter().map(|(re, im)| re * re + im * im).collect();
                bank.iter().map(|row| (row.iter().zip(&p).map(|(w, v)| w * v).sum::<f64>() + self.floor).ln()).collect()
            })
            .collect()
    }

    pub fn stft_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        mean_abs(&self.log_mag(a), &self.log_mag(b))
    }

    pub fn mel_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        mean_abs(&self.log_mel(a), &self.log_mel(b))
    }
}

/// Reads `count` fixed-width MSB-first fields one bit at a time.
pub fn read_bit_fields(bytes: &[u8], width: u32, count: usize) -> Vec<u32> {
    (0..count)
        .map(|i| {
            let mut v = 0u32;
            for b in 0..width as usize {
                let bit = i * width as usize + b;
                let set = bytes[bit / 8] >> (7 - bit % 8) & 1;
                v = (v << 1) | set as u32;
            }
            v
        })
        .collect()
}

/// Deterministic xorshift noise in `[-1, 1)`; keeps fixtures independent
/// of the `rand` crate's stream.
pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.max(1);
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}

/// Sum of equal-amplitude cosines every `spacing_hz` (offset by half a
/// spacing) strictly below `cutoff_hz`, with pseudo-random phases: a flat
/// spectrum band-limited at the cutoff.
pub fn bandlimited_noise(n: usize, sample_rate: f64, cutoff_hz: f64, spacing_hz: f64, seed: u64) -> Vec<f64> {
    let count = ((cutoff_hz - spacing_hz / 2.0) / spacing_hz).floor() as usize + 1;
    let phases = noise(count, seed);
    let amp = (2.0 / count as f64).sqrt() * 0.3;
    let mut out = vec![0.0; n];
    for (j, ph) in phases.iter().enumerate() {
        let f = spacing_hz / 2.0 + j as f64 * spacing_hz;
        let (step_c, step_s) = ((2.0 * PI * f / sample_rate).cos(), (2.0 * PI * f / sample_rate).sin());
        let (mut c, mut s) = ((PI * ph).cos(), (PI * ph).sin());
        for v in out.iter_mut() {
            *v += amp * c;
            let nc = c * step_c - s * step_s;
            s = s * step_c + c * step_s;
            c = nc;
        }
    }
    out
}
