//! 1-D convolution primitives over channel-major `[channels, time]` buffers.
//!
//! Both convolutions lower to GEMM: the regular convolution via im2col,
//! the transposed one via col2im. Time is processed in tiles so the column
//! buffer stays bounded for long inputs.

use super::weights::Tensor;
use crate::scalar::Scalar;

const TIME_TILE: usize = 4096;

/// Channel-major activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    pub data: Vec<T>,
    pub channels: usize,
    pub len: usize,
}

impl<T: Scalar> Signal<T> {
    pub fn new(data: Vec<T>, channels: usize, len: usize) -> Self {
        debug_assert_eq!(data.len(), channels * len);
        Self { data, channels, len }
    }

    pub fn zeros(channels: usize, len: usize) -> Self {
        Self { data: vec![T::zero(); channels * len], channels, len }
    }

    pub fn channel(&self, c: usize) -> &[T] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn leaky_relu(&mut self, slope: T) {
        for v in &mut self.data {
            if *v < T::zero() {
                *v *= slope;
            }
        }
    }

    pub fn leaky_relu_copy(&self, slope: T) -> Self {
        let mut out = self.clone();
        out.leaky_relu(slope);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }
}

fn convert<T: Scalar>(t: &Tensor) -> Vec<T> {
    t.data.iter().map(|&v| T::of_f32(v)).collect()
}

/// `y[o, t] = b[o] + sum_{i,k} w[o, i, k] * x[i, t*stride + k*dilation - padding]`
#[derive(Debug, Clone)]
pub struct Conv1d<T> {
    weight: Vec<T>,
    bias: Vec<T>,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    dilation: usize,
    padding: usize,
}

impl<T: Scalar> Conv1d<T> {
    pub fn new(weight: &Tensor, bias: &Tensor, stride: usize, dilation: usize, padding: usize) -> Self {
        let [out_ch, in_ch, kernel] = weight.shape[..] else {
            panic!("conv weight must be rank 3, got {:?}", weight.shape)
        };
        assert_eq!(bias.shape, [out_ch]);
        Self { weight: convert(weight), bias: convert(bias), in_ch, out_ch, kernel, stride, dilation, padding }
    }

    /// Stride-1 convolution with symmetric "same" padding.
    pub fn same(weight: &Tensor, bias: &Tensor, dilation: usize) -> Self {
        let kernel = weight.shape[2];
        Self::new(weight, bias, 1, dilation, dilation * (kernel - 1) / 2)
    }

    pub fn out_len(&self, in_len: usize) -> usize {
        let span = self.dilation * (self.kernel - 1) + 1;
        let padded = in_len + 2 * self.padding;
        if padded < span {
            0
        } else {
            (padded - span) / self.stride + 1
        }
    }

    pub fn forward(&self, x: &Signal<T>) -> Signal<T> {
        assert_eq!(x.channels, self.in_ch, "conv input channels");
        let out_len = self.out_len(x.len);
        let mut y = Signal::zeros(self.out_ch, out_len);
        if out_len == 0 {
            return y;
        }
        for (o, row) in y.data.chunks_exact_mut(out_len).enumerate() {
            row.fill(self.bias[o]);
        }
        let rows = self.in_ch * self.kernel;

        if self.kernel == 1 && self.stride == 1 && self.padding == 0 {
            T::gemm(
                self.out_ch,
                rows,
                out_len,
                T::one(),
                &self.weight,
                (rows as isize, 1),
                &x.data,
                (x.len as isize, 1),
                T::one(),
                &mut y.data,
                out_len as isize,
            );
            return y;
        }

        let tile = TIME_TILE.min(out_len);
        let mut cols = vec![T::zero(); rows * tile];
        let pad = self.padding as isize;
        for t0 in (0..out_len).step_by(tile) {
            let n = tile.min(out_len - t0);
            for i in 0..self.in_ch {
                let src = x.channel(i);
                for k in 0..self.kernel {
                    let dst = &mut cols[(i * self.kernel + k) * n..(i * self.kernel + k + 1) * n];
                    let offset = (k * self.dilation) as isize - pad;
                    for (j, d) in dst.iter_mut().enumerate() {
                        let p = ((t0 + j) * self.stride) as isize + offset;
                        *d = if p >= 0 && (p as usize) < x.len { src[p as usize] } else { T::zero() };
                    }
                }
            }
            T::gemm(
                self.out_ch,
                rows,
                n,
                T::one(),
                &self.weight,
                (rows as isize, 1),
                &cols[..rows * n],
                (n as isize, 1),
                T::one(),
                &mut y.data[t0..],
                out_len as isize,
            );
        }
        y
    }
}

/// Transposed convolution:
/// `y[o, s*stride + k - padding] += w[i, o, k] * x[i, s]`, plus bias.
#[derive(Debug, Clone)]
pub struct ConvTranspose1d<T> {
    weight: Vec<T>,
    bias: Vec<T>,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
}

impl<T: Scalar> ConvTranspose1d<T> {
    pub fn new(weight: &Tensor, bias: &Tensor, stride: usize, padding: usize) -> Self {
        let [in_ch, out_ch, kernel] = weight.shape[..] else {
            panic!("transposed conv weight must be rank 3, got {:?}", weight.shape)
        };
        assert_eq!(bias.shape, [out_ch]);
        Self { weight: convert(weight), bias: convert(bias), in_ch, out_ch, kernel, stride, padding }
    }

    pub fn out_len(&self, in_len: usize) -> usize {
        if in_len == 0 {
            return 0;
        }
        ((in_len - 1) * self.stride + self.kernel).saturating_sub(2 * self.padding)
    }

    pub fn forward(&self, x: &Signal<T>) -> Signal<T> {
        assert_eq!(x.channels, self.in_ch, "transposed conv input channels");
        let out_len = self.out_len(x.len);
        let mut y = Signal::zeros(self.out_ch, out_len);
        if out_len == 0 {
            return y;
        }
        for (o, row) in y.data.chunks_exact_mut(out_len).enumerate() {
            row.fill(self.bias[o]);
        }
        let rows = self.out_ch * self.kernel;
        let tile = TIME_TILE.min(x.len);
        let mut cols = vec![T::zero(); rows * tile];
        for s0 in (0..x.len).step_by(tile) {
            let n = tile.min(x.len - s0);
            // cols[(o*k + kk), s] = sum_i w[i, o, kk] * x[i, s0 + s]
            T::gemm(
                rows,
                self.in_ch,
                n,
                T::one(),
                &self.weight,
                (1, rows as isize),
                &x.data[s0..],
                (x.len as isize, 1),
                T::zero(),
                &mut cols[..rows * n],
                n as isize,
            );
            for o in 0..self.out_ch {
                let dst = &mut y.data[o * out_len..(o + 1) * out_len];
                for kk in 0..self.kernel {
                    let src = &cols[(o * self.kernel + kk) * n..(o * self.kernel + kk + 1) * n];
                    for (j, &v) in src.iter().enumerate() {
                        let t = ((s0 + j) * self.stride + kk) as isize - self.padding as isize;
                        if t >= 0 && (t as usize) < out_len {
                            dst[t as usize] += v;
                        }
                    }
                }
            }
        }
        y
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn tensor(shape: &[usize], f: impl Fn(usize) -> f32) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(f).collect()).unwrap()
    }

    fn naive_conv(w: &Tensor, b: &Tensor, x: &[Vec<f64>], stride: usize, dil: usize, pad: usize) -> Vec<Vec<f64>> {
        let (oc, ic, k) = (w.shape[0], w.shape[1], w.shape[2]);
        let len = x[0].len();
        let out_len = (len + 2 * pad - dil * (k - 1) - 1) / stride + 1;
        (0..oc)
            .map(|o| {
                (0..out_len)
                    .map(|t| {
                        let mut acc = b.data[o] as f64;
                        for i in 0..ic {
                            for kk in 0..k {
                                let p = (t * stride + kk * dil) as isize - pad as isize;
                                if p >= 0 && (p as usize) < len {
                                    acc += w.data[(o * ic + i) * k + kk] as f64 * x[i][p as usize];
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    fn naive_conv_t(w: &Tensor, b: &Tensor, x: &[Vec<f64>], stride: usize, pad: usize) -> Vec<Vec<f64>> {
        let (ic, oc, k) = (w.shape[0], w.shape[1], w.shape[2]);
        let len = x[0].len();
        let out_len = (len - 1) * stride + k - 2 * pad;
        let mut y = vec![vec![0.0; out_len]; oc];
        for (o, row) in y.iter_mut().enumerate() {
            row.fill(b.data[o] as f64);
            for i in 0..ic {
                for s in 0..len {
                    for kk in 0..k {
                        let t = (s * stride + kk) as isize - pad as isize;
                        if t >= 0 && (t as usize) < out_len {
                            row[t as usize] += w.data[(i * oc + o) * k + kk] as f64 * x[i][s];
                        }
                    }
                }
            }
        }
        y
    }

    fn input(ch: usize, len: usize) -> Vec<Vec<f64>> {
        (0..ch).map(|c| (0..len).map(|t| ((c * 31 + t * 7) % 13) as f64 / 6.0 - 1.0).collect()).collect()
    }

    fn flat(x: &[Vec<f64>]) -> Signal<f64> {
        Signal::new(x.concat(), x.len(), x[0].len())
    }

    #[test]
    fn conv_matches_naive() {
        let w = tensor(&[3, 2, 5], |i| (i as f32 * 0.37).sin());
        let b = tensor(&[3], |i| i as f32 * 0.1);
        let x = input(2, 23);
        for (stride, dil, pad) in [(1, 1, 2), (1, 3, 6), (2, 1, 1), (4, 1, 0)] {
            let conv = Conv1d::<f64>::new(&w, &b, stride, dil, pad);
            let got = conv.forward(&flat(&x));
            let want = naive_conv(&w, &b, &x, stride, dil, pad);
            assert_eq!(got.len, want[0].len());
            for (g, w) in got.data.iter().zip(want.concat()) {
                assert!((g - w).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pointwise_conv_fast_path() {
        let w = tensor(&[4, 3, 1], |i| i as f32 - 5.0);
        let b = tensor(&[4], |_| 0.5);
        let x = input(3, 9);
        let got = Conv1d::<f64>::new(&w, &b, 1, 1, 0).forward(&flat(&x));
        let want = naive_conv(&w, &b, &x, 1, 1, 0).concat();
        assert_eq!(got.data.len(), want.len());
        for (g, w) in got.data.iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn strided_conv_divides_length() {
        let w = tensor(&[2, 2, 16], |i| (i % 5) as f32);
        let b = tensor(&[2], |_| 0.0);
        let conv = Conv1d::<f32>::new(&w, &b, 8, 1, 4);
        assert_eq!(conv.out_len(64), 8);
        assert_eq!(conv.out_len(8), 1);
    }

    #[test]
    fn transposed_matches_naive() {
        let w = tensor(&[3, 2, 8], |i| (i as f32 * 0.11).cos());
        let b = tensor(&[2], |i| -(i as f32));
        let x = input(3, 6);
        let conv = ConvTranspose1d::<f64>::new(&w, &b, 4, 2);
        assert_eq!(conv.out_len(6), 24);
        let got = conv.forward(&flat(&x));
        let want = naive_conv_t(&w, &b, &x, 4, 2).concat();
        for (g, w) in got.data.iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn long_inputs_cross_tiles() {
        let w = tensor(&[2, 1, 3], |i| i as f32 + 1.0);
        let b = tensor(&[2], |_| 0.0);
        let x = input(1, TIME_TILE * 2 + 17);
        let got = Conv1d::<f64>::same(&w, &b, 1).forward(&flat(&x));
        let want = naive_conv(&w, &b, &x, 1, 1, 1).concat();
        for (g, w) in got.data.iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
        let wt = tensor(&[1, 2, 4], |i| i as f32 * 0.5);
        let got = ConvTranspose1d::<f64>::new(&wt, &b, 2, 1).forward(&flat(&x));
        let want = naive_conv_t(&wt, &b, &x, 2, 1).concat();
        for (g, w) in got.data.iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
    }
}
