//! FFT-backed circular convolution, the workhorse behind every Toeplitz
//! operator application in the crate.
//!
//! All operators here have translation-invariant weights, so applying them is
//! a convolution. Callers lay the kernel out circularly themselves (this is
//! where linear-vs-periodic semantics are decided: zero-pad for linear
//! convolution, use the exact period for circular) and get back the full
//! circular convolution.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Scratch buffers so repeated applications do not allocate.
#[derive(Default)]
pub struct ConvScratch {
    buf: Vec<Complex<f64>>,
    buf2: Vec<Complex<f64>>,
}

/// 1D circular convolution of fixed size with a frozen kernel.
pub struct Conv1d {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    ker_hat: Vec<Complex<f64>>,
}

impl Conv1d {
    /// `kernel` is the full circular layout of length `m` (index = offset mod m).
    pub fn new(kernel: &[f64]) -> Self {
        let m = kernel.len();
        assert!(m > 0, "empty convolution kernel");
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let mut ker_hat: Vec<Complex<f64>> =
            kernel.iter().map(|&w| Complex::new(w, 0.0)).collect();
        fwd.process(&mut ker_hat);
        Conv1d {
            m,
            fwd,
            inv,
            ker_hat,
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Circular convolution; `input` is zero-extended to length `m`,
    /// `out[0..m]` receives kernel * input.
    pub fn apply(&self, input: &[f64], scratch: &mut ConvScratch, out: &mut [f64]) {
        assert!(input.len() <= self.m && out.len() == self.m);
        let buf = &mut scratch.buf;
        buf.clear();
        buf.resize(self.m, Complex::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(input.iter()) {
            b.re = v;
        }
        self.fwd.process(buf);
        for (b, k) in buf.iter_mut().zip(self.ker_hat.iter()) {
            *b *= k;
        }
        self.inv.process(buf);
        let scale = 1.0 / self.m as f64;
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * scale;
        }
    }
}

/// Lay symmetric weights out circularly: `w[j-1]` is the weight at offsets
/// `+-j`, the offset-0 weight is `w0`. `m` must leave room for both wings.
pub fn symmetric_circular_kernel(m: usize, w0: f64, w: &[f64]) -> Vec<f64> {
    assert!(w.len() < m, "kernel wings do not fit the circular buffer");
    let mut k = vec![0.0; m];
    k[0] = w0;
    for (j, &wj) in w.iter().enumerate() {
        let off = j + 1;
        k[off] += wj;
        k[m - off] += wj;
    }
    k
}

pub fn next_pow2(n: usize) -> usize {
    let mut m = 1;
    while m < n {
        m *= 2;
    }
    m
}

/// 2D circular convolution on an `m1 x m2` torus (row-major layout).
///
/// The planelike module uses it with a zero-padded first axis (linear in the
/// strip coordinate) and the exact transverse period as second axis
/// (genuinely circular).
pub struct Conv2d {
    m1: usize,
    m2: usize,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    ker_hat: Vec<Complex<f64>>,
}

impl Conv2d {
    /// `kernel` is the full circular layout, row-major `m1 x m2`.
    pub fn new(kernel: &[f64], m1: usize, m2: usize) -> Self {
        assert_eq!(kernel.len(), m1 * m2);
        let mut planner = FftPlanner::new();
        let fwd1 = planner.plan_fft_forward(m1);
        let inv1 = planner.plan_fft_inverse(m1);
        let fwd2 = planner.plan_fft_forward(m2);
        let inv2 = planner.plan_fft_inverse(m2);
        let mut ker_hat: Vec<Complex<f64>> =
            kernel.iter().map(|&w| Complex::new(w, 0.0)).collect();
        fft2_in_place(&mut ker_hat, m1, m2, &fwd1, &fwd2);
        Conv2d {
            m1,
            m2,
            fwd1,
            inv1,
            fwd2,
            inv2,
            ker_hat,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    /// Circular convolution; `input` row-major with `rows <= m1` full rows
    /// (zero-extended below), `out` receives the full `m1 x m2` result.
    pub fn apply(&self, input: &[f64], scratch: &mut ConvScratch, out: &mut [f64]) {
        let n = self.m1 * self.m2;
        assert!(input.len() <= n && input.len() % self.m2 == 0);
        assert_eq!(out.len(), n);
        let buf = &mut scratch.buf;
        buf.clear();
        buf.resize(n, Complex::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(input.iter()) {
            b.re = v;
        }
        fft2_in_place(buf, self.m1, self.m2, &self.fwd1, &self.fwd2);
        for (b, k) in buf.iter_mut().zip(self.ker_hat.iter()) {
            *b *= k;
        }
        // inverse 2D FFT via the same row/column sweep
        fft2_in_place(buf, self.m1, self.m2, &self.inv1, &self.inv2);
        let scale = 1.0 / n as f64;
        let col = &mut scratch.buf2;
        let _ = col;
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * scale;
        }
    }
}

/// Row-column 2D FFT: transform each row (length m2), then each column
/// (length m1, gathered through a scratch column buffer).
fn fft2_in_place(
    data: &mut [Complex<f64>],
    m1: usize,
    m2: usize,
    fft_cols: &Arc<dyn Fft<f64>>,
    fft_rows: &Arc<dyn Fft<f64>>,
) {
    debug_assert_eq!(data.len(), m1 * m2);
    for row in data.chunks_exact_mut(m2) {
        fft_rows.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); m1];
    for j in 0..m2 {
        for i in 0..m1 {
            col[i] = data[i * m2 + j];
        }
        fft_cols.process(&mut col);
        for i in 0..m1 {
            data[i * m2 + j] = col[i];
        }
    }
}
