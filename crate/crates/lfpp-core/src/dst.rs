//! Discrete sine transform (DST-I) on the interior of a size-n interval,
//! computed through a length-2n complex FFT with odd extension.
//!
//! The transform maps coefficients c_1..c_{n-1} to
//! s(x) = Σ_j c_j sin(π j x / n) for x = 1..n-1. It is its own inverse up to
//! the factor n/2.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    /// Transform for the interior of `{0..n}`; operates on slices of length n-1.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Self { n, fft }
    }

    pub fn interior_len(&self) -> usize {
        self.n - 1
    }

    /// In-place DST-I of `data` (length n-1). `buf` is scratch space and is
    /// resized as needed.
    pub fn transform(&self, data: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n - 1);
        buf.clear();
        buf.resize(2 * n, Complex::new(0.0, 0.0));
        for (j, &c) in data.iter().enumerate() {
            buf[j + 1].re = c;
            buf[2 * n - 1 - j].re = -c;
        }
        self.fft.process(buf);
        for (x, d) in data.iter_mut().enumerate() {
            // odd real input makes the spectrum purely imaginary
            *d = -0.5 * buf[x + 1].im;
        }
    }
}

/// 2D separable DST-I over the interior of `{0..n}²` (row-major, (n-1)² values).
pub struct Dst2d {
    dst: Dst1,
}

impl Dst2d {
    pub fn new(n: usize) -> Self {
        Self { dst: Dst1::new(n) }
    }

    pub fn transform(&self, grid: &mut [f64]) {
        let k = self.dst.interior_len();
        assert_eq!(grid.len(), k * k);
        let mut buf = Vec::new();
        let mut col = vec![0.0; k];
        for row in grid.chunks_mut(k) {
            self.dst.transform(row, &mut buf);
        }
        for x in 0..k {
            for y in 0..k {
                col[y] = grid[y * k + x];
            }
            self.dst.transform(&mut col, &mut buf);
            for y in 0..k {
                grid[y * k + x] = col[y];
            }
        }
    }
}
