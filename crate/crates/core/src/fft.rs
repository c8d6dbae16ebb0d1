//! Thin wrappers over rustfft: unnormalized forward 1D transforms and a
//! square 2D transform pair used by the plane solver.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward DFT in place: `out[b] = sum_j in[j] e^{-2 pi i j b / n}`.
pub(crate) fn forward(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(data.len());
    fft.process(data);
}

/// Square 2D transform with cached plans and a transpose scratch buffer.
/// Forward is unnormalized; inverse divides by `n^2`.
pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Fft2 {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scratch: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    fn pass(&mut self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let plan = if inverse { &self.inv } else { &self.fwd };
        // Rows, transpose, rows, transpose back: a full separable 2D pass.
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        transpose(data, &mut self.scratch, n);
        for row in self.scratch.chunks_exact_mut(n) {
            plan.process(row);
        }
        transpose(&self.scratch, data, n);
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.pass(data, false);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.pass(data, true);
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Signed frequency index for bin `i` of an `n`-point transform.
    pub fn freq(n: usize, i: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in 0..n {
            dst[i * n + j] = src[j * n + i];
        }
    }
}
