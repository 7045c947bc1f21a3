//! Square 2D FFTs on row-major `n × n` buffers.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Fft2 {
        let mut p = FftPlanner::new();
        Fft2 {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized `Σ_x f(x) e^{-2πi k·x}` (forward) or `Σ_k f(k) e^{2πi k·x}` (inverse),
    /// with buffer index `i * n + j` holding coordinate `(i, j)`.
    pub fn process(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let plan = if inverse { &self.inv } else { &self.fwd };
        plan.process(data);
        let mut col = vec![Complex64::default(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }
}

/// Buffer index of frequency `k` (negative frequencies wrap).
#[inline]
pub fn freq_index(k: i32, n: usize) -> usize {
    k.rem_euclid(n as i32) as usize
}
