//! Trigonometric polynomials used as test functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::modes::Mode;

/// `φ(x) = Σ_{l ∈ Λ} φ̂(l) e_l(x)` over a finite set of non-zero modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    terms: Vec<(Mode, Complex64)>,
}

impl TestFunction {
    pub fn new(mut terms: Vec<(Mode, Complex64)>) -> TestFunction {
        terms.sort_by_key(|(k, _)| *k);
        let mut merged: Vec<(Mode, Complex64)> = Vec::with_capacity(terms.len());
        for (k, c) in terms {
            match merged.last_mut() {
                Some((l, d)) if *l == k => *d += c,
                _ => merged.push((k, c)),
            }
        }
        TestFunction { terms: merged }
    }

    /// `e_l`.
    pub fn fourier(l: Mode) -> TestFunction {
        TestFunction::new(vec![(l, Complex64::new(1.0, 0.0))])
    }

    /// `cos(2π l·x) = (e_l + e_{-l})/2`.
    pub fn cos(l: Mode) -> TestFunction {
        TestFunction::new(vec![(l, 0.5.into()), (l.neg(), 0.5.into())])
    }

    /// `sin(2π l·x) = (e_l - e_{-l})/(2i)`.
    pub fn sin(l: Mode) -> TestFunction {
        TestFunction::new(vec![
            (l, Complex64::new(0.0, -0.5)),
            (l.neg(), Complex64::new(0.0, 0.5)),
        ])
    }

    pub fn terms(&self) -> &[(Mode, Complex64)] {
        &self.terms
    }

    pub fn coef(&self, k: Mode) -> Complex64 {
        self.terms
            .iter()
            .find(|(l, _)| *l == k)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    /// Largest `|l|_∞` in Λ.
    pub fn band(&self) -> usize {
        self.terms
            .iter()
            .map(|(k, _)| k.k1.unsigned_abs().max(k.k2.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Largest Euclidean `|l|` in Λ.
    pub fn radius(&self) -> f64 {
        self.terms.iter().map(|(k, _)| k.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.terms
            .iter()
            .all(|(k, c)| (self.coef(k.neg()) - c.conj()).norm() <= tol)
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        self.terms.iter().map(|(k, c)| c * k.e(x)).sum()
    }

    pub fn grad(&self, x: [f64; 2]) -> [Complex64; 2] {
        let mut g = [Complex64::default(); 2];
        for (k, c) in &self.terms {
            let v = c * k.e(x) * Complex64::new(0.0, 2.0 * PI);
            g[0] += v * k.k1 as f64;
            g[1] += v * k.k2 as f64;
        }
        g
    }

    pub fn hessian(&self, x: [f64; 2]) -> [[Complex64; 2]; 2] {
        let mut h = [[Complex64::default(); 2]; 2];
        for (k, c) in &self.terms {
            let v = -c * k.e(x) * (4.0 * PI * PI);
            let kv = k.as_vec();
            for i in 0..2 {
                for j in 0..2 {
                    h[i][j] += v * kv[i] * kv[j];
                }
            }
        }
        h
    }

    pub fn laplacian(&self) -> TestFunction {
        TestFunction {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (*k, -c * (4.0 * PI * PI * k.norm2() as f64)))
                .collect(),
        }
    }

    /// `‖∇²φ‖_∞` as the maximum Frobenius norm of the Hessian over a uniform
    /// `grid × grid` lattice of the torus.
    pub fn hessian_sup(&self, grid: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..grid {
            for j in 0..grid {
                let h = self.hessian([i as f64 / grid as f64, j as f64 / grid as f64]);
                let f: f64 = h.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                best = best.max(f);
            }
        }
        best
    }

    /// `sup |φ|` over a uniform lattice.
    pub fn sup(&self, grid: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..grid {
            for j in 0..grid {
                best = best.max(
                    self.eval([i as f64 / grid as f64, j as f64 / grid as f64])
                        .norm(),
                );
            }
        }
        best
    }

    pub fn scale(&self, s: Complex64) -> TestFunction {
        TestFunction {
            terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let phi = TestFunction::new(vec![
            (Mode::of(1, 2), Complex64::new(0.3, 0.1)),
            (Mode::of(-2, 1), Complex64::new(-0.7, 0.4)),
        ]);
        let x = [0.23, 0.61];
        let h = 1e-6;
        let g = phi.grad(x);
        let fd0 = (phi.eval([x[0] + h, x[1]]) - phi.eval([x[0] - h, x[1]])) / (2.0 * h);
        assert!((g[0] - fd0).norm() < 1e-6 * g[0].norm().max(1.0));
        let hs = phi.hessian(x);
        let tr = hs[0][0] + hs[1][1];
        assert!((tr - phi.laplacian().eval(x)).norm() < 1e-9);
    }

    #[test]
    fn cos_is_real_and_matches() {
        let c = TestFunction::cos(Mode::of(1, 1));
        assert!(c.is_real(0.0));
        let v = c.eval([0.1, 0.2]);
        assert!((v.re - (2.0 * PI * 0.3).cos()).abs() < 1e-14 && v.im.abs() < 1e-15);
        let s = TestFunction::sin(Mode::of(1, 1)).eval([0.1, 0.2]);
        assert!((s.re - (2.0 * PI * 0.3).sin()).abs() < 1e-14);
        assert!(!TestFunction::fourier(Mode::of(1, 0)).is_real(1e-12));
    }
}
