//! Band-limited real distributions on the torus in Fourier coordinates.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::modes::{half_modes_in_ball, modes_in_ball, Mode};
use crate::testfn::TestFunction;

/// Coefficients `ĉ(k)` of `ξ = Σ ĉ(k) e_k` on `0 < |k| <= m`.
///
/// `ĉ(k) = ⟨ξ, e_{-k}⟩`, so `⟨ξ, e_k⟩ = ĉ(-k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub m: usize,
    coef: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl SpectralField {
    pub fn zeros(m: usize) -> SpectralField {
        let side = 2 * m + 1;
        SpectralField {
            m,
            coef: vec![ZERO; side * side],
        }
    }

    #[inline]
    fn idx(&self, k: Mode) -> Option<usize> {
        if !k.within(self.m) {
            return None;
        }
        let side = 2 * self.m + 1;
        let m = self.m as i32;
        Some((k.k1 + m) as usize * side + (k.k2 + m) as usize)
    }

    /// `ĉ(k)`; zero outside the band.
    #[inline]
    pub fn get(&self, k: Mode) -> Complex64 {
        self.idx(k).map(|i| self.coef[i]).unwrap_or(ZERO)
    }

    /// Sets `ĉ(k) = c` and `ĉ(-k) = conj(c)`. Modes beyond the band are ignored.
    pub fn set(&mut self, k: Mode, c: Complex64) {
        if let Some(i) = self.idx(k) {
            self.coef[i] = c;
            let j = self.idx(k.neg()).unwrap();
            self.coef[j] = c.conj();
        }
    }

    /// Sets a single coefficient without enforcing reality (used by tests of the checks).
    pub fn set_raw(&mut self, k: Mode, c: Complex64) {
        if let Some(i) = self.idx(k) {
            self.coef[i] = c;
        }
    }

    /// `⟨ξ, e_k⟩`.
    #[inline]
    pub fn pair_e(&self, k: Mode) -> Complex64 {
        self.get(k.neg())
    }

    pub fn modes(&self) -> Vec<Mode> {
        modes_in_ball(self.m)
    }

    /// `max_k |ĉ(-k) - conj(ĉ(k))|`.
    pub fn reality_residual(&self) -> f64 {
        self.modes()
            .iter()
            .map(|&k| (self.get(k.neg()) - self.get(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Π_{m'} ξ, re-stored with cutoff `m'`.
    pub fn project(&self, m: usize) -> SpectralField {
        let mut out = SpectralField::zeros(m);
        for k in modes_in_ball(m.min(self.m)) {
            out.set_raw(k, self.get(k));
        }
        out
    }

    /// `ξ(x)`; real part of the finite sum (imaginary part vanishes for real fields).
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.modes()
            .iter()
            .map(|&k| (self.get(k) * k.e(x)).re)
            .sum()
    }

    /// `⟨ξ, φ⟩ = Σ ĉ(k) φ̂(-k)`.
    pub fn pair(&self, phi: &TestFunction) -> Complex64 {
        phi.terms().iter().map(|(l, c)| self.pair_e(*l) * c).sum()
    }

    /// `∫ ξ η` for real fields.
    pub fn l2_inner(&self, other: &SpectralField) -> f64 {
        self.modes()
            .iter()
            .map(|&k| (self.get(k) * other.get(k).conj()).re)
            .sum()
    }

    pub fn l2_norm2(&self) -> f64 {
        self.l2_inner(self)
    }

    /// Truncated `‖ξ‖²_{H^{-s}} = Σ |k|^{-2s} |ĉ(k)|²`.
    pub fn sobolev_norm2(&self, s: f64) -> f64 {
        self.modes()
            .iter()
            .map(|&k| (k.norm2() as f64).powf(-s) * self.get(k).norm_sqr())
            .sum()
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coef
    }

    pub fn scale(&mut self, s: f64) {
        for c in self.coef.iter_mut() {
            *c *= s;
        }
    }

    pub fn add_assign(&mut self, other: &SpectralField) {
        for k in modes_in_ball(self.m.min(other.m)) {
            if let Some(i) = self.idx(k) {
                self.coef[i] += other.get(k);
            }
        }
    }
}

/// White noise restricted to `0 < |k| <= m`: for each `k ∈ Z²₊`, `ĉ(k) = g₁ + i g₂`
/// with `g₁, g₂ ~ N(0, ½)` independent, and `ĉ(-k) = conj(ĉ(k))`.
pub fn sample_white_noise<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<SpectralField> {
    if m == 0 {
        return Err(invalid("m", "white noise cutoff must be >= 1"));
    }
    let mut f = SpectralField::zeros(m);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in half_modes_in_ball(m) {
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        f.set(k, Complex64::new(s * g1, s * g2));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conjugate_storage() {
        let mut f = SpectralField::zeros(3);
        f.set(Mode::of(1, 2), Complex64::new(0.5, -0.25));
        assert_eq!(f.get(Mode::of(-1, -2)), Complex64::new(0.5, 0.25));
        assert_eq!(f.reality_residual(), 0.0);
        f.set_raw(Mode::of(2, 0), Complex64::new(1.0, 0.0));
        assert!(f.reality_residual() > 0.5);
        assert_eq!(f.get(Mode::of(4, 0)), ZERO);
    }

    #[test]
    fn eval_matches_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = sample_white_noise(&mut rng, 4).unwrap();
        // ⟨ξ, e_k⟩ by a 16x16 Riemann sum is exact for band-limited fields
        let n = 16;
        let k = Mode::of(2, -1);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let x = [i as f64 / n as f64, j as f64 / n as f64];
                s += k.e(x) * f.eval(x);
            }
        }
        s /= (n * n) as f64;
        assert!((s - f.pair_e(k)).norm() < 1e-12);
    }

    #[test]
    fn seeds_reproduce() {
        let a = sample_white_noise(&mut ChaCha8Rng::seed_from_u64(9), 5).unwrap();
        let b = sample_white_noise(&mut ChaCha8Rng::seed_from_u64(9), 5).unwrap();
        assert_eq!(a, b);
        assert!(sample_white_noise(&mut ChaCha8Rng::seed_from_u64(9), 0).is_err());
    }
}
