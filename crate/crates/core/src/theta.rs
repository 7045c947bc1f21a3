//! Radially symmetric noise coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modes::{modes_in_ball, Mode};

/// Noise coefficients `θ_k` on `0 < |k| <= cutoff`, stored per mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaSeq {
    pub cutoff: usize,
    modes: Vec<Mode>,
    values: Vec<f64>,
}

impl ThetaSeq {
    /// `θ_k = profile(|k|)` on the ball of radius `cutoff`.
    pub fn from_radial(cutoff: usize, profile: impl Fn(f64) -> f64) -> Result<ThetaSeq> {
        let modes = modes_in_ball(cutoff);
        let values: Vec<f64> = modes.iter().map(|k| profile(k.norm())).collect();
        ThetaSeq::from_values(cutoff, modes, values)
    }

    /// Arbitrary per-mode values; rejected unless nonnegative and radial.
    pub fn from_values(cutoff: usize, modes: Vec<Mode>, values: Vec<f64>) -> Result<ThetaSeq> {
        if modes.len() != values.len() {
            return Err(invalid("theta", "modes and values differ in length"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("theta", "values must be finite and nonnegative"));
        }
        if modes.iter().any(|k| !k.within(cutoff)) {
            return Err(invalid("theta", "mode outside cutoff"));
        }
        let t = ThetaSeq {
            cutoff,
            modes,
            values,
        };
        t.check_radial()?;
        Ok(t)
    }

    /// Values keyed by `|k|²` must agree exactly; every mode of the ball must be present
    /// whenever some mode on its shell is.
    pub fn check_radial(&self) -> Result<()> {
        let mut shell: std::collections::BTreeMap<i64, f64> = Default::default();
        for (k, v) in self.modes.iter().zip(&self.values) {
            match shell.get(&k.norm2()) {
                Some(w) if w != v => {
                    return Err(Error::Precondition(format!(
                        "theta not radially symmetric at |k|^2 = {}",
                        k.norm2()
                    )))
                }
                _ => {
                    shell.insert(k.norm2(), *v);
                }
            }
        }
        let have: std::collections::HashSet<Mode> = self.modes.iter().copied().collect();
        for k in modes_in_ball(self.cutoff) {
            if shell.get(&k.norm2()).copied().unwrap_or(0.0) != 0.0 && !have.contains(&k) {
                return Err(Error::Precondition(format!(
                    "theta shell incomplete at {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, f64)> + '_ {
        self.modes.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, k: Mode) -> f64 {
        self.modes
            .iter()
            .position(|m| *m == k)
            .map(|i| self.values[i])
            .unwrap_or(0.0)
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    /// `c_N = ½ Σ θ_k²`.
    pub fn c_n(&self) -> f64 {
        0.5 * self.norm2()
    }

    pub fn scaled(&self, factor: f64) -> ThetaSeq {
        ThetaSeq {
            cutoff: self.cutoff,
            modes: self.modes.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Same profile rescaled to a prescribed `‖θ‖²`.
    pub fn with_norm2(&self, target: f64) -> ThetaSeq {
        let n2 = self.norm2();
        if n2 == 0.0 {
            return self.clone();
        }
        self.scaled((target / n2).sqrt())
    }

    pub fn positive_modes(&self) -> Vec<(Mode, f64)> {
        self.iter().filter(|(k, _)| k.is_positive()).collect()
    }
}

/// `Σ_k θ_k² σ_k(x) ⊗ σ_{-k}(x)` together with the largest imaginary entry.
pub struct KeyIdentity {
    pub matrix: [[f64; 2]; 2],
    pub max_imag: f64,
}

pub fn key_identity_matrix(theta: &ThetaSeq, x: [f64; 2]) -> Result<KeyIdentity> {
    theta.check_radial()?;
    let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (k, t) in theta.iter() {
        let s = k.sigma(x);
        let sm = k.neg().sigma(x);
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += s[i] * sm[j] * (t * t);
            }
        }
    }
    let mut matrix = [[0.0; 2]; 2];
    let mut max_imag = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            matrix[i][j] = acc[i][j].re;
            max_imag = max_imag.max(acc[i][j].im.abs());
        }
    }
    Ok(KeyIdentity { matrix, max_imag })
}

/// `Σ_k θ_k² (σ_{-k}·∇) σ_k (x)`, the Itô–Stratonovich correction of the transport noise.
pub fn stratonovich_correction(theta: &ThetaSeq, x: [f64; 2]) -> [Complex64; 2] {
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (k, t) in theta.iter() {
        let v = k.neg().sigma(x);
        let g = k.sigma_grad(x);
        for i in 0..2 {
            out[i] += (v[0] * g[i][0] + v[1] * g[i][1]) * (t * t);
        }
    }
    out
}

/// `θ^N_k = |k|^{-γ} 1_{|k| <= N}`.
pub fn theta_power(gamma: f64, n: usize) -> Result<ThetaSeq> {
    if !(gamma > 0.5 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("{gamma} outside (1/2, 1]")));
    }
    if n == 0 {
        return Err(invalid("theta_cutoff", "must be >= 1"));
    }
    ThetaSeq::from_radial(n, |r| r.powf(-gamma))
}

/// `θ^N` together with its rescaling `√2 θ^N / ‖θ^N‖`, whose squared norm is 2.
pub fn theta_scaling(gamma: f64, n: usize) -> Result<(ThetaSeq, ThetaSeq)> {
    let t = theta_power(gamma, n)?;
    let s = t.scaled(2f64.sqrt() / t.norm());
    Ok((t, s))
}

/// `C_{k,l} = θ_k (a_k · l)`.
pub fn c_kl(theta_k: f64, k: Mode, l: Mode) -> f64 {
    let a = k.a();
    theta_k * (a[0] * l.k1 as f64 + a[1] * l.k2 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_shell_gives_two_identity() {
        let t = ThetaSeq::from_radial(1, |_| 1.0).unwrap();
        let m = key_identity_matrix(&t, [0.3, 0.7]).unwrap();
        assert!((m.matrix[0][0] - 2.0).abs() < 1e-14);
        assert!((m.matrix[1][1] - 2.0).abs() < 1e-14);
        assert!(m.matrix[0][1].abs() < 1e-14);
    }

    #[test]
    fn zero_theta_zero_matrix() {
        let t = ThetaSeq::from_radial(3, |_| 0.0).unwrap();
        let m = key_identity_matrix(&t, [0.1, 0.2]).unwrap();
        assert_eq!(m.matrix, [[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn non_radial_rejected() {
        let modes = modes_in_ball(1);
        let vals = vec![1.0, 2.0, 1.0, 1.0];
        assert!(ThetaSeq::from_values(1, modes, vals).is_err());
    }

    #[test]
    fn power_norms() {
        let (t, s) = theta_scaling(1.0, 1).unwrap();
        assert!((t.norm2() - 4.0).abs() < 1e-14);
        assert!((s.norm2() - 2.0).abs() < 1e-14);
        let mut last = 0.0;
        for n in 1..12 {
            let v = theta_power(0.8, n).unwrap().norm2();
            assert!(v > last);
            last = v;
        }
        assert!(theta_power(0.5, 3).is_err());
    }
}
