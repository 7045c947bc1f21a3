//! Quadratic variation of mode processes and the `R_{l,m}` remainder.

use crate::error::{invalid, Error, Result};
use crate::field::{sample_white_noise, SpectralField};
use crate::modes::{dot, Mode};
use crate::rng::{stream, StreamRole};
use crate::stats::mean_se;
use crate::theta::{c_kl, ThetaSeq};
use crate::vortex::VortexState;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Realized bilinear covariation rate `Σ Δa Δb / T` with batch-means error bars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QvReport {
    pub rate: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    pub windows: usize,
    pub increments: usize,
    pub total_time: f64,
}

/// Covariation rate from increment series; `window` increments per batch.
pub fn qv_from_increments(
    da: &[Complex64],
    db: &[Complex64],
    dt: f64,
    window: usize,
) -> Result<QvReport> {
    if da.len() != db.len() {
        return Err(invalid("series", "increment series differ in length"));
    }
    if !(dt > 0.0) || window == 0 {
        return Err(invalid("window", "dt and window must be positive"));
    }
    let windows = da.len() / window;
    if windows < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} increments give fewer than 2 windows of {window}",
            da.len()
        )));
    }
    let used = windows * window;
    let mut re = Vec::with_capacity(windows);
    let mut im = Vec::with_capacity(windows);
    for w in 0..windows {
        let s: Complex64 = da[w * window..(w + 1) * window]
            .iter()
            .zip(&db[w * window..(w + 1) * window])
            .map(|(a, b)| a * b)
            .sum();
        let r = s / (window as f64 * dt);
        re.push(r.re);
        im.push(r.im);
    }
    let (mr, mi) = (mean_se(&re), mean_se(&im));
    Ok(QvReport {
        rate: Complex64::new(mr.mean, mi.mean),
        se_re: mr.se,
        se_im: mi.se,
        windows,
        increments: used,
        total_time: used as f64 * dt,
    })
}

/// Covariation rate of two uniformly sampled level series.
pub fn qv_estimator(a: &[Complex64], b: &[Complex64], dt: f64, window: usize) -> Result<QvReport> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need two equal series of length >= 2".into(),
        ));
    }
    let da: Vec<Complex64> = a.windows(2).map(|w| w[1] - w[0]).collect();
    let db: Vec<Complex64> = b.windows(2).map(|w| w[1] - w[0]).collect();
    qv_from_increments(&da, &db, dt, window)
}

/// `(8π²|l|², (1 - e^{-2λ dt})/dt)`: the continuum rate of `[⟨ξ,e_l⟩,⟨ξ,e_{-l}⟩]` and
/// the exact per-step value of the exponential integrator's noise.
pub fn galerkin_qv_target(l: Mode, dt: f64) -> (f64, f64) {
    let lam = 4.0 * PI * PI * l.norm2() as f64;
    (2.0 * lam, -(-2.0 * lam * dt).exp_m1() / dt)
}

/// `|Σ_k C²_{k,l} - ½|l|²‖θ‖²|`.
pub fn sum_identity_residual(theta: &ThetaSeq, l: Mode) -> f64 {
    let lhs: f64 = theta.iter().map(|(k, t)| c_kl(t, k, l).powi(2)).sum();
    (lhs - 0.5 * l.norm2() as f64 * theta.norm2()).abs()
}

fn band_needed(theta: &ThetaSeq, l: Mode, m: Mode) -> f64 {
    theta.cutoff as f64 + l.norm().max(m.norm())
}

/// `R_{l,m}(ξ) = -8π² Σ_k C_{k,l} C_{k,m} [⟨ξ,e_{k+l}⟩⟨ξ,e_{-k+m}⟩ - δ_{l,-m}]`; the
/// zero mode is taken as `0`.
pub fn r_lm(xi: &SpectralField, l: Mode, m: Mode, theta: &ThetaSeq) -> Result<Complex64> {
    if (xi.m as f64) < band_needed(theta, l, m) {
        return Err(Error::Precondition(format!(
            "field band {} cannot resolve |k|+|l| for N = {}",
            xi.m, theta.cutoff
        )));
    }
    Ok(r_lm_unchecked(xi, l, m, theta))
}

fn x_of(xi: &SpectralField, a: Option<Mode>) -> Complex64 {
    a.map(|a| xi.pair_e(a)).unwrap_or_default()
}

fn r_lm_unchecked(xi: &SpectralField, l: Mode, m: Mode, theta: &ThetaSeq) -> Complex64 {
    let delta = if l.neg() == m { 1.0 } else { 0.0 };
    let mut s = Complex64::default();
    for (k, t) in theta.iter() {
        let c = c_kl(t, k, l) * c_kl(t, k, m);
        if c == 0.0 {
            continue;
        }
        let prod = x_of(xi, k.add(l)) * x_of(xi, k.neg().add(m));
        s += (prod - delta) * c;
    }
    s * (-8.0 * PI * PI)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RlmReport {
    pub l: Mode,
    pub m: Mode,
    pub mean: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    pub var_re: f64,
    pub var_im: f64,
    pub n: usize,
}

impl RlmReport {
    /// Largest standardized deviation of the real and imaginary means from 0.
    pub fn z(&self) -> f64 {
        let f = |m: f64, se: f64| {
            if se > 0.0 {
                m.abs() / se
            } else if m == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        f(self.mean.re, self.se_re).max(f(self.mean.im, self.se_im))
    }
}

fn summarize(l: Mode, m: Mode, vals: &[Complex64]) -> RlmReport {
    let re: Vec<f64> = vals.iter().map(|v| v.re).collect();
    let im: Vec<f64> = vals.iter().map(|v| v.im).collect();
    let (a, b) = (mean_se(&re), mean_se(&im));
    let n = vals.len() as f64;
    RlmReport {
        l,
        m,
        mean: Complex64::new(a.mean, b.mean),
        se_re: a.se,
        se_im: b.se,
        var_re: a.se * a.se * n,
        var_im: b.se * b.se * n,
        n: vals.len(),
    }
}

/// Monte Carlo summary of `R_{l,m}` over given field samples.
pub fn r_lm_from_samples(
    samples: &[SpectralField],
    l: Mode,
    m: Mode,
    theta: &ThetaSeq,
) -> Result<RlmReport> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples("need at least 2 samples".into()));
    }
    let vals = samples
        .iter()
        .map(|xi| r_lm(xi, l, m, theta))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(l, m, &vals))
}

/// `R_{l,m}` under white noise for every pair, from `draws` fresh samples of band
/// `N + max(|l|,|m|)` (rounded up); samples are streamed, not stored.
pub fn r_lm_estimator(
    draws: usize,
    seed_root: u64,
    pairs: &[(Mode, Mode)],
    theta: &ThetaSeq,
) -> Result<Vec<RlmReport>> {
    if draws < 2 {
        return Err(Error::InsufficientSamples("need at least 2 draws".into()));
    }
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let band = pairs
        .iter()
        .map(|(l, m)| band_needed(theta, *l, *m))
        .fold(0.0, f64::max)
        .ceil() as usize;
    let chunk = 1000usize;
    let chunks = draws.div_ceil(chunk);
    let parts: Vec<Vec<Vec<Complex64>>> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed_root, c, StreamRole::Field);
            let n = chunk.min(draws - c as usize * chunk);
            let mut out = vec![Vec::with_capacity(n); pairs.len()];
            for _ in 0..n {
                let xi = sample_white_noise(&mut rng, band)?;
                for (p, (l, m)) in pairs.iter().enumerate() {
                    out[p].push(r_lm_unchecked(&xi, *l, *m, theta));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, (l, m))| {
            let vals: Vec<Complex64> = parts.iter().flat_map(|c| c[p].iter().copied()).collect();
            summarize(*l, *m, &vals)
        })
        .collect())
}

/// Exact interaction part of the rate of `[⟨ξ^N,e_l⟩, ⟨ξ^N,e_{-l}⟩]` under the scaled
/// noise `√2 θ/‖θ‖`: the `i ≠ j` terms of the bracket, which equal
/// `(16π²/(N‖θ‖²)) Σ_k θ_k² (a_k·l)² (|S_{k+l}|² - Σ ξ_i²)` with `S_a = Σ ξ_i e_a(x_i)`.
pub fn offdiag_qv_rate(state: &VortexState, l: Mode, theta: &ThetaSeq) -> f64 {
    let n = state.n() as f64;
    let sum_sq: f64 = state.intensities.iter().map(|w| w * w).sum();
    let s_of = |a: Option<Mode>| -> f64 {
        match a {
            None => state.intensities.iter().sum::<f64>().powi(2),
            Some(a) => state
                .pos
                .iter()
                .zip(&state.intensities)
                .map(|(x, w)| a.e(*x) * *w)
                .sum::<Complex64>()
                .norm_sqr(),
        }
    };
    let lv = l.as_vec();
    let mut acc = 0.0;
    for (k, t) in theta.iter() {
        let al = dot(k.a(), lv);
        if al == 0.0 {
            continue;
        }
        acc += t * t * al * al * (s_of(k.add(l)) - sum_sq);
    }
    16.0 * PI * PI * acc / (n * theta.norm2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::theta_power;
    use crate::vortex::sample_initial_vortices;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn brownian_calibration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dt = 1e-3;
        let v: f64 = 2.5;
        let da: Vec<Complex64> = (0..40_000)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(g * (v * dt).sqrt(), 0.0)
            })
            .collect();
        let r = qv_from_increments(&da, &da, dt, 2000).unwrap();
        assert!((r.rate.re - v).abs() < 4.0 * r.se_re, "{r:?}");
        let smooth: Vec<Complex64> = (0..=1000)
            .map(|i| Complex64::new((i as f64 * 1e-3).sin(), 0.0))
            .collect();
        let q = qv_estimator(&smooth, &smooth, 1e-3, 100).unwrap();
        assert!(q.rate.re < 1e-2);
        assert!(qv_estimator(&smooth[..50], &smooth[..50], 1e-3, 100).is_err());
    }

    #[test]
    fn sum_identity_exact() {
        for n in [1, 5, 12] {
            let th = theta_power(0.75, n).unwrap();
            for l in [Mode::of(1, 0), Mode::of(2, -3), Mode::of(0, 5)] {
                assert!(sum_identity_residual(&th, l) < 1e-12 * th.norm2().max(1.0) * 25.0);
            }
        }
    }

    #[test]
    fn offdiag_rate_matches_double_sum() {
        let th = theta_power(1.0, 3).unwrap();
        let scale = 2.0 / th.norm2();
        let (st, _) = sample_initial_vortices(4, 0, 7).unwrap();
        let l = Mode::of(1, 2);
        let grad = |x: [f64; 2], l: Mode| -> [Complex64; 2] {
            let e = l.e(x) * Complex64::new(0.0, 2.0 * PI);
            [e * l.k1 as f64, e * l.k2 as f64]
        };
        let mut direct = Complex64::default();
        for i in 0..st.n() {
            for j in 0..st.n() {
                if i == j {
                    continue;
                }
                let (xi, xj) = (st.pos[i], st.pos[j]);
                let (gi, gj) = (grad(xi, l), grad(xj, l.neg()));
                for (k, t) in th.positive_modes() {
                    let a = k.a();
                    let (ci, si) = (
                        (2.0 * PI * dot(k.as_vec(), xi)).cos(),
                        (2.0 * PI * dot(k.as_vec(), xi)).sin(),
                    );
                    let (cj, sj) = (
                        (2.0 * PI * dot(k.as_vec(), xj)).cos(),
                        (2.0 * PI * dot(k.as_vec(), xj)).sin(),
                    );
                    let pi = gi[0] * a[0] + gi[1] * a[1];
                    let pj = gj[0] * a[0] + gj[1] * a[1];
                    direct += pi
                        * pj
                        * (4.0 * t * t * scale * (ci * cj + si * sj))
                        * st.intensities[i]
                        * st.intensities[j];
                }
            }
        }
        direct /= st.n() as f64;
        let f = offdiag_qv_rate(&st, l, &th);
        assert!(direct.im.abs() < 1e-9);
        assert!(
            (direct.re - f).abs() < 1e-9 * f.abs().max(1.0),
            "{} vs {}",
            direct.re,
            f
        );
    }

    #[test]
    fn r_lm_requires_band() {
        let th = theta_power(1.0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xi = sample_white_noise(&mut rng, 4).unwrap();
        assert!(r_lm(&xi, Mode::of(1, 0), Mode::of(0, 1), &th).is_err());
        let xi = sample_white_noise(&mut rng, 5).unwrap();
        assert!(r_lm(&xi, Mode::of(1, 0), Mode::of(-1, 0), &th).is_ok());
    }
}
