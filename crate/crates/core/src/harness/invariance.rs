//! Stationarity diagnostics for vortex and Galerkin ensembles.

use super::StatReport;
use crate::error::{invalid, Error, Result};
use crate::galerkin::GalerkinPath;
use crate::modes::Mode;
use crate::stats::{
    ks_one_sample, ks_two_sample, loglog_slope, mean_se, normal_cdf, uniform_cdf, MeanSe,
};
use crate::vortex::{VortexPath, VortexState};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

const MIN_REPLICAS: usize = 20;

fn ks_report(
    name: String,
    p: f64,
    threshold: f64,
    n: usize,
    hash: &str,
    seed_root: u64,
) -> StatReport {
    StatReport {
        name,
        estimate: p,
        se: 0.0,
        n,
        tolerance: threshold,
        pass: p > threshold,
        config_hash: hash.to_string(),
        seed_root,
    }
}

/// KS batteries on recorded slices of a vortex ensemble.
///
/// Per slice: every vortex coordinate against uniform, and real/imaginary parts of
/// `⟨ξ^N_t, e_k⟩` against `N(0, ½)`. Across slices: two-sample KS of each mode part
/// between the first slice and every later one. Each family (coordinates of a slice,
/// modes of a slice, modes of a slice pair) is Bonferroni-corrected at level `alpha`.
/// Reports carry the p-value as `estimate` and the corrected level as `tolerance`.
pub fn invariance_tests(
    slices: &[(f64, Vec<VortexState>)],
    modes: &[Mode],
    alpha: f64,
    config_hash: &str,
    seed_root: u64,
) -> Result<Vec<StatReport>> {
    if slices.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least 2 time slices".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", "must be in (0,1)"));
    }
    let n_vort = slices[0].1.first().map(|s| s.n()).unwrap_or(0);
    for (_, s) in slices {
        if s.len() < MIN_REPLICAS {
            return Err(Error::InsufficientSamples(format!(
                "{} replicas per slice (need {MIN_REPLICAS})",
                s.len()
            )));
        }
        if s.iter().any(|v| v.n() != n_vort) {
            return Err(invalid("slices", "vortex count differs between replicas"));
        }
    }
    let mut out = Vec::new();
    let coord_level = alpha / (2 * n_vort).max(1) as f64;
    let mode_level = alpha / (2 * modes.len()).max(1) as f64;
    let parts = |states: &[VortexState], k: Mode| -> [Vec<f64>; 2] {
        let v: Vec<_> = states.iter().map(|s| s.empirical_mode(k)).collect();
        [
            v.iter().map(|z| z.re).collect(),
            v.iter().map(|z| z.im).collect(),
        ]
    };
    for (t, states) in slices {
        for i in 0..n_vort {
            for c in 0..2 {
                let xs: Vec<f64> = states.iter().map(|s| s.pos[i][c].rem_euclid(1.0)).collect();
                let r = ks_one_sample(&xs, uniform_cdf);
                out.push(ks_report(
                    format!("uniform t={t} vortex={i} coord={c}"),
                    r.p_value,
                    coord_level,
                    xs.len(),
                    config_hash,
                    seed_root,
                ));
            }
        }
        for &k in modes {
            for (c, xs) in parts(states, k).iter().enumerate() {
                let r = ks_one_sample(xs, |x| normal_cdf(x, FRAC_1_SQRT_2));
                out.push(ks_report(
                    format!("normal t={t} mode={k} part={}", ["re", "im"][c]),
                    r.p_value,
                    mode_level,
                    xs.len(),
                    config_hash,
                    seed_root,
                ));
            }
        }
    }
    let (t0, first) = &slices[0];
    for (t, states) in &slices[1..] {
        for &k in modes {
            let a = parts(first, k);
            let b = parts(states, k);
            for c in 0..2 {
                let r = ks_two_sample(&a[c], &b[c]);
                out.push(ks_report(
                    format!("two-sample t={t0}/{t} mode={k} part={}", ["re", "im"][c]),
                    r.p_value,
                    mode_level,
                    a[c].len(),
                    config_hash,
                    seed_root,
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stationarity {
    pub modes: Vec<Mode>,
    /// Time-averaged `|⟨ξ_t,e_l⟩|²`, one value per replica, summarized.
    pub variance: Vec<MeanSe>,
    /// Two-sample KS p-values `[re, im]` between the two windows, per mode.
    pub ks_p: Vec<[f64; 2]>,
}

/// Per-mode stationary variance and a two-window comparison of mode laws.
///
/// Variance uses the recorded times `t >= burn_in`; each window `[t_i - width, t_i]`
/// is thinned to every `thin`-th record and pooled across replicas.
pub fn galerkin_stationarity(
    paths: &[GalerkinPath],
    burn_in: f64,
    windows: [f64; 2],
    width: f64,
    thin: usize,
) -> Result<Stationarity> {
    if paths.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least 2 replicas".into(),
        ));
    }
    if thin == 0 {
        return Err(invalid("thin", "must be positive"));
    }
    let modes = paths[0].modes.clone();
    let mut variance = Vec::new();
    let mut ks_p = Vec::new();
    for o in 0..modes.len() {
        let per: Vec<f64> = paths
            .iter()
            .map(|p| {
                let v: Vec<f64> = p
                    .times
                    .iter()
                    .zip(&p.series[o])
                    .filter(|(t, _)| **t >= burn_in)
                    .map(|(_, z)| z.norm_sqr())
                    .collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            })
            .collect();
        variance.push(mean_se(&per));
        let pick = |end: f64| -> [Vec<f64>; 2] {
            let mut out = [Vec::new(), Vec::new()];
            for p in paths {
                let idx: Vec<usize> = (0..p.times.len())
                    .filter(|&i| p.times[i] <= end + 1e-12 && p.times[i] > end - width)
                    .collect();
                for &i in idx.iter().rev().step_by(thin) {
                    out[0].push(p.series[o][i].re);
                    out[1].push(p.series[o][i].im);
                }
            }
            out
        };
        let (a, b) = (pick(windows[0]), pick(windows[1]));
        if a[0].len() < MIN_REPLICAS || b[0].len() < MIN_REPLICAS {
            return Err(Error::InsufficientSamples(
                "comparison windows hold too few records".into(),
            ));
        }
        ks_p.push([
            ks_two_sample(&a[0], &b[0]).p_value,
            ks_two_sample(&a[1], &b[1]).p_value,
        ]);
    }
    Ok(Stationarity {
        modes,
        variance,
        ks_p,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncrementScaling {
    pub gaps: Vec<f64>,
    /// `E|⟨ξ_{t+g} - ξ_t, φ⟩|²` per gap.
    pub msd: Vec<MeanSe>,
    pub slope: f64,
}

/// Mean squared increments of observable `obs` at the given lags (in records).
/// Each replica contributes its average over start times; errors are across replicas.
pub fn increment_scaling(
    paths: &[VortexPath],
    obs: usize,
    lags: &[usize],
) -> Result<IncrementScaling> {
    if paths.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least 2 replicas".into(),
        ));
    }
    if lags.len() < 2 || lags.contains(&0) {
        return Err(invalid("lags", "need at least two positive lags"));
    }
    let rec_dt = paths[0].times[1] - paths[0].times[0];
    let mut msd = Vec::new();
    for &g in lags {
        let per: Vec<f64> = paths
            .iter()
            .map(|p| {
                let s = &p.series[obs];
                if s.len() <= g {
                    return Err(Error::InsufficientSamples(format!(
                        "series shorter than lag {g}"
                    )));
                }
                let v: f64 = s.windows(g + 1).map(|w| (w[g] - w[0]).norm_sqr()).sum();
                Ok(v / (s.len() - g) as f64)
            })
            .collect::<Result<_>>()?;
        msd.push(mean_se(&per));
    }
    let gaps: Vec<f64> = lags.iter().map(|g| *g as f64 * rec_dt).collect();
    let slope = loglog_slope(&gaps, &msd.iter().map(|m| m.mean).collect::<Vec<_>>());
    Ok(IncrementScaling { gaps, msd, slope })
}
