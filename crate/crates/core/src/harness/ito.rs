//! Variance of stationary time integrals of centred cylinder functions.

use crate::chaos::CylinderFunction;
use crate::error::{invalid, Error, Result};
use crate::galerkin::GalerkinPath;
use crate::modes::Mode;
use crate::stats::{loglog_slope, mean_se, MeanSe};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// `Var ∫₀ᵀ Re X_t dt` for a stationary complex OU mode with `E|X|² = 1` and decay `λ`.
pub fn ou_time_average_variance(lambda: f64, t: f64) -> f64 {
    (t + (-lambda * t).exp_m1() / lambda) / lambda
}

/// `F - E_μ F`.
pub fn zero_mean_part(f: &CylinderFunction) -> CylinderFunction {
    let mean = f.to_chaos().get(&[]);
    let mut g = f.clone();
    if mean != Complex64::default() {
        g.add_term(&[], -mean);
    }
    g
}

/// Refuses ensembles whose first and last recorded slices have `E|X_l|²` more than
/// `z` standard errors away from 1 for some recorded mode.
pub fn stationarity_precheck(paths: &[GalerkinPath], z: f64) -> Result<()> {
    if paths.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least 2 replicas".into(),
        ));
    }
    for o in 0..paths[0].modes.len() {
        for slice in [0usize, usize::MAX] {
            let v: Vec<f64> = paths
                .iter()
                .map(|p| {
                    let s = &p.series[o];
                    s[slice.min(s.len() - 1)].norm_sqr()
                })
                .collect();
            let m = mean_se(&v);
            if (m.mean - 1.0).abs() > z * m.se.max(1e-12) {
                return Err(Error::Precondition(format!(
                    "mode {} slice variance {:.4} ± {:.4} is not stationary",
                    paths[0].modes[o], m.mean, m.se
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItoScan {
    pub t_grid: Vec<f64>,
    /// `E|∫₀ᵀ F(ξ_s) ds|²`.
    pub var: Vec<MeanSe>,
    /// `E sup_{t<=T} |∫₀ᵗ F(ξ_s) ds|²`.
    pub sup2: Vec<MeanSe>,
    pub slope_var: f64,
    pub slope_sup: f64,
}

/// Time integrals of the centred `F` along each recorded path (trapezoid rule).
pub fn ito_trick_scan(
    paths: &[GalerkinPath],
    f: &CylinderFunction,
    t_grid: &[f64],
) -> Result<ItoScan> {
    if t_grid.len() < 2
        || t_grid.iter().any(|t| !(*t > 0.0))
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(invalid(
            "t_grid",
            "need an increasing grid of positive times",
        ));
    }
    stationarity_precheck(paths, 6.0)?;
    let g = zero_mean_part(f);
    let index: HashMap<Mode, usize> = paths[0]
        .modes
        .iter()
        .enumerate()
        .map(|(i, m)| (*m, i))
        .collect();
    for l in g.index_set() {
        if !index.contains_key(&l) && !index.contains_key(&l.neg()) {
            return Err(Error::Precondition(format!("mode {l} is not recorded")));
        }
    }
    let t_max = *t_grid.last().unwrap();
    let mut ints: Vec<Vec<f64>> = Vec::with_capacity(paths.len());
    let mut sups: Vec<Vec<f64>> = Vec::with_capacity(paths.len());
    for p in paths {
        if p.times.last().copied().unwrap_or(0.0) + 1e-9 < t_max {
            return Err(invalid("t_grid", "exceeds the recorded horizon"));
        }
        let vals: Vec<f64> = (0..p.times.len())
            .map(|r| {
                g.eval_coords(&|l| match index.get(&l) {
                    Some(&o) => p.series[o][r],
                    None => p.series[index[&l.neg()]][r].conj(),
                })
                .re
            })
            .collect();
        let mut acc = 0.0;
        let mut sup = 0.0f64;
        let mut gi = 0;
        let (mut at, mut su) = (vec![0.0; t_grid.len()], vec![0.0; t_grid.len()]);
        for r in 1..p.times.len() {
            acc += 0.5 * (vals[r] + vals[r - 1]) * (p.times[r] - p.times[r - 1]);
            sup = sup.max(acc * acc);
            while gi < t_grid.len() && p.times[r] + 1e-9 >= t_grid[gi] {
                at[gi] = acc * acc;
                su[gi] = sup;
                gi += 1;
            }
        }
        ints.push(at);
        sups.push(su);
    }
    let col = |v: &[Vec<f64>], j: usize| -> Vec<f64> { v.iter().map(|r| r[j]).collect() };
    let var: Vec<MeanSe> = (0..t_grid.len()).map(|j| mean_se(&col(&ints, j))).collect();
    let sup2: Vec<MeanSe> = (0..t_grid.len()).map(|j| mean_se(&col(&sups, j))).collect();
    let slope = |v: &[MeanSe]| {
        if v.iter().all(|m| m.mean > 0.0) {
            loglog_slope(t_grid, &v.iter().map(|m| m.mean).collect::<Vec<_>>())
        } else {
            0.0
        }
    };
    Ok(ItoScan {
        t_grid: t_grid.to_vec(),
        slope_var: slope(&var),
        slope_sup: slope(&sup2),
        var,
        sup2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::IntegratorConfig;
    use crate::harness::run_galerkin_ensemble;

    #[test]
    fn ou_variance_limits() {
        let lam = 3.0;
        assert!((ou_time_average_variance(lam, 1e-4) - 0.5e-8).abs() < 1e-11);
        let t = 1e3;
        assert!((ou_time_average_variance(lam, t) / t - 1.0 / lam).abs() < 1e-3);
    }

    #[test]
    fn zero_mean_and_zero_function() {
        let l = Mode::of(1, 0);
        let mut f = CylinderFunction::new();
        f.add_term(&[l, l.neg()], Complex64::new(1.0, 0.0));
        let g = zero_mean_part(&f);
        assert_eq!(g.coef(&[]), Complex64::new(-1.0, 0.0));
        let cfg = IntegratorConfig {
            galerkin_m: 2,
            dt: 1e-3,
            t_final: 0.2,
            record_every: 1,
            record_modes: vec![l],
            linear: true,
            ..Default::default()
        };
        let paths = run_galerkin_ensemble(&cfg, 200, 5).unwrap();
        let s = ito_trick_scan(&paths, &CylinderFunction::new(), &[0.1, 0.2]).unwrap();
        assert!(s.var.iter().all(|m| m.mean == 0.0));
        assert!(ito_trick_scan(
            &paths,
            &CylinderFunction::coordinate(Mode::of(2, 0)),
            &[0.1, 0.2]
        )
        .is_err());
    }
}
