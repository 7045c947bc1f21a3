//! Law comparison between scaled-noise vortex ensembles and the stationary SPDE.

use super::qv::offdiag_qv_rate;
use super::{config_hash, run_galerkin_ensemble, run_vortex_ensemble_with};
use crate::error::{invalid, Result};
use crate::galerkin::{DriftBackend, IntegratorConfig};
use crate::kernel::{Kernel, KernelBackend};
use crate::modes::Mode;
use crate::rng::{stream, StreamRole};
use crate::stats::{energy_distance, loglog_slope, EnergyDistance};
use crate::testfn::TestFunction;
use crate::theta::theta_scaling;
use crate::vortex::{sample_initial_vortices, VortexConfig};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub gamma: f64,
    #[serde(rename = "scaling_N_list")]
    pub scaling_n_list: Vec<usize>,
    pub epsilon: f64,
    pub n_vortices: usize,
    pub tau: f64,
    pub vortex_dt: f64,
    pub guard_distance: f64,
    pub max_halvings: u32,
    pub kernel_cutoff: usize,
    pub kernel_grid: usize,
    pub galerkin_m: usize,
    pub galerkin_dt: f64,
    pub replicas: usize,
    pub modes: Vec<Mode>,
    pub permutations: usize,
    pub correction_samples: usize,
    pub correction_vortices: usize,
    pub seed_root: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            gamma: 1.0,
            scaling_n_list: vec![4, 8, 16],
            epsilon: 0.5,
            n_vortices: 64,
            tau: 0.001,
            vortex_dt: 1e-4,
            guard_distance: 1e-6,
            max_halvings: 12,
            kernel_cutoff: 32,
            kernel_grid: 128,
            galerkin_m: 8,
            galerkin_dt: 1e-4,
            replicas: 1000,
            modes: vec![
                Mode::of(1, 0),
                Mode::of(0, 1),
                Mode::of(1, 1),
                Mode::of(1, -1),
            ],
            permutations: 100,
            correction_samples: 2000,
            correction_vortices: 64,
            seed_root: 2024,
        }
    }
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scaling_n_list.len() < 2 || self.scaling_n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "scaling_N_list",
                "must be increasing with at least 2 entries",
            ));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "empty mode set"));
        }
        if self.modes.iter().any(|l| !l.within(self.galerkin_m)) {
            return Err(invalid("modes", "mode set differs from the Galerkin band"));
        }
        if !(self.tau > 0.0) || !(self.vortex_dt > 0.0) || !(self.galerkin_dt > 0.0) {
            return Err(invalid("tau", "times must be positive"));
        }
        for dt in [self.vortex_dt, self.galerkin_dt] {
            let r = self.tau / dt;
            if (r - r.round()).abs() > 1e-6 || r.round() < 1.0 {
                return Err(invalid("tau", "must be a multiple of both time steps"));
            }
        }
        if self.replicas < 20 {
            return Err(invalid("replicas", "need at least 20"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub theta_norm: f64,
    pub joint: EnergyDistance,
    pub marginal: EnergyDistance,
    /// RMS over stationary configurations of the interaction part of the QV rate of mode 0.
    pub correction_rms: f64,
    pub guard_events: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config_hash: String,
    pub seed_root: u64,
    pub rows: Vec<ScalingRow>,
    pub joint_trend: bool,
    pub correction_slope: f64,
}

/// At most one non-decreasing step, and the last value below the first.
pub fn trend_verdict(d: &[f64]) -> bool {
    if d.len() < 2 {
        return false;
    }
    let ups = d.windows(2).filter(|w| w[1] >= w[0]).count();
    ups <= 1 && d[d.len() - 1] < d[0]
}

/// `[|X₀|, |Y|]` per mode with the OU innovation `Y = (X_τ - e^{-λτ} X₀)/√(1 - e^{-2λτ})`.
/// Under the limit law `X₀` and `Y` are independent standard complex Gaussians; the
/// finite-N transport noise shows up in the joint law of the amplitudes.
fn joint_feature(x0: &[Complex64], x1: &[Complex64], modes: &[Mode], tau: f64) -> Vec<f64> {
    let mut f = Vec::with_capacity(2 * modes.len());
    for ((a, b), l) in x0.iter().zip(x1).zip(modes) {
        let lam = 4.0 * PI * PI * l.norm2() as f64;
        let d = (-lam * tau).exp();
        let y = (b - a * d) / (1.0 - d * d).sqrt();
        f.extend([SQRT_2 * a.norm(), SQRT_2 * y.norm()]);
    }
    f
}

fn marginal_feature(x1: &[Complex64]) -> Vec<f64> {
    x1.iter()
        .flat_map(|z| [SQRT_2 * z.re, SQRT_2 * z.im])
        .collect()
}

pub fn scaling_limit_study(cfg: &ScalingConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let modes = &cfg.modes;
    let g_cfg = IntegratorConfig {
        galerkin_m: cfg.galerkin_m,
        epsilon: cfg.epsilon,
        dt: cfg.galerkin_dt,
        t_final: cfg.tau,
        record_modes: modes.clone(),
        record_every: (cfg.tau / cfg.galerkin_dt).round() as usize,
        drift_backend: DriftBackend::Fast,
        linear: false,
        keep_martingale: false,
    };
    let g_paths = run_galerkin_ensemble(&g_cfg, cfg.replicas, cfg.seed_root ^ 0x5eed)?;
    let g_joint: Vec<Vec<f64>> = g_paths
        .iter()
        .map(|p| {
            let x0: Vec<Complex64> = p.series.iter().map(|s| s[0]).collect();
            let x1: Vec<Complex64> = p.series.iter().map(|s| *s.last().unwrap()).collect();
            joint_feature(&x0, &x1, modes, cfg.tau)
        })
        .collect();
    let g_marg: Vec<Vec<f64>> = g_paths
        .iter()
        .map(|p| {
            marginal_feature(
                &p.series
                    .iter()
                    .map(|s| *s.last().unwrap())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let kernel = Kernel::for_vortices(
        KernelBackend::Table,
        cfg.epsilon,
        cfg.kernel_cutoff,
        cfg.kernel_grid,
        cfg.n_vortices,
    )?;
    let observables: Vec<TestFunction> = modes.iter().map(|l| TestFunction::fourier(*l)).collect();
    let mut rows = Vec::new();
    for (idx, &n) in cfg.scaling_n_list.iter().enumerate() {
        let (theta, scaled) = theta_scaling(cfg.gamma, n)?;
        let steps = (cfg.tau / cfg.vortex_dt).round() as usize;
        let v_cfg = VortexConfig {
            n_vortices: cfg.n_vortices,
            epsilon: cfg.epsilon,
            kernel_cutoff: cfg.kernel_cutoff,
            kernel_grid: cfg.kernel_grid,
            kernel_backend: KernelBackend::Table,
            dt: cfg.vortex_dt,
            t_final: cfg.tau,
            record_every: steps,
            guard_distance: cfg.guard_distance,
            max_halvings: cfg.max_halvings,
            ..Default::default()
        };
        let seed = cfg.seed_root.wrapping_add(1 + idx as u64);
        let v_paths = run_vortex_ensemble_with(
            &v_cfg,
            &kernel,
            &scaled,
            &observables,
            cfg.replicas,
            seed,
            false,
        )?;
        let v_joint: Vec<Vec<f64>> = v_paths
            .iter()
            .map(|p| {
                let x0: Vec<Complex64> = p.series.iter().map(|s| s[0]).collect();
                let x1: Vec<Complex64> = p.series.iter().map(|s| *s.last().unwrap()).collect();
                joint_feature(&x0, &x1, modes, cfg.tau)
            })
            .collect();
        let v_marg: Vec<Vec<f64>> = v_paths
            .iter()
            .map(|p| {
                marginal_feature(
                    &p.series
                        .iter()
                        .map(|s| *s.last().unwrap())
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let mut prng = stream(seed, 0, StreamRole::Permutation);
        let joint = energy_distance(&v_joint, &g_joint, cfg.permutations, &mut prng);
        let marginal = energy_distance(&v_marg, &g_marg, cfg.permutations, &mut prng);
        let l0 = modes[0];
        let corr: Vec<f64> = (0..cfg.correction_samples as u64)
            .into_par_iter()
            .map(|r| {
                let (st, _) = sample_initial_vortices(seed ^ 0xc0, r, cfg.correction_vortices)?;
                Ok(offdiag_qv_rate(&st, l0, &theta).powi(2))
            })
            .collect::<Result<_>>()?;
        let correction_rms = (corr.iter().sum::<f64>() / corr.len().max(1) as f64).sqrt();
        rows.push(ScalingRow {
            n,
            theta_norm: theta.norm(),
            joint,
            marginal,
            correction_rms,
            guard_events: v_paths.iter().map(|p| p.guard_events.len()).sum(),
        });
    }
    let joint_trend = trend_verdict(&rows.iter().map(|r| r.joint.distance).collect::<Vec<_>>());
    let correction_slope = loglog_slope(
        &rows.iter().map(|r| r.theta_norm).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.correction_rms).collect::<Vec<_>>(),
    );
    Ok(ScalingReport {
        config_hash: config_hash(cfg),
        seed_root: cfg.seed_root,
        rows,
        joint_trend,
        correction_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_rule() {
        assert!(trend_verdict(&[3.0, 2.0, 1.0]));
        assert!(trend_verdict(&[3.0, 3.5, 1.0]));
        assert!(!trend_verdict(&[1.0, 2.0, 3.0]));
        assert!(!trend_verdict(&[3.0, 4.0, 2.0, 5.0]));
        assert!(!trend_verdict(&[1.0]));
    }

    #[test]
    fn refuses_bad_lists() {
        let c = ScalingConfig {
            scaling_n_list: vec![8, 4],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ScalingConfig {
            modes: vec![Mode::of(9, 0)],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn joint_feature_innovation() {
        let l = [Mode::of(1, 0)];
        let x0 = [Complex64::new(0.3, -0.2)];
        let x1 = [x0[0] * (-4.0 * PI * PI * 0.01f64).exp()];
        let f = joint_feature(&x0, &x1, &l, 0.01);
        assert_eq!(f.len(), 2);
        assert!((f[0] - SQRT_2 * x0[0].norm()).abs() < 1e-15);
        assert!(f[1].abs() < 1e-15);
    }
}
