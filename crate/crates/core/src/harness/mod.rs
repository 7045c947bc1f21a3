//! Ensemble orchestration and the statistical diagnostics built on top of it.

mod invariance;
mod ito;
mod moments;
mod qv;
mod scaling;

pub use invariance::{
    galerkin_stationarity, increment_scaling, invariance_tests, IncrementScaling, Stationarity,
};
pub use ito::{
    ito_trick_scan, ou_time_average_variance, stationarity_precheck, zero_mean_part, ItoScan,
};
pub use moments::{moment_suite, nonlinear_second_moment, MomentSuite, NonlinearMoment};
pub use qv::{
    galerkin_qv_target, offdiag_qv_rate, qv_estimator, qv_from_increments, r_lm, r_lm_estimator,
    r_lm_from_samples, sum_identity_residual, QvReport, RlmReport,
};
pub use scaling::{scaling_limit_study, trend_verdict, ScalingConfig, ScalingReport, ScalingRow};

use crate::error::{invalid, Result};
use crate::galerkin::{sample_mu_initial, simulate_spde_path, GalerkinPath, IntegratorConfig};
use crate::kernel::Kernel;
use crate::rng::{stream, StreamRole};
use crate::testfn::TestFunction;
use crate::theta::ThetaSeq;
use crate::vortex::{sample_initial_vortices, simulate_vortex_path_with, VortexConfig, VortexPath};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Vortex,
    Galerkin,
    Scaling,
}

/// One estimator outcome with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub n: usize,
    pub tolerance: f64,
    pub pass: bool,
    pub config_hash: String,
    pub seed_root: u64,
}

impl StatReport {
    pub fn line(&self) -> String {
        format!(
            "{} estimate={:.6e} se={:.3e} n={} tol={:.3e} {}",
            self.name,
            self.estimate,
            self.se,
            self.n,
            self.tolerance,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// SHA-256 of the canonical JSON encoding, as lowercase hex.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).unwrap_or_default();
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub replicas: usize,
    pub seed_root: u64,
    pub kind: ExperimentKind,
    pub config: serde_json::Value,
}

impl EnsembleSpec {
    pub fn new<T: Serialize>(
        replicas: usize,
        seed_root: u64,
        kind: ExperimentKind,
        config: &T,
    ) -> Result<EnsembleSpec> {
        if replicas == 0 {
            return Err(invalid("replicas", "must be positive"));
        }
        let config = serde_json::to_value(config).map_err(|e| invalid("config", e.to_string()))?;
        Ok(EnsembleSpec {
            replicas,
            seed_root,
            kind,
            config,
        })
    }

    pub fn config_hash(&self) -> String {
        config_hash(self)
    }

    /// Run `f(replica)` for every replica in parallel; output is in replica order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        (0..self.replicas as u64).into_par_iter().map(f).collect()
    }

    pub fn report(
        &self,
        name: &str,
        estimate: f64,
        se: f64,
        n: usize,
        tolerance: f64,
        pass: bool,
    ) -> StatReport {
        StatReport {
            name: name.to_string(),
            estimate,
            se,
            n,
            tolerance,
            pass,
            config_hash: self.config_hash(),
            seed_root: self.seed_root,
        }
    }
}

/// Stationary Galerkin ensemble started from μ; replica `r` uses streams `(seed_root, r)`.
pub fn run_galerkin_ensemble(
    cfg: &IntegratorConfig,
    replicas: usize,
    seed_root: u64,
) -> Result<Vec<GalerkinPath>> {
    cfg.validate()?;
    let spec = EnsembleSpec::new(replicas, seed_root, ExperimentKind::Galerkin, cfg)?;
    spec.run(|r| {
        let init = sample_mu_initial(
            &mut stream(seed_root, r, StreamRole::Initial),
            cfg.galerkin_m,
        )?;
        simulate_spde_path(cfg, init, &mut stream(seed_root, r, StreamRole::Noise))
    })
}

/// Vortex ensemble with uniform positions and Gaussian intensities, sharing one kernel.
pub fn run_vortex_ensemble(
    cfg: &VortexConfig,
    theta: &ThetaSeq,
    observables: &[TestFunction],
    replicas: usize,
    seed_root: u64,
    track_weak: bool,
) -> Result<Vec<VortexPath>> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    run_vortex_ensemble_with(
        cfg,
        &kernel,
        theta,
        observables,
        replicas,
        seed_root,
        track_weak,
    )
}

pub fn run_vortex_ensemble_with(
    cfg: &VortexConfig,
    kernel: &Kernel,
    theta: &ThetaSeq,
    observables: &[TestFunction],
    replicas: usize,
    seed_root: u64,
    track_weak: bool,
) -> Result<Vec<VortexPath>> {
    let spec = EnsembleSpec::new(replicas, seed_root, ExperimentKind::Vortex, cfg)?;
    spec.run(|r| {
        let (init, _) = sample_initial_vortices(seed_root, r, cfg.n_vortices)?;
        simulate_vortex_path_with(
            cfg,
            kernel,
            theta,
            init,
            observables,
            stream(seed_root, r, StreamRole::Noise),
            stream(seed_root, r, StreamRole::Bridge),
            track_weak,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = EnsembleSpec::new(4, 1, ExperimentKind::Galerkin, &IntegratorConfig::default())
            .unwrap();
        let b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        let mut c = a.clone();
        c.seed_root = 2;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn ensemble_is_deterministic() {
        let cfg = IntegratorConfig {
            galerkin_m: 3,
            t_final: 0.05,
            dt: 1e-3,
            ..Default::default()
        };
        let a = run_galerkin_ensemble(&cfg, 3, 9).unwrap();
        let b = run_galerkin_ensemble(&cfg, 3, 9).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.series, q.series);
        }
        assert_ne!(a[0].series, a[1].series);
    }
}
