//! Run configuration: a TOML file, dotted `--set` overrides, then typed blocks.

use crate::error::CliError;
use msqg::harness::ScalingConfig;
use msqg::theta::{theta_power, theta_scaling};
use msqg::{IntegratorConfig, KernelBackend, Mode, ThetaSeq, VortexConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Output directory; `--out` and `MSQG_OUTPUT_DIR` take precedence in that order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_dir: Option<String>,
    pub seed_root: u64,
    pub replicas: usize,
    pub vortex: VortexBlock,
    pub galerkin: IntegratorConfig,
    pub scaling: ScalingConfig,
    pub chaos: ChaosBlock,
    pub kernel: KernelBlock,
    pub identity: IdentityBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            report_dir: None,
            seed_root: 1,
            replicas: 4,
            vortex: VortexBlock::default(),
            galerkin: IntegratorConfig {
                t_final: 1.0,
                ..Default::default()
            },
            scaling: ScalingConfig::default(),
            chaos: ChaosBlock::default(),
            kernel: KernelBlock::default(),
            identity: IdentityBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VortexBlock {
    pub n_vortices: usize,
    pub epsilon: f64,
    /// `θ_k = |k|^{-γ}` on `0 < |k| <= theta_cutoff`.
    pub theta_gamma: f64,
    pub theta_cutoff: usize,
    /// Rescale θ to `‖θ‖² = 2`.
    pub theta_normalize: bool,
    pub kernel_backend: KernelBackend,
    pub kernel_cutoff: usize,
    pub kernel_grid: usize,
    pub dt: f64,
    pub t_final: f64,
    pub guard_distance: f64,
    pub max_halvings: u32,
    pub record_every: usize,
    /// Fourier modes `e_l` whose pairing with the empirical vorticity is recorded.
    pub observables: Vec<Mode>,
}

impl Default for VortexBlock {
    fn default() -> Self {
        let v = VortexConfig::default();
        VortexBlock {
            n_vortices: v.n_vortices,
            epsilon: v.epsilon,
            theta_gamma: 1.0,
            theta_cutoff: 8,
            theta_normalize: false,
            kernel_backend: v.kernel_backend,
            kernel_cutoff: v.kernel_cutoff,
            kernel_grid: v.kernel_grid,
            dt: v.dt,
            t_final: v.t_final,
            guard_distance: v.guard_distance,
            max_halvings: v.max_halvings,
            record_every: 10,
            observables: vec![Mode::of(1, 0), Mode::of(0, 1)],
        }
    }
}

impl VortexBlock {
    pub fn vortex_config(&self) -> VortexConfig {
        VortexConfig {
            n_vortices: self.n_vortices,
            epsilon: self.epsilon,
            kernel_cutoff: self.kernel_cutoff,
            kernel_grid: self.kernel_grid,
            kernel_backend: self.kernel_backend,
            dt: self.dt,
            t_final: self.t_final,
            guard_distance: self.guard_distance,
            max_halvings: self.max_halvings,
            record_every: self.record_every,
            keep_increments: false,
        }
    }

    pub fn theta(&self) -> msqg::Result<ThetaSeq> {
        if self.theta_normalize {
            Ok(theta_scaling(self.theta_gamma, self.theta_cutoff)?.1)
        } else {
            theta_power(self.theta_gamma, self.theta_cutoff)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosBlock {
    /// Largest chaos order `n` of the adjointness blocks `n → n+1`.
    pub n_max: usize,
    /// Largest mode radius of the chaos index set.
    pub m_modes: usize,
    /// Galerkin band of the generator.
    pub galerkin_m: usize,
    pub epsilon: f64,
    /// Random real cylinder functions in the dissipativity audit.
    pub samples: usize,
    pub degree: usize,
    pub tolerance: f64,
}

impl Default for ChaosBlock {
    fn default() -> Self {
        ChaosBlock {
            n_max: 3,
            m_modes: 2,
            galerkin_m: 2,
            epsilon: 0.5,
            samples: 20,
            degree: 3,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelBlock {
    pub epsilon: f64,
    pub kernel_cutoff: usize,
    pub kernel_grid: usize,
}

impl Default for KernelBlock {
    fn default() -> Self {
        KernelBlock {
            epsilon: 0.5,
            kernel_cutoff: 64,
            kernel_grid: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentityBlock {
    pub gammas: Vec<f64>,
    pub max_cutoff: usize,
    /// Largest `|l|` in the sum identity.
    pub max_l: usize,
    pub points: usize,
    pub tolerance: f64,
}

impl Default for IdentityBlock {
    fn default() -> Self {
        IdentityBlock {
            gammas: vec![0.6, 0.8, 1.0],
            max_cutoff: 12,
            max_l: 5,
            points: 20,
            tolerance: 1e-12,
        }
    }
}

/// Set `path = value` in a TOML tree, creating intermediate tables.
/// The value is parsed as a TOML literal and falls back to a bare string.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::config(
            None,
            format!("override `{assignment}` is not of the form key=value"),
        )
    })?;
    let path = path.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(
            Some(path.to_string()),
            "empty key segment",
        ));
    }
    let mut table = root;
    for k in &keys[..keys.len() - 1] {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            CliError::config(Some(path.to_string()), format!("`{k}` is not a table"))
        })?;
    }
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut tree: toml::Table = toml::from_str(text).map_err(CliError::from_toml)?;
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    RunConfig::deserialize(toml::Value::Table(tree)).map_err(CliError::from_toml)
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::io(p.display().to_string(), e.to_string()))?,
        None => String::new(),
    };
    parse_config(&text, overrides)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config is always representable in TOML")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_values() {
        let c = parse_config(
            "",
            &[
                "vortex.n_vortices=7".into(),
                "galerkin.drift_backend=fast".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.vortex.n_vortices, 7);
        assert_eq!(c.galerkin.drift_backend, msqg::DriftBackend::Fast);
    }

    #[test]
    fn mode_lists_parse() {
        let c = parse_config("[galerkin]\nrecord_modes = [[1, 2], [0, -1]]\n", &[]).unwrap();
        assert_eq!(
            c.galerkin.record_modes,
            vec![Mode::of(1, 2), Mode::of(0, -1)]
        );
        assert!(parse_config("[galerkin]\nrecord_modes = [[0, 0]]\n", &[]).is_err());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("[vortex]\nn_vortex = 3\n", &[]).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("n_vortex"));
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::default();
        let s = to_toml(&c);
        let d = parse_config(&s, &[]).unwrap();
        assert_eq!(c, d);
        assert_eq!(s, to_toml(&d));
    }
}
