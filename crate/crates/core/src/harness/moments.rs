//! Moment estimates of the empirical vorticity and its nonlinear term.

use crate::error::{invalid, Error, Result};
use crate::kernel::{h_l2_norm2, h_lq_norm, Kernel, KernelTable};
use crate::modes::{modes_in_ball, Mode};
use crate::stats::{mean_se, MeanSe};
use crate::testfn::TestFunction;
use crate::vortex::{sample_initial_vortices, VortexState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonlinearMoment {
    pub n_vortices: usize,
    pub eps: f64,
    pub k: Mode,
    /// `E|⟨ξ^N⊗ξ^N, H_ε^{e_k}⟩|²` over fresh i.i.d. configurations.
    pub second_moment: MeanSe,
    pub h_l2_norm2: f64,
    /// `2(N-1)/N ‖H‖²`, the value under i.i.d. uniform positions and unit intensities.
    pub exact: f64,
    pub ratio: f64,
}

/// Second moment of the nonlinear observable at `φ = e_k` under the product law.
pub fn nonlinear_second_moment(
    n_vortices: usize,
    k: Mode,
    kernel: &Kernel,
    table: &KernelTable,
    samples: usize,
    seed_root: u64,
) -> Result<NonlinearMoment> {
    if n_vortices < 2 {
        return Err(invalid("n_vortices", "need at least 2 vortices"));
    }
    if samples < 2 {
        return Err(Error::InsufficientSamples("need at least 2 samples".into()));
    }
    let phi = TestFunction::fourier(k);
    let vals: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let (st, _) = sample_initial_vortices(seed_root, r, n_vortices)?;
            Ok(st.nonlinear_observable(&phi, kernel).norm_sqr())
        })
        .collect::<Result<_>>()?;
    let h2 = h_l2_norm2(&phi, table);
    let ms = mean_se(&vals);
    Ok(NonlinearMoment {
        n_vortices,
        eps: kernel.eps(),
        k,
        exact: 2.0 * (n_vortices as f64 - 1.0) / n_vortices as f64 * h2,
        ratio: ms.mean / h2,
        second_moment: ms,
        h_l2_norm2: h2,
    })
}

/// One estimated moment against the reference norm of its bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentLine {
    pub name: String,
    pub p: f64,
    pub moment: MeanSe,
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSuite {
    pub lines: Vec<MomentLine>,
}

fn line(name: &str, p: f64, vals: &[f64], reference: f64) -> MomentLine {
    let moment = mean_se(vals);
    let ratio = if moment.mean == 0.0 {
        0.0
    } else {
        moment.mean / reference
    };
    MomentLine {
        name: name.to_string(),
        p,
        moment,
        reference,
        ratio,
    }
}

/// Moments over a stationary ensemble of vortex states:
/// `E|⟨ξ,f⟩|^p` for `p ∈ {2,4}` against `‖f‖_∞^p`,
/// `E‖ξ‖²_{H^{-1-δ}}` summed over `0 < |k| <= band`,
/// and `E|⟨ξ⊗ξ,H_ε^φ⟩|^{2p}` against `‖H_ε^φ‖^{2p}_{L^{2p}}` on the table nodes.
///
/// The last moment is refused when `ε < 1` and `p >= 1/(1-ε)`.
#[allow(clippy::too_many_arguments)]
pub fn moment_suite(
    states: &[VortexState],
    f: &TestFunction,
    phi: &TestFunction,
    kernel: &Kernel,
    table: &KernelTable,
    delta: f64,
    band: usize,
    p_nonlinear: f64,
) -> Result<MomentSuite> {
    if states.len() < 2 {
        return Err(Error::InsufficientSamples("need at least 2 states".into()));
    }
    let eps = kernel.eps();
    if !(p_nonlinear >= 1.0) {
        return Err(invalid("p_nonlinear", "must be >= 1"));
    }
    if eps < 1.0 && p_nonlinear >= 1.0 / (1.0 - eps) {
        return Err(invalid(
            "p_nonlinear",
            format!("p = {p_nonlinear} >= 1/(1-ε) = {}", 1.0 / (1.0 - eps)),
        ));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    let sup = f.sup(64);
    let pair: Vec<f64> = states
        .par_iter()
        .map(|s| s.empirical_pairing(f).norm())
        .collect();
    let mut lines = Vec::new();
    for p in [2.0, 4.0] {
        let v: Vec<f64> = pair.iter().map(|x| x.powf(p)).collect();
        lines.push(line("pairing", p, &v, sup.powf(p)));
    }
    let modes: Vec<Mode> = modes_in_ball(band);
    let sob: Vec<f64> = states
        .par_iter()
        .map(|s| {
            modes
                .iter()
                .map(|k| {
                    (1.0 + 4.0 * PI * PI * k.norm2() as f64).powf(-1.0 - delta)
                        * s.empirical_mode(*k).norm_sqr()
                })
                .sum()
        })
        .collect();
    lines.push(line("sobolev", 2.0, &sob, 1.0));
    let q = 2.0 * p_nonlinear;
    let nl: Vec<f64> = states
        .par_iter()
        .map(|s| s.nonlinear_observable(phi, kernel).norm().powf(q))
        .collect();
    let h = h_lq_norm(phi, table, q);
    lines.push(line("nonlinear", q, &nl, h.powf(q)));
    Ok(MomentSuite { lines })
}
