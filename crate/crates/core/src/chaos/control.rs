use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cylinder::CylinderFunction;
use super::ops::{apply_gm, apply_gm_minus, apply_gm_plus, cutoff_split, CutoffSpec};
use super::vector::{ChaosVector, WeightSpec};
use crate::error::{invalid, Error, Result};
use crate::kernel::check_eps;
use crate::stats::loglog_slope;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dissipativity {
    /// `⟨F, L^m F⟩`.
    pub form: Complex64,
    /// `−‖(−L₀)^{1/2} F‖²`.
    pub target: f64,
    /// `⟨F, G^m F⟩`.
    pub drift_part: Complex64,
    pub rel_residual: f64,
}

pub fn dissipativity_form(f: &CylinderFunction, m: usize, eps: f64) -> Result<Dissipativity> {
    dissipativity_chaos(&f.to_chaos(), m, eps)
}

pub fn dissipativity_chaos(phi: &ChaosVector, m: usize, eps: f64) -> Result<Dissipativity> {
    let g = apply_gm(phi, m, eps)?;
    let drift_part = phi.inner(&g);
    let form = phi.inner(&phi.apply_l0()) + drift_part;
    let target = -phi.neg_l0_pow(0.5)?.norm2();
    let rel_residual = if target == 0.0 {
        form.norm()
    } else {
        (form - target).norm() / target.abs()
    };
    Ok(Dissipativity {
        form,
        target,
        drift_part,
        rel_residual,
    })
}

fn energy_norm(v: &ChaosVector, w: &WeightSpec) -> Result<f64> {
    Ok(v.neg_l0_pow(0.5)?.number_multiplier(|n| w.w(n)).norm())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPoint {
    pub l: f64,
    pub psi: ChaosVector,
    pub iterations: usize,
    /// `‖w(N)(−L₀)^{1/2}(ψ − Ψ(ψ))‖` at the returned iterate.
    pub residual: f64,
    /// Last ratio of successive Picard increments.
    pub contraction: f64,
    /// Fock mass projected away by the truncation over all iterations.
    pub overflow: f64,
    /// `‖w(N)(−L₀)^{1/2}(Kφ♯ − φ♯)‖`.
    pub correction: f64,
}

/// Picard iteration for `ψ = (−L₀)^{-1} G^{m,≻} ψ + φ♯` on the truncation of `φ♯`.
pub fn solve_k_fixed_point(
    phi_sharp: &ChaosVector,
    cutoff: &CutoffSpec,
    m: usize,
    eps: f64,
    tol: f64,
    w: &WeightSpec,
    max_iter: usize,
) -> Result<FixedPoint> {
    check_eps(eps)?;
    if !(tol > 0.0) {
        return Err(invalid("fixed_point_tol", "must be > 0"));
    }
    let phi_sharp = phi_sharp.zero_mean();
    let (n_max, m_modes) = (phi_sharp.n_max, phi_sharp.m_modes);
    let mut overflow = 0.0;
    let map = |psi: &ChaosVector, overflow: &mut f64| -> Result<ChaosVector> {
        let (hi, _) = cutoff_split(psi, cutoff, m, eps)?;
        let (hi, lost) = hi.truncated(n_max, m_modes);
        *overflow += lost;
        Ok(hi.neg_l0_pow(-1.0)?.add_vec(&phi_sharp))
    };
    let mut psi = phi_sharp.clone();
    let mut prev_step = f64::NAN;
    let mut contraction = 0.0;
    let mut growing = 0;
    for it in 1..=max_iter {
        let next = map(&psi, &mut overflow)?;
        let step = energy_norm(&next.sub_vec(&psi), w)?;
        psi = next;
        if prev_step.is_finite() && prev_step > 0.0 {
            contraction = step / prev_step;
            if contraction >= 1.0 {
                growing += 1;
            } else {
                growing = 0;
            }
            if growing >= 5 || !step.is_finite() {
                return Err(Error::NotContraction {
                    factor: contraction,
                });
            }
        }
        prev_step = step;
        if step <= tol {
            let check = map(&psi, &mut overflow)?;
            let residual = energy_norm(&check.sub_vec(&psi), w)?;
            if residual <= tol {
                let correction = energy_norm(&psi.sub_vec(&phi_sharp), w)?;
                return Ok(FixedPoint {
                    l: cutoff.l,
                    psi,
                    iterations: it,
                    residual,
                    contraction,
                    overflow,
                    correction,
                });
            }
        }
    }
    Err(Error::NotContraction {
        factor: contraction,
    })
}

/// Smallest `L` among `candidates` (tried in order) for which the Picard
/// iteration converges.
pub fn find_l0(
    phi_sharp: &ChaosVector,
    candidates: &[f64],
    m: usize,
    eps: f64,
    tol: f64,
    w: &WeightSpec,
    max_iter: usize,
) -> Result<FixedPoint> {
    let mut last = Error::Precondition("no candidate L given".into());
    for &l in candidates {
        match solve_k_fixed_point(
            phi_sharp,
            &CutoffSpec::new(l, eps)?,
            m,
            eps,
            tol,
            w,
            max_iter,
        ) {
            Ok(fp) => return Ok(fp),
            Err(e @ Error::NotContraction { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AprioriReport {
    pub gamma: f64,
    pub eps: f64,
    pub ms: Vec<usize>,
    /// `γ > (1−ε)/2` for the `G_+` estimate.
    pub gamma_lower_plus: f64,
    /// `γ <= (2−ε)/4` for the `G_−` estimate.
    pub gamma_upper_minus: f64,
    /// Per `m`, max over the family of LHS/RHS; `None` when `γ` is inadmissible.
    pub ratio_plus: Option<Vec<f64>>,
    pub ratio_minus: Option<Vec<f64>>,
    /// `‖w(N) G^m φ‖ / (m ‖(w(N+1)+w(N−1))(N+1)(−L₀)^{1/2} φ‖)`.
    pub ratio_m: Vec<f64>,
    /// Log-log slope in `m` of the same ratio with the factor `m` removed.
    pub slope_m: Option<f64>,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

pub fn apriori_ratio_report(
    family: &[ChaosVector],
    ms: &[usize],
    gamma: f64,
    eps: f64,
    w: &WeightSpec,
) -> Result<AprioriReport> {
    check_eps(eps)?;
    let lo = (1.0 - eps) / 2.0;
    let hi = (2.0 - eps) / 4.0;
    let plus_ok = gamma > lo;
    let minus_ok = gamma <= hi;
    if !gamma.is_finite() || (!plus_ok && !minus_ok) {
        return Err(invalid(
            "gamma",
            format!("need gamma > {lo} (G+ estimate) or gamma <= {hi} (G- estimate)"),
        ));
    }
    if ms.contains(&0) {
        return Err(invalid("m", "must be >= 1"));
    }
    let wn = |n: usize| w.w(n);
    let wm1 = |n: usize| if n == 0 { w.w(0) } else { w.w(n - 1) };
    let mut rp = Vec::new();
    let mut rm = Vec::new();
    let mut r3 = Vec::new();
    for &m in ms {
        let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
        for phi in family {
            let phi = phi.zero_mean();
            if plus_ok {
                let lhs = apply_gm_plus(&phi, m, eps)?
                    .neg_l0_pow(-gamma)?
                    .number_multiplier(wn)
                    .norm();
                let rhs = phi
                    .neg_l0_pow(1.0 - gamma - eps / 2.0)?
                    .number_multiplier(|n| w.w(n + 1) * (n + 1) as f64)
                    .norm();
                a = a.max(ratio(lhs, rhs));
            }
            if minus_ok {
                let lhs = apply_gm_minus(&phi, m, eps)?
                    .neg_l0_pow(-gamma)?
                    .number_multiplier(wn)
                    .norm();
                let rhs = phi
                    .neg_l0_pow(1.0 - gamma - eps / 4.0)?
                    .number_multiplier(|n| wm1(n) * n as f64)
                    .norm();
                b = b.max(ratio(lhs, rhs));
            }
            let lhs = apply_gm(&phi, m, eps)?.number_multiplier(wn).norm();
            let rhs = m as f64
                * phi
                    .neg_l0_pow(0.5)?
                    .number_multiplier(|n| (w.w(n + 1) + wm1(n)) * (n + 1) as f64)
                    .norm();
            c = c.max(ratio(lhs, rhs));
        }
        rp.push(a);
        rm.push(b);
        r3.push(c);
    }
    let slope_m = if ms.len() >= 2 && r3.iter().all(|r| *r > 0.0) {
        let x: Vec<f64> = ms.iter().map(|m| *m as f64).collect();
        let y: Vec<f64> = r3.iter().zip(&x).map(|(r, m)| r * m).collect();
        Some(loglog_slope(&x, &y))
    } else {
        None
    };
    Ok(AprioriReport {
        gamma,
        eps,
        ms: ms.to_vec(),
        gamma_lower_plus: lo,
        gamma_upper_minus: hi,
        ratio_plus: plus_ok.then_some(rp),
        ratio_minus: minus_ok.then_some(rm),
        ratio_m: r3,
        slope_m,
    })
}
