use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use super::ops::apply_gm;
use super::vector::{orbit_size, ChaosVector, WeightSpec};
use crate::error::{invalid, Error, Result};
use crate::field::{sample_white_noise, SpectralField};
use crate::galerkin::drift_oracle_table;
use crate::kernel::KernelTable;
use crate::modes::{modes_in_ball, Mode};
use crate::stats::{mean_se, MeanSe};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `:X_{k_1}⋯X_{k_n}:` for Gaussian coordinates with `E[X_a X_b] = δ_{a+b,0}`.
pub fn wick_monomial(key: &[Mode], x: &dyn Fn(Mode) -> Complex64) -> Complex64 {
    if key.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let a = key[0];
    let s = &key[1..];
    let mut v = x(a) * wick_monomial(s, x);
    for j in 0..s.len() {
        if s[j] == a.neg() {
            let rest: Vec<Mode> = s
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, k)| *k)
                .collect();
            v -= wick_monomial(&rest, x);
        }
    }
    v
}

impl ChaosVector {
    /// `Σ_n W_n(φ_n)` evaluated at `ξ` via Wick polynomials in `X_k = ⟨ξ, e_k⟩`.
    /// Refuses fields that are not real or do not resolve every mode in use.
    pub fn eval_at(&self, xi: &SpectralField) -> Result<Complex64> {
        check_field(xi, self.iter().flat_map(|(k, _)| k.iter().copied()))?;
        let x = |k: Mode| xi.pair_e(k);
        Ok(self
            .iter()
            .map(|(k, c)| c * orbit_size(k) * wick_monomial(k, &x))
            .sum())
    }
}

fn check_field(xi: &SpectralField, modes: impl Iterator<Item = Mode>) -> Result<()> {
    if xi.reality_residual() > 1e-12 {
        return Err(Error::Precondition("field is not real".into()));
    }
    let worst = modes.map(|k| k.norm2()).max().unwrap_or(0);
    if worst > (xi.m * xi.m) as i64 {
        return Err(Error::Precondition(format!(
            "field cutoff {} does not resolve modes with |k|² = {worst}",
            xi.m
        )));
    }
    Ok(())
}

/// Polynomial `F = Σ_S c_S Π_{l∈S} X_l` in the coordinates `X_l = ⟨ξ, e_l⟩`,
/// monomials keyed by sorted mode multisets (`[]` is the constant).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CylinderFunction {
    terms: BTreeMap<Vec<Mode>, Complex64>,
}

impl CylinderFunction {
    pub fn new() -> CylinderFunction {
        CylinderFunction::default()
    }

    pub fn constant(c: f64) -> CylinderFunction {
        let mut f = CylinderFunction::new();
        f.add_term(&[], Complex64::new(c, 0.0));
        f
    }

    /// `X_l`.
    pub fn coordinate(l: Mode) -> CylinderFunction {
        let mut f = CylinderFunction::new();
        f.add_term(&[l], Complex64::new(1.0, 0.0));
        f
    }

    /// `Re X_l = (X_l + X_{−l})/2`.
    pub fn re_coordinate(l: Mode) -> CylinderFunction {
        let mut f = CylinderFunction::new();
        f.add_term(&[l], Complex64::new(0.5, 0.0));
        f.add_term(&[l.neg()], Complex64::new(0.5, 0.0));
        f
    }

    pub fn add_term(&mut self, modes: &[Mode], c: Complex64) {
        let mut k = modes.to_vec();
        k.sort();
        let e = self.terms.entry(k.clone()).or_default();
        *e += c;
        if *e == ZERO {
            self.terms.remove(&k);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Mode>, &Complex64)> {
        self.terms.iter()
    }

    pub fn coef(&self, modes: &[Mode]) -> Complex64 {
        let mut k = modes.to_vec();
        k.sort();
        self.terms.get(&k).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.len()).max().unwrap_or(0)
    }

    /// Index set `Λ` of coordinates the function depends on.
    pub fn index_set(&self) -> BTreeSet<Mode> {
        self.terms.keys().flat_map(|k| k.iter().copied()).collect()
    }

    pub fn band(&self) -> usize {
        self.index_set()
            .iter()
            .map(|k| (k.norm2() as f64).sqrt().ceil() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.terms.iter().all(|(k, c)| {
            let neg: Vec<Mode> = k.iter().map(|m| m.neg()).collect();
            (self.coef(&neg) - c.conj()).norm() <= tol
        })
    }

    pub fn eval_coords(&self, x: &dyn Fn(Mode) -> Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| k.iter().fold(*c, |acc, l| acc * x(*l)))
            .sum()
    }

    pub fn eval(&self, xi: &SpectralField) -> Complex64 {
        self.eval_coords(&|k| xi.pair_e(k))
    }

    /// `f_l = ∂F/∂X_l`, with `X_l` and `X_{−l}` treated as independent variables.
    pub fn partial(&self, l: Mode) -> CylinderFunction {
        let mut f = CylinderFunction::new();
        for (k, c) in &self.terms {
            if let Some(pos) = k.iter().position(|m| *m == l) {
                let mult = k.iter().filter(|m| **m == l).count() as f64;
                let mut rest = k.clone();
                rest.remove(pos);
                f.add_term(&rest, c * mult);
            }
        }
        f
    }

    /// `f_{l,m}`.
    pub fn partial2(&self, l: Mode, m: Mode) -> CylinderFunction {
        self.partial(l).partial(m)
    }

    /// Central finite difference of `F` in the coordinate `X_l` against [`Self::partial`].
    pub fn fd_check(&self, xi: &SpectralField, l: Mode, h: f64) -> f64 {
        let base = |k: Mode| xi.pair_e(k);
        let shifted = |d: f64| move |k: Mode| if k == l { base(k) + d } else { base(k) };
        let fd = (self.eval_coords(&shifted(h)) - self.eval_coords(&shifted(-h))) / (2.0 * h);
        (fd - self.partial(l).eval(xi)).norm()
    }

    /// Chaos expansion, using `X_a :T: = :aT: + Σ_j δ_{a+t_j,0} :T∖t_j:`.
    pub fn to_chaos(&self) -> ChaosVector {
        let band = self.band();
        let mut out = ChaosVector::new(self.degree(), band);
        for (s, c) in &self.terms {
            let mut wick: BTreeMap<Vec<Mode>, Complex64> = BTreeMap::new();
            wick.insert(Vec::new(), Complex64::new(1.0, 0.0));
            for &a in s {
                let mut next: BTreeMap<Vec<Mode>, Complex64> = BTreeMap::new();
                for (t, v) in &wick {
                    let mut up = t.clone();
                    up.push(a);
                    up.sort();
                    *next.entry(up).or_default() += v;
                    for j in 0..t.len() {
                        if t[j] == a.neg() {
                            let mut down = t.clone();
                            down.remove(j);
                            *next.entry(down).or_default() += v;
                        }
                    }
                }
                wick = next;
            }
            for (t, v) in wick {
                // :X_κ: has chaos coefficient 1/|orbit(κ)|
                out.add(&t, c * v / orbit_size(&t));
            }
        }
        out
    }

    /// Random real polynomial with `n_terms` monomials of each degree `1..=degree`
    /// in modes `|l| <= m_modes`.
    pub fn random_real<R: Rng + ?Sized>(
        rng: &mut R,
        degree: usize,
        m_modes: usize,
        n_terms: usize,
    ) -> CylinderFunction {
        let modes = modes_in_ball(m_modes);
        let mut f = CylinderFunction::new();
        for d in 1..=degree {
            for _ in 0..n_terms {
                let s: Vec<Mode> = (0..d)
                    .map(|_| modes[rng.random_range(0..modes.len())])
                    .collect();
                let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                let neg: Vec<Mode> = s.iter().map(|k| k.neg()).collect();
                f.add_term(&s, c * 0.5);
                f.add_term(&neg, c.conj() * 0.5);
            }
        }
        f
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OracleValue {
    /// `Σ_l f_l(ξ) ⟨Π_mξ⊗Π_mξ, H^{e_l}⟩` by physical-space quadrature.
    pub pointwise: Complex64,
    /// Wick evaluation at `ξ` of `G^m` applied to the chaos expansion of `F`.
    pub chaos: Complex64,
}

impl OracleValue {
    pub fn abs_diff(&self) -> f64 {
        (self.pointwise - self.chaos).norm()
    }
}

/// Evaluate `G^m F(ξ)` both pointwise and through the chaos operators.
/// `table` must tabulate `K^m` on a grid `>= 4m`.
pub fn chaos_to_pointwise_oracle(
    f: &CylinderFunction,
    xi: &SpectralField,
    m: usize,
    eps: f64,
    table: &KernelTable,
) -> Result<OracleValue> {
    if (table.eps - eps).abs() > 0.0 {
        return Err(invalid(
            "epsilon",
            "kernel table built for a different epsilon",
        ));
    }
    check_field(xi, f.index_set().into_iter().chain(modes_in_ball(m)))?;
    let mut pointwise = ZERO;
    for l in f.index_set() {
        let fl = f.partial(l).eval(xi);
        if fl != ZERO {
            pointwise += fl * drift_oracle_table(xi, m, table, l)?;
        }
    }
    let g = apply_gm(&f.to_chaos(), m, eps)?;
    let chaos = g.eval_at(xi)?;
    Ok(OracleValue { pointwise, chaos })
}

fn energy_modes(f: &CylinderFunction) -> BTreeSet<Mode> {
    f.index_set()
        .into_iter()
        .flat_map(|l| [l, l.neg()])
        .collect()
}

/// `E(F)(ξ) = 8π² Σ_l |l|² f_l(ξ) f_{−l}(ξ)` for real `F`.
pub fn energy_operator(f: &CylinderFunction, xi: &SpectralField) -> Result<f64> {
    if !f.is_real(1e-12) {
        return Err(Error::Precondition(
            "energy operator needs a real cylinder".into(),
        ));
    }
    let mut s = ZERO;
    for l in energy_modes(f) {
        s += f.partial(l).eval(xi) * f.partial(l.neg()).eval(xi) * l.norm2() as f64;
    }
    Ok(8.0 * PI * PI * s.re)
}

/// `Σ_l 8π²|l|² ‖w(N) f_l‖² / ‖w(N−1)(−L₀)^{1/2} F‖²` in chaos coordinates.
pub fn energy_norm_check(f: &CylinderFunction, w: &WeightSpec) -> Result<f64> {
    if !f.is_real(1e-12) {
        return Err(Error::Precondition(
            "energy norm check needs a real cylinder".into(),
        ));
    }
    let mut lhs = 0.0;
    for l in energy_modes(f) {
        let fl = f.partial(l).to_chaos().number_multiplier(|n| w.w(n));
        lhs += 8.0 * PI * PI * l.norm2() as f64 * fl.norm2();
    }
    let rhs = f
        .to_chaos()
        .neg_l0_pow(0.5)?
        .number_multiplier(|n| if n == 0 { 0.0 } else { w.w(n - 1) })
        .norm2();
    if rhs == 0.0 {
        return Err(invalid("F", "constant cylinder has zero energy norm"));
    }
    Ok(lhs / rhs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyMc {
    pub mc: MeanSe,
    /// `2‖(−L₀)^{1/2} F‖²`.
    pub chaos: f64,
}

/// Monte Carlo mean of `E(F)` under white noise against the chaos value.
pub fn energy_mc_check<R: Rng + ?Sized>(
    f: &CylinderFunction,
    samples: usize,
    rng: &mut R,
) -> Result<EnergyMc> {
    if samples < 2 {
        return Err(Error::InsufficientSamples("need at least 2 samples".into()));
    }
    let band = f.band().max(1);
    let mut xs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let xi = sample_white_noise(rng, band)?;
        xs.push(energy_operator(f, &xi)?);
    }
    let chaos = 2.0 * f.to_chaos().neg_l0_pow(0.5)?.norm2();
    Ok(EnergyMc {
        mc: mean_se(&xs),
        chaos,
    })
}
