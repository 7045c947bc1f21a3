//! Spectral Galerkin truncation of the dissipative mSQG equation with space-time
//! white noise.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fft::{freq_index, Fft2};
use crate::field::{sample_white_noise, SpectralField};
use crate::kernel::{check_eps, kernel_hat, KernelTable};
use crate::modes::{half_modes_in_ball, modes_in_ball, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftBackend {
    /// Direct mode-pair convolution.
    Exact,
    /// Dealiased pseudo-spectral product on a `> 3m` grid.
    Fast,
}

/// Evaluates `B̂(k) = 2πi k·Σ_{p+q=k; |p|,|q|,|k|<=m} K̂_ε(p) ĉ(p) ĉ(q)`.
pub struct DriftEngine {
    pub m: usize,
    pub eps: f64,
    pub backend: DriftBackend,
    modes: Vec<Mode>,
    half: Vec<Mode>,
    khat: Vec<[Complex64; 2]>,
    fft: Option<(Fft2, usize)>,
}

impl DriftEngine {
    pub fn new(m: usize, eps: f64, backend: DriftBackend) -> Result<DriftEngine> {
        check_eps(eps)?;
        if m == 0 {
            return Err(invalid("galerkin_m", "must be >= 1"));
        }
        let modes = modes_in_ball(m);
        let khat = modes.iter().map(|p| kernel_hat(*p, eps)).collect();
        let fft = match backend {
            DriftBackend::Exact => None,
            DriftBackend::Fast => {
                let n = (3 * m + 1).next_power_of_two();
                Some((Fft2::new(n), n))
            }
        };
        Ok(DriftEngine {
            m,
            eps,
            backend,
            half: half_modes_in_ball(m),
            modes,
            khat,
            fft,
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn half_modes(&self) -> &[Mode] {
        &self.half
    }

    /// `B_m(ξ)` as a spectral field of cutoff `m` (input is projected first).
    pub fn drift(&self, xi: &SpectralField) -> SpectralField {
        match self.backend {
            DriftBackend::Exact => self.drift_exact(xi),
            DriftBackend::Fast => self.drift_fast(xi),
        }
    }

    fn drift_exact(&self, xi: &SpectralField) -> SpectralField {
        let m = self.m;
        let u: Vec<[Complex64; 2]> = self
            .modes
            .iter()
            .zip(&self.khat)
            .map(|(p, kh)| {
                let c = xi.get(*p);
                [kh[0] * c, kh[1] * c]
            })
            .collect();
        let mut out = SpectralField::zeros(m);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for &k in &self.half {
            let mut acc = [Complex64::default(); 2];
            for (p, up) in self.modes.iter().zip(&u) {
                let q = match k.sub(*p) {
                    Some(q) if q.within(m) => q,
                    _ => continue,
                };
                let c = xi.get(q);
                acc[0] += up[0] * c;
                acc[1] += up[1] * c;
            }
            out.set(k, two_pi_i * (acc[0] * k.k1 as f64 + acc[1] * k.k2 as f64));
        }
        out
    }

    fn drift_fast(&self, xi: &SpectralField) -> SpectralField {
        let (fft, n) = self.fft.as_ref().unwrap();
        let n = *n;
        let mut f = vec![Complex64::default(); n * n];
        let mut u1 = vec![Complex64::default(); n * n];
        let mut u2 = vec![Complex64::default(); n * n];
        for (p, kh) in self.modes.iter().zip(&self.khat) {
            let c = xi.get(*p);
            let t = freq_index(p.k1, n) * n + freq_index(p.k2, n);
            f[t] = c;
            u1[t] = kh[0] * c;
            u2[t] = kh[1] * c;
        }
        fft.process(&mut f, true);
        fft.process(&mut u1, true);
        fft.process(&mut u2, true);
        for t in 0..n * n {
            let v = f[t].re;
            u1[t] = Complex64::new(u1[t].re * v, 0.0);
            u2[t] = Complex64::new(u2[t].re * v, 0.0);
        }
        fft.process(&mut u1, false);
        fft.process(&mut u2, false);
        let norm = 1.0 / (n * n) as f64;
        let mut out = SpectralField::zeros(self.m);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for &k in &self.half {
            let t = freq_index(k.k1, n) * n + freq_index(k.k2, n);
            out.set(
                k,
                two_pi_i * (u1[t] * k.k1 as f64 + u2[t] * k.k2 as f64) * norm,
            );
        }
        out
    }
}

/// Brute-force physical-space value of `⟨Π_mξ⊗Π_mξ, H_ε^{e_l}⟩` by tensor quadrature
/// on an `grid × grid` lattice in each variable, with `K^m` tabulated at the nodes.
/// Exact for band-limited input once `grid >= 4m`.
pub fn drift_oracle(
    xi: &SpectralField,
    m: usize,
    eps: f64,
    l: Mode,
    grid: usize,
) -> Result<Complex64> {
    let table = KernelTable::new(eps, m, grid)?;
    drift_oracle_table(xi, m, &table, l)
}

/// [`drift_oracle`] with a caller-supplied table of `K^m` (cutoff must be `m`).
pub fn drift_oracle_table(
    xi: &SpectralField,
    m: usize,
    table: &KernelTable,
    l: Mode,
) -> Result<Complex64> {
    let n = table.n;
    if n < 4 * m {
        return Err(Error::UnderResolved {
            grid: n,
            band: m,
            need: 4 * m - 1,
        });
    }
    if table.cutoff != m {
        return Err(invalid(
            "kernel_cutoff",
            format!("table cutoff {} != m = {m}", table.cutoff),
        ));
    }
    let xm = xi.project(m);
    let h = 1.0 / n as f64;
    let pts: Vec<[f64; 2]> = (0..n * n)
        .map(|t| [(t / n) as f64 * h, (t % n) as f64 * h])
        .collect();
    let vals: Vec<f64> = pts.iter().map(|x| xm.eval(*x)).collect();
    let phi = crate::testfn::TestFunction::fourier(l);
    let grads: Vec<[Complex64; 2]> = pts.iter().map(|x| phi.grad(*x)).collect();
    let mut s = Complex64::default();
    for a in 0..n * n {
        let (ia, ja) = (a / n, a % n);
        let mut inner = Complex64::default();
        for b in 0..n * n {
            if a == b {
                continue;
            }
            let (ib, jb) = (b / n, b % n);
            let k = table.node((ia + n - ib) % n, (ja + n - jb) % n);
            let g = [grads[a][0] - grads[b][0], grads[a][1] - grads[b][1]];
            inner += (g[0] * k[0] + g[1] * k[1]) * vals[b];
        }
        s += inner * (0.5 * vals[a]);
    }
    Ok(s * h.powi(4))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalerkinState {
    pub m: usize,
    pub field: SpectralField,
    pub t: f64,
}

/// `ξ ~ μ` restricted to `0 < |k| <= m`.
pub fn sample_mu_initial<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<GalerkinState> {
    Ok(GalerkinState {
        m,
        field: sample_white_noise(rng, m)?,
        t: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub galerkin_m: usize,
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Modes `l` whose `⟨ξ_t, e_l⟩` is recorded.
    pub record_modes: Vec<Mode>,
    pub record_every: usize,
    pub drift_backend: DriftBackend,
    /// Drop the nonlinearity (linear OU test flow).
    pub linear: bool,
    /// Keep the per-step martingale increments of the recorded modes.
    pub keep_martingale: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            galerkin_m: 8,
            epsilon: 0.5,
            dt: 1e-3,
            t_final: 50.0,
            record_modes: vec![Mode::of(1, 0), Mode::of(0, 1), Mode::of(1, 1)],
            record_every: 10,
            drift_backend: DriftBackend::Exact,
            linear: false,
            keep_martingale: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        check_eps(self.epsilon)?;
        if self.galerkin_m == 0 {
            return Err(invalid("galerkin_m", "must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be > 0"));
        }
        if !(self.t_final >= 0.0) {
            return Err(invalid("t_final", "must be >= 0"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be >= 1"));
        }
        if let Some(k) = self
            .record_modes
            .iter()
            .find(|k| !k.within(self.galerkin_m))
        {
            return Err(invalid("record_modes", format!("{k} outside |k| <= m")));
        }
        Ok(())
    }
}

/// Exponential-Euler integrator with exact OU noise increments.
pub struct GalerkinStepper {
    pub engine: DriftEngine,
    pub dt: f64,
    pub linear: bool,
    decay: Vec<f64>,
    phi1: Vec<f64>,
    noise_sd: Vec<f64>,
}

impl GalerkinStepper {
    pub fn new(
        m: usize,
        eps: f64,
        dt: f64,
        backend: DriftBackend,
        linear: bool,
    ) -> Result<GalerkinStepper> {
        let engine = DriftEngine::new(m, eps, backend)?;
        let mut decay = Vec::new();
        let mut phi1 = Vec::new();
        let mut noise_sd = Vec::new();
        for k in engine.half_modes() {
            let lam = 4.0 * PI * PI * k.norm2() as f64;
            let e = (-lam * dt).exp();
            decay.push(e);
            phi1.push(-(-lam * dt).exp_m1() / lam);
            // per real component: E|noise|² = 1 - e^{-2λdt}, split evenly
            noise_sd.push((-(-2.0 * lam * dt).exp_m1() / 2.0).sqrt());
        }
        Ok(GalerkinStepper {
            engine,
            dt,
            linear,
            decay,
            phi1,
            noise_sd,
        })
    }

    /// One step; returns the drift `B̂` evaluated at the left point.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut GalerkinState,
        rng: &mut R,
    ) -> Result<Option<SpectralField>> {
        let b = if self.linear {
            None
        } else {
            Some(self.engine.drift(&state.field))
        };
        for (i, &k) in self.engine.half_modes().iter().enumerate() {
            let c = state.field.get(k);
            let bk = b.as_ref().map(|f| f.get(k)).unwrap_or_default();
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            // i·sign(k)·(g₁ + i g₂) scaled, sign(k) = +1 on the half lattice
            let z = Complex64::new(-g2, g1) * self.noise_sd[i];
            let v = c * self.decay[i] - bk * self.phi1[i] + z;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite {
                    t: state.t,
                    k1: k.k1,
                    k2: k.k2,
                });
            }
            state.field.set(k, v);
        }
        state.t += self.dt;
        Ok(b)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalerkinPath {
    pub modes: Vec<Mode>,
    pub times: Vec<f64>,
    /// `series[o][r] = ⟨ξ_{t_r}, e_{l_o}⟩`.
    pub series: Vec<Vec<Complex64>>,
    /// `martingale[o][s]`: increment `ΔM^{(l_o)}` over step `s`.
    pub martingale: Vec<Vec<Complex64>>,
    pub final_state: GalerkinState,
    pub dt: f64,
}

/// Integrate from `initial`, recording mode series and (optionally) the martingale
/// increments `ΔM^{(l)} = Δ⟨ξ,e_l⟩ + (⟨B_m,e_l⟩ + 4π²|l|²⟨ξ,e_l⟩) dt`.
pub fn simulate_spde_path(
    cfg: &IntegratorConfig,
    initial: GalerkinState,
    rng: &mut ChaCha8Rng,
) -> Result<GalerkinPath> {
    cfg.validate()?;
    let stepper = GalerkinStepper::new(
        cfg.galerkin_m,
        cfg.epsilon,
        cfg.dt,
        cfg.drift_backend,
        cfg.linear,
    )?;
    let mut state = initial;
    let modes = cfg.record_modes.clone();
    let mut times = vec![state.t];
    let mut series: Vec<Vec<Complex64>> =
        modes.iter().map(|l| vec![state.field.pair_e(*l)]).collect();
    let mut martingale: Vec<Vec<Complex64>> = vec![Vec::new(); modes.len()];
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    for s in 1..=steps {
        let before: Vec<Complex64> = modes.iter().map(|l| state.field.pair_e(*l)).collect();
        let b = stepper.step(&mut state, rng)?;
        if cfg.keep_martingale {
            for (o, l) in modes.iter().enumerate() {
                let lam = 4.0 * PI * PI * l.norm2() as f64;
                let bl = b.as_ref().map(|f| f.pair_e(*l)).unwrap_or_default();
                let d = state.field.pair_e(*l) - before[o] + (bl + before[o] * lam) * cfg.dt;
                martingale[o].push(d);
            }
        }
        if s % cfg.record_every == 0 {
            times.push(state.t);
            for (o, l) in modes.iter().enumerate() {
                series[o].push(state.field.pair_e(*l));
            }
        }
    }
    Ok(GalerkinPath {
        modes,
        times,
        series,
        martingale,
        final_state: state,
        dt: cfg.dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn single_pair_has_no_drift() {
        let mut f = SpectralField::zeros(5);
        f.set(Mode::of(2, 1), Complex64::new(0.7, -0.3));
        for backend in [DriftBackend::Exact, DriftBackend::Fast] {
            let b = DriftEngine::new(5, 0.5, backend).unwrap().drift(&f);
            for k in modes_in_ball(5) {
                assert!(b.get(k).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn fast_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = sample_white_noise(&mut rng, 6).unwrap();
        let a = DriftEngine::new(6, 0.8, DriftBackend::Exact)
            .unwrap()
            .drift(&f);
        let b = DriftEngine::new(6, 0.8, DriftBackend::Fast)
            .unwrap()
            .drift(&f);
        for k in modes_in_ball(6) {
            assert!((a.get(k) - b.get(k)).norm() < 1e-11);
        }
        assert!(a.reality_residual() < 1e-13);
    }

    #[test]
    fn conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let f = sample_white_noise(&mut rng, 8).unwrap();
        let b = DriftEngine::new(8, 0.5, DriftBackend::Exact)
            .unwrap()
            .drift(&f);
        let s = b.l2_inner(&f);
        assert!(s.abs() < 1e-12 * b.l2_norm2().sqrt() * f.l2_norm2().sqrt());
    }

    #[test]
    fn oracle_agrees_with_spectral_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let f = sample_white_noise(&mut rng, 3).unwrap();
        let b = DriftEngine::new(3, 1.0, DriftBackend::Exact)
            .unwrap()
            .drift(&f);
        let l = Mode::of(1, 2);
        let q = drift_oracle(&f, 3, 1.0, l, 12).unwrap();
        // ⟨B_m, e_l⟩ = -⟨Π_mξ⊗Π_mξ, H^{e_l}⟩
        assert!(
            (b.pair_e(l) + q).norm() < 1e-11,
            "{} vs {}",
            b.pair_e(l),
            -q
        );
        assert!(drift_oracle(&f, 3, 1.0, l, 8).is_err());
        assert_eq!(
            drift_oracle(&SpectralField::zeros(3), 3, 1.0, l, 12).unwrap(),
            Complex64::default()
        );
    }

    #[test]
    fn linear_step_is_exact_ou_mean() {
        let st = GalerkinStepper::new(3, 0.5, 0.01, DriftBackend::Exact, true).unwrap();
        let mut s = GalerkinState {
            m: 3,
            field: SpectralField::zeros(3),
            t: 0.0,
        };
        s.field.set(Mode::of(1, 0), Complex64::new(1.0, 0.0));
        // average over noise: mean decays by exactly e^{-λ dt}
        let mut mean = Complex64::default();
        let reps = 20000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..reps {
            let mut c = s.clone();
            st.step(&mut c, &mut rng).unwrap();
            mean += c.field.get(Mode::of(1, 0));
        }
        mean /= reps as f64;
        let e = (-4.0 * PI * PI * 0.01f64).exp();
        assert!((mean.re - e).abs() < 0.02);
    }
}
