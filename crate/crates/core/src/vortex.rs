//! Stochastic point vortices with transport noise on the torus.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::kernel::{Kernel, KernelBackend};
use crate::modes::{torus_dist, wrap, Mode};
use crate::rng::{stream, StreamRole};
use crate::testfn::TestFunction;
use crate::theta::ThetaSeq;

/// Positions on the unit torus with fixed real intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexState {
    pub t: f64,
    pub pos: Vec<[f64; 2]>,
    pub intensities: Vec<f64>,
}

impl VortexState {
    pub fn n(&self) -> usize {
        self.pos.len()
    }

    /// Smallest pairwise torus distance and the pair attaining it.
    pub fn min_distance(&self) -> (f64, usize, usize) {
        min_pair(&self.pos)
    }

    /// `⟨ξ^N, φ⟩ = N^{-1/2} Σ ξ_i φ(X_i)`.
    pub fn empirical_pairing(&self, phi: &TestFunction) -> Complex64 {
        let s: Complex64 = self
            .pos
            .iter()
            .zip(&self.intensities)
            .map(|(x, w)| phi.eval(*x) * *w)
            .sum();
        s / (self.n() as f64).sqrt()
    }

    /// `⟨ξ^N, e_k⟩`.
    pub fn empirical_mode(&self, k: Mode) -> Complex64 {
        let s: Complex64 = self
            .pos
            .iter()
            .zip(&self.intensities)
            .map(|(x, w)| k.e(*x) * *w)
            .sum();
        s / (self.n() as f64).sqrt()
    }

    /// `⟨ξ^N⊗ξ^N, H_ε^φ⟩ = (1/N) Σ_{i<j} ξ_i ξ_j K(X_i - X_j)·(∇φ(X_i) - ∇φ(X_j))`.
    pub fn nonlinear_observable(&self, phi: &TestFunction, kernel: &Kernel) -> Complex64 {
        let n = self.n();
        let grads: Vec<[Complex64; 2]> = self.pos.iter().map(|x| phi.grad(*x)).collect();
        let mut s = Complex64::default();
        for i in 0..n {
            for j in i + 1..n {
                let d = [
                    self.pos[i][0] - self.pos[j][0],
                    self.pos[i][1] - self.pos[j][1],
                ];
                let k = kernel.eval(d);
                let g = [grads[i][0] - grads[j][0], grads[i][1] - grads[j][1]];
                s += (g[0] * k[0] + g[1] * k[1]) * (self.intensities[i] * self.intensities[j]);
            }
        }
        s / n as f64
    }
}

fn min_pair(pos: &[[f64; 2]]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let d = torus_dist(pos[i], pos[j]);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

/// Draw `N` i.i.d. uniform positions and i.i.d. standard Gaussian intensities
/// from independent streams. Returns the state and the number of resamples
/// caused by coincident positions.
pub fn sample_initial_vortices(
    seed_root: u64,
    replica: u64,
    n: usize,
) -> Result<(VortexState, usize)> {
    if n == 0 {
        return Err(invalid("n_vortices", "must be >= 1"));
    }
    let mut pr = stream(seed_root, replica, StreamRole::Initial);
    let mut ir = stream(seed_root, replica, StreamRole::Intensities);
    let intensities: Vec<f64> = (0..n).map(|_| ir.sample(StandardNormal)).collect();
    let mut resamples = 0;
    loop {
        let pos: Vec<[f64; 2]> = (0..n)
            .map(|_| [pr.random::<f64>(), pr.random::<f64>()])
            .collect();
        if n < 2 || min_pair(&pos).0 > 0.0 {
            return Ok((
                VortexState {
                    t: 0.0,
                    pos,
                    intensities,
                },
                resamples,
            ));
        }
        resamples += 1;
    }
}

/// `N^{-1/2} Σ_{j≠i} ξ_j K_ε(X_i - X_j)` for every vortex.
pub fn vortex_drift(state: &VortexState, kernel: &Kernel) -> Vec<[f64; 2]> {
    let n = state.n();
    let mut u = vec![[0.0; 2]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = [
                state.pos[i][0] - state.pos[j][0],
                state.pos[i][1] - state.pos[j][1],
            ];
            let k = kernel.eval(d);
            let (wi, wj) = (state.intensities[i], state.intensities[j]);
            u[i][0] += wj * k[0];
            u[i][1] += wj * k[1];
            u[j][0] -= wi * k[0];
            u[j][1] -= wi * k[1];
        }
    }
    let s = 1.0 / (n as f64).sqrt();
    for v in u.iter_mut() {
        v[0] *= s;
        v[1] *= s;
    }
    u
}

/// Increments `(ΔB₁^k, ΔB₂^k)` over `dt` for each positive mode, `ΔW^k = ΔB₁ + iΔB₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub dt: f64,
    pub db: Vec<[f64; 2]>,
}

impl Increment {
    /// Replay form: same step size, negated increments.
    pub fn negated(&self) -> Increment {
        Increment {
            dt: self.dt,
            db: self.db.iter().map(|b| [-b[0], -b[1]]).collect(),
        }
    }

    /// Brownian-bridge refinement into two half steps summing to `self`.
    pub fn split<R: Rng + ?Sized>(&self, rng: &mut R) -> (Increment, Increment) {
        let s = (self.dt / 4.0).sqrt();
        let mut a = Vec::with_capacity(self.db.len());
        let mut b = Vec::with_capacity(self.db.len());
        for v in &self.db {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            let h = [0.5 * v[0] + s * z0, 0.5 * v[1] + s * z1];
            a.push(h);
            b.push([v[0] - h[0], v[1] - h[1]]);
        }
        (
            Increment {
                dt: self.dt / 2.0,
                db: a,
            },
            Increment {
                dt: self.dt / 2.0,
                db: b,
            },
        )
    }
}

/// Independent Brownian increments for the positive modes of a noise sequence.
pub struct BrownianDriver {
    rng: ChaCha8Rng,
    n_modes: usize,
}

impl BrownianDriver {
    pub fn new(rng: ChaCha8Rng, n_modes: usize) -> BrownianDriver {
        BrownianDriver { rng, n_modes }
    }

    pub fn next(&mut self, dt: f64) -> Increment {
        let s = dt.sqrt();
        let db = (0..self.n_modes)
            .map(|_| {
                [
                    s * self.rng.sample::<f64, _>(StandardNormal),
                    s * self.rng.sample::<f64, _>(StandardNormal),
                ]
            })
            .collect();
        Increment { dt, db }
    }
}

/// Evaluates `Σ_k θ_k σ_k(x) ΔW^k` for the positive modes `(k, θ_k)`; each `±k` pair
/// contributes `2 θ_k a_k (cos(2πk·x) ΔB₁ - sin(2πk·x) ΔB₂)`.
#[derive(Debug, Clone)]
pub struct NoiseField {
    modes: Vec<(Mode, f64, [f64; 2])>,
    kmax: i32,
}

impl NoiseField {
    pub fn new(theta: &ThetaSeq) -> NoiseField {
        let modes: Vec<(Mode, f64, [f64; 2])> = theta
            .positive_modes()
            .into_iter()
            .map(|(k, t)| (k, t, k.a()))
            .collect();
        let kmax = modes
            .iter()
            .map(|(k, _, _)| k.k1.abs().max(k.k2.abs()))
            .max()
            .unwrap_or(0);
        NoiseField { modes, kmax }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> impl Iterator<Item = (Mode, f64)> + '_ {
        self.modes.iter().map(|(k, t, _)| (*k, *t))
    }

    #[inline]
    pub fn displacement(
        &self,
        x: [f64; 2],
        inc: &Increment,
        scratch: &mut Vec<Complex64>,
    ) -> [f64; 2] {
        let m = self.kmax;
        let side = (2 * m + 1) as usize;
        scratch.clear();
        scratch.resize(side + m as usize + 1, Complex64::default());
        let (p1, p2) = scratch.split_at_mut(m as usize + 1);
        let w1 = Complex64::from_polar(1.0, 2.0 * PI * x[0]);
        let w2 = Complex64::from_polar(1.0, 2.0 * PI * x[1]);
        let mut z = Complex64::new(1.0, 0.0);
        for v in p1.iter_mut() {
            *v = z;
            z *= w1;
        }
        let mut z = w2.inv().powi(m);
        for v in p2.iter_mut() {
            *v = z;
            z *= w2;
        }
        let (mut a, mut b) = (0.0, 0.0);
        for ((k, t, av), db) in self.modes.iter().zip(&inc.db) {
            let e = p1[k.k1 as usize] * p2[(k.k2 + m) as usize];
            let c = 2.0 * t * (e.re * db[0] - e.im * db[1]);
            a += c * av[0];
            b += c * av[1];
        }
        [a, b]
    }

    /// Unpaired sum over all `±k` with `ΔW^{-k} = conj(ΔW^k)`; its imaginary part
    /// must vanish.
    pub fn displacement_complex(&self, x: [f64; 2], inc: &Increment) -> [Complex64; 2] {
        let mut out = [Complex64::default(); 2];
        for ((k, t, _), db) in self.modes.iter().zip(&inc.db) {
            let w = Complex64::new(db[0], db[1]);
            for (kk, ww) in [(*k, w), (k.neg(), w.conj())] {
                let s = kk.sigma(x);
                out[0] += s[0] * ww * *t;
                out[1] += s[1] * ww * *t;
            }
        }
        out
    }
}

/// Near-collision guard activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardEvent {
    pub t: f64,
    pub depth: u32,
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

/// Called before each accepted (sub)step with the state, `dt`, drift and noise displacement.
pub type StepHook<'a> = dyn FnMut(&VortexState, f64, &[[f64; 2]], &[[f64; 2]]) + 'a;

/// Euler–Maruyama stepper with reject-and-halve near-collision guard.
pub struct VortexStepper {
    pub kernel: Kernel,
    pub noise: NoiseField,
    pub guard_distance: f64,
    pub max_halvings: u32,
    /// `+1` forward, `-1` for the time-reversed system.
    pub drift_sign: f64,
}

impl VortexStepper {
    pub fn new(
        kernel: Kernel,
        theta: &ThetaSeq,
        guard_distance: f64,
        max_halvings: u32,
    ) -> VortexStepper {
        VortexStepper {
            kernel,
            noise: NoiseField::new(theta),
            guard_distance,
            max_halvings,
            drift_sign: 1.0,
        }
    }

    /// Advance by one driver increment; refined sub-increments are pushed to `record`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        state: &mut VortexState,
        inc: &Increment,
        bridge: &mut ChaCha8Rng,
        events: &mut Vec<GuardEvent>,
        mut record: Option<&mut Vec<Increment>>,
        hook: &mut StepHook<'_>,
    ) -> Result<()> {
        self.advance(state, inc, bridge, events, &mut record, hook, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        state: &mut VortexState,
        inc: &Increment,
        bridge: &mut ChaCha8Rng,
        events: &mut Vec<GuardEvent>,
        record: &mut Option<&mut Vec<Increment>>,
        hook: &mut StepHook<'_>,
        depth: u32,
    ) -> Result<()> {
        let n = state.n();
        let drift = if n > 1 {
            vortex_drift(state, &self.kernel)
        } else {
            vec![[0.0; 2]; n]
        };
        let mut scratch = Vec::new();
        let noise: Vec<[f64; 2]> = state
            .pos
            .iter()
            .map(|x| self.noise.displacement(*x, inc, &mut scratch))
            .collect();
        let s = self.drift_sign * inc.dt;
        let new_pos: Vec<[f64; 2]> = state
            .pos
            .iter()
            .zip(drift.iter().zip(&noise))
            .map(|(x, (u, w))| [wrap(x[0] + s * u[0] + w[0]), wrap(x[1] + s * u[1] + w[1])])
            .collect();
        if n > 1 && self.guard_distance > 0.0 {
            let (d, i, j) = min_pair(&new_pos);
            if d < self.guard_distance {
                if depth >= self.max_halvings {
                    return Err(Error::NearCollision {
                        i,
                        j,
                        distance: d,
                        retries: depth,
                        t: state.t,
                    });
                }
                events.push(GuardEvent {
                    t: state.t,
                    depth: depth + 1,
                    i,
                    j,
                    distance: d,
                });
                let (a, b) = inc.split(bridge);
                self.advance(state, &a, bridge, events, record, hook, depth + 1)?;
                return self.advance(state, &b, bridge, events, record, hook, depth + 1);
            }
        }
        hook(state, inc.dt, &drift, &noise);
        if let Some(r) = record.as_deref_mut() {
            r.push(inc.clone());
        }
        state.pos = new_pos;
        state.t += self.drift_sign * inc.dt;
        Ok(())
    }
}

/// Parameters of one vortex trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VortexConfig {
    pub n_vortices: usize,
    pub epsilon: f64,
    pub kernel_cutoff: usize,
    pub kernel_grid: usize,
    pub kernel_backend: KernelBackend,
    pub dt: f64,
    pub t_final: f64,
    pub guard_distance: f64,
    pub max_halvings: u32,
    /// Record observables every this many driver steps.
    pub record_every: usize,
    /// Store the refined driver path for replay.
    pub keep_increments: bool,
}

impl Default for VortexConfig {
    fn default() -> Self {
        VortexConfig {
            n_vortices: 16,
            epsilon: 0.5,
            kernel_cutoff: 64,
            kernel_grid: 256,
            kernel_backend: KernelBackend::Auto,
            dt: 1e-3,
            t_final: 1.0,
            guard_distance: 1e-4,
            max_halvings: 8,
            record_every: 1,
            keep_increments: false,
        }
    }
}

impl VortexConfig {
    pub fn validate(&self) -> Result<()> {
        crate::kernel::check_eps(self.epsilon)?;
        if self.n_vortices == 0 {
            return Err(invalid("n_vortices", "must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be > 0"));
        }
        if !(self.t_final >= 0.0) {
            return Err(invalid("t_final", "must be >= 0"));
        }
        if self.guard_distance < 0.0 {
            return Err(invalid("guard_distance", "must be >= 0"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be >= 1"));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::for_vortices(
            self.kernel_backend,
            self.epsilon,
            self.kernel_cutoff,
            self.kernel_grid,
            self.n_vortices,
        )
    }
}

/// Weak-formulation bookkeeping for one observable `φ`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WeakForm {
    pub initial: Complex64,
    pub last: Complex64,
    /// `∫ ⟨ξ⊗ξ, H^φ⟩ ds`, left-point rule.
    pub nonlinear: Complex64,
    /// `c_N ∫ ⟨ξ, Δφ⟩ ds`.
    pub laplacian: Complex64,
    /// `Σ N^{-1/2} Σ_i ξ_i ∇φ(X_i)·(noise displacement)`.
    pub martingale: Complex64,
}

impl WeakForm {
    /// `⟨ξ_T,φ⟩ - ⟨ξ_0,φ⟩ - ∫nonlinear - c_N∫⟨ξ,Δφ⟩ - martingale`.
    pub fn residual(&self) -> Complex64 {
        self.last - self.initial - self.nonlinear - self.laplacian - self.martingale
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VortexPath {
    pub times: Vec<f64>,
    /// `series[o][r]` is observable `o` at recorded time `r`.
    pub series: Vec<Vec<Complex64>>,
    pub weak: Vec<WeakForm>,
    pub guard_events: Vec<GuardEvent>,
    pub initial: VortexState,
    pub final_state: VortexState,
    pub increments: Vec<Increment>,
    pub min_distance: f64,
}

/// Run one trajectory from `initial`, recording `⟨ξ^N_t, φ⟩` for each observable
/// together with every term of the weak formulation.
pub fn simulate_vortex_path(
    cfg: &VortexConfig,
    theta: &ThetaSeq,
    initial: VortexState,
    observables: &[TestFunction],
    noise_rng: ChaCha8Rng,
    bridge_rng: ChaCha8Rng,
    track_weak: bool,
) -> Result<VortexPath> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    simulate_vortex_path_with(
        cfg,
        &kernel,
        theta,
        initial,
        observables,
        noise_rng,
        bridge_rng,
        track_weak,
    )
}

/// [`simulate_vortex_path`] with a prebuilt kernel shared across replicas.
#[allow(clippy::too_many_arguments)]
pub fn simulate_vortex_path_with(
    cfg: &VortexConfig,
    kernel: &Kernel,
    theta: &ThetaSeq,
    initial: VortexState,
    observables: &[TestFunction],
    noise_rng: ChaCha8Rng,
    mut bridge_rng: ChaCha8Rng,
    track_weak: bool,
) -> Result<VortexPath> {
    cfg.validate()?;
    let kernel = kernel.clone();
    let stepper = VortexStepper::new(kernel.clone(), theta, cfg.guard_distance, cfg.max_halvings);
    let mut driver = BrownianDriver::new(noise_rng, stepper.noise.n_modes());
    let c_n = theta.c_n();
    let laps: Vec<TestFunction> = observables.iter().map(|p| p.laplacian()).collect();
    let mut state = initial.clone();
    let mut weak: Vec<WeakForm> = observables
        .iter()
        .map(|p| {
            let v = state.empirical_pairing(p);
            WeakForm {
                initial: v,
                last: v,
                ..Default::default()
            }
        })
        .collect();
    let mut times = vec![0.0];
    let mut series: Vec<Vec<Complex64>> = weak.iter().map(|w| vec![w.initial]).collect();
    let mut events = Vec::new();
    let mut incs = Vec::new();
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let mut min_distance = state.min_distance().0;
    let sqrt_n = (state.n() as f64).sqrt();
    for s in 1..=steps {
        let inc = driver.next(cfg.dt);
        {
            let mut hook = |st: &VortexState, dt: f64, _u: &[[f64; 2]], w: &[[f64; 2]]| {
                if !track_weak {
                    return;
                }
                for (o, phi) in observables.iter().enumerate() {
                    weak[o].nonlinear += st.nonlinear_observable(phi, &kernel) * dt;
                    weak[o].laplacian += st.empirical_pairing(&laps[o]) * (c_n * dt);
                    let mut m = Complex64::default();
                    for ((x, xi), d) in st.pos.iter().zip(&st.intensities).zip(w) {
                        let g = phi.grad(*x);
                        m += (g[0] * d[0] + g[1] * d[1]) * *xi;
                    }
                    weak[o].martingale += m / sqrt_n;
                }
            };
            let rec = if cfg.keep_increments {
                Some(&mut incs)
            } else {
                None
            };
            stepper.step(
                &mut state,
                &inc,
                &mut bridge_rng,
                &mut events,
                rec,
                &mut hook,
            )?;
        }
        if s % cfg.record_every == 0 || s == steps {
            times.push(state.t);
            for (o, phi) in observables.iter().enumerate() {
                let v = state.empirical_pairing(phi);
                series[o].push(v);
                weak[o].last = v;
            }
            if state.n() > 1 {
                min_distance = min_distance.min(state.min_distance().0);
            }
        }
    }
    for (o, phi) in observables.iter().enumerate() {
        weak[o].last = state.empirical_pairing(phi);
    }
    Ok(VortexPath {
        times,
        series,
        weak,
        guard_events: events,
        initial,
        final_state: state,
        increments: incs,
        min_distance,
    })
}

/// Replay the stored refined increments backward from `end` with negated drift and
/// negated increments, returning the reconstructed initial state.
pub fn replay_reversed(
    cfg: &VortexConfig,
    theta: &ThetaSeq,
    end: &VortexState,
    increments: &[Increment],
    mut bridge_rng: ChaCha8Rng,
) -> Result<(VortexState, Vec<GuardEvent>)> {
    let kernel = cfg.kernel()?;
    let mut stepper = VortexStepper::new(kernel, theta, cfg.guard_distance, cfg.max_halvings);
    stepper.drift_sign = -1.0;
    let mut state = end.clone();
    let mut events = Vec::new();
    let mut hook = |_: &VortexState, _: f64, _: &[[f64; 2]], _: &[[f64; 2]]| {};
    for inc in increments.iter().rev() {
        stepper.step(
            &mut state,
            &inc.negated(),
            &mut bridge_rng,
            &mut events,
            None,
            &mut hook,
        )?;
    }
    Ok((state, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::theta_power;
    use rand::SeedableRng;

    fn state(pos: Vec<[f64; 2]>, w: Vec<f64>) -> VortexState {
        VortexState {
            t: 0.0,
            pos,
            intensities: w,
        }
    }

    #[test]
    fn single_vortex_no_drift_no_noise_is_fixed() {
        let theta = ThetaSeq::from_radial(2, |_| 0.0).unwrap();
        let k = Kernel::series(0.5, 8).unwrap();
        let st = VortexStepper::new(k, &theta, 1e-4, 8);
        let mut s = state(vec![[0.3, 0.4]], vec![1.3]);
        let inc = BrownianDriver::new(ChaCha8Rng::seed_from_u64(1), st.noise.n_modes()).next(1e-3);
        let mut ev = Vec::new();
        let mut hook = |_: &VortexState, _: f64, _: &[[f64; 2]], _: &[[f64; 2]]| {};
        st.step(
            &mut s,
            &inc,
            &mut ChaCha8Rng::seed_from_u64(2),
            &mut ev,
            None,
            &mut hook,
        )
        .unwrap();
        assert_eq!(s.pos, vec![[0.3, 0.4]]);
        assert_eq!(
            vortex_drift(
                &state(vec![[0.1, 0.1]], vec![1.0]),
                &Kernel::series(1.0, 4).unwrap()
            ),
            vec![[0.0, 0.0]]
        );
    }

    #[test]
    fn two_vortices_swap_and_perpendicular() {
        let k = Kernel::series(1.0, 32).unwrap();
        let a = state(vec![[0.2, 0.3], [0.45, 0.38]], vec![1.0, 1.0]);
        let b = state(vec![[0.45, 0.38], [0.2, 0.3]], vec![1.0, 1.0]);
        let ua = vortex_drift(&a, &k);
        let ub = vortex_drift(&b, &k);
        assert_eq!(ua[0], ub[1]);
        assert_eq!(ua[1], ub[0]);
        let kv = crate::kernel::KernelSeries::new(1.0, 32)
            .unwrap()
            .eval([-0.25, -0.08])
            .value;
        assert!((ua[0][0] - kv[0] / 2f64.sqrt()).abs() < 1e-14);
        // near the origin the truncated kernel is close to x^⊥ direction
        let close = state(vec![[0.5, 0.5], [0.508, 0.506]], vec![1.0, 1.0]);
        let u = vortex_drift(&close, &Kernel::series(1.0, 64).unwrap());
        let sep = [-0.008, -0.006];
        let along = (u[0][0] * sep[0] + u[0][1] * sep[1]).abs() / 0.01;
        assert!(along < 0.05 * u[0][0].hypot(u[0][1]), "{along}");
    }

    #[test]
    fn noise_is_real_after_pairing() {
        let theta = theta_power(1.0, 4).unwrap();
        let nf = NoiseField::new(&theta);
        let inc = BrownianDriver::new(ChaCha8Rng::seed_from_u64(4), nf.n_modes()).next(0.01);
        let x = [0.71, 0.13];
        let c = nf.displacement_complex(x, &inc);
        let r = nf.displacement(x, &inc, &mut Vec::new());
        assert!(c[0].im.abs() < 1e-13 && c[1].im.abs() < 1e-13);
        assert!((c[0].re - r[0]).abs() < 1e-13 && (c[1].re - r[1]).abs() < 1e-13);
    }

    #[test]
    fn bridge_split_sums_back() {
        let inc = BrownianDriver::new(ChaCha8Rng::seed_from_u64(4), 3).next(0.01);
        let (a, b) = inc.split(&mut ChaCha8Rng::seed_from_u64(5));
        for i in 0..3 {
            for c in 0..2 {
                assert!((a.db[i][c] + b.db[i][c] - inc.db[i][c]).abs() < 1e-15);
            }
        }
        assert_eq!(a.dt, 0.005);
    }

    #[test]
    fn relabeling_invariance_of_observables() {
        let k = Kernel::series(0.5, 16).unwrap();
        let phi = TestFunction::cos(Mode::of(1, 1));
        let a = state(
            vec![[0.1, 0.2], [0.5, 0.9], [0.7, 0.3]],
            vec![0.4, -1.1, 0.8],
        );
        let b = state(
            vec![[0.7, 0.3], [0.1, 0.2], [0.5, 0.9]],
            vec![0.8, 0.4, -1.1],
        );
        assert!(
            (a.nonlinear_observable(&phi, &k) - b.nonlinear_observable(&phi, &k)).norm() < 1e-14
        );
        assert!((a.empirical_pairing(&phi) - b.empirical_pairing(&phi)).norm() < 1e-14);
        let one = state(vec![[0.1, 0.2]], vec![2.0]);
        assert_eq!(one.nonlinear_observable(&phi, &k), Complex64::default());
    }

    #[test]
    fn guard_aborts_after_bounded_retries() {
        let theta = ThetaSeq::from_radial(1, |_| 0.0).unwrap();
        let k = Kernel::series(1.0, 8).unwrap();
        let st = VortexStepper::new(k, &theta, 0.05, 3);
        let mut s = state(vec![[0.3, 0.3], [0.3, 0.33]], vec![1.0, 1.0]);
        let inc = Increment {
            dt: 1e-3,
            db: vec![[0.0; 2]; st.noise.n_modes()],
        };
        let mut ev = Vec::new();
        let mut hook = |_: &VortexState, _: f64, _: &[[f64; 2]], _: &[[f64; 2]]| {};
        let r = st.step(
            &mut s,
            &inc,
            &mut ChaCha8Rng::seed_from_u64(2),
            &mut ev,
            None,
            &mut hook,
        );
        assert!(matches!(r, Err(Error::NearCollision { retries: 3, .. })));
        assert_eq!(ev.len(), 3);
    }
}
