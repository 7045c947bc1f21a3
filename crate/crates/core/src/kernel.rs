//! The kernel `K_ε`, the symmetrized test kernel `H_ε^φ` and its cutoff approximations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::modes::{dot, half_modes_in_ball, modes_in_ball, torus_delta, wrap};
use crate::testfn::TestFunction;

pub fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(invalid("epsilon", format!("{eps} outside (0, 1]")))
    }
}

/// Fourier multiplier `K̂_ε(p) = i p^⊥ / ((2π)^ε |p|^{1+ε})`.
pub fn kernel_hat(p: crate::modes::Mode, eps: f64) -> [Complex64; 2] {
    let w = 1.0 / ((2.0 * PI).powf(eps) * p.norm().powf(1.0 + eps));
    let q = p.perp();
    [Complex64::new(0.0, q[0] * w), Complex64::new(0.0, q[1] * w)]
}

/// Result of a direct kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: [f64; 2],
    /// `x` lies on the lattice, where `K_ε` is singular; `value` is then zero.
    pub singular: bool,
}

/// Truncated series `K_ε(x) = (i/(2π)^ε) Σ_{0<|k|<=M} k^⊥ |k|^{-1-ε} e_k(x)`.
///
/// Pairing `±k` gives `-(2/(2π)^ε) Σ_{k∈Z²₊} k^⊥ |k|^{-1-ε} sin(2π k·x)`, which is
/// real and odd by construction.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    pub eps: f64,
    pub cutoff: usize,
    half: Vec<(i32, i32, f64)>,
}

impl KernelSeries {
    pub fn new(eps: f64, cutoff: usize) -> Result<KernelSeries> {
        check_eps(eps)?;
        if cutoff == 0 {
            return Err(invalid("kernel_cutoff", "must be >= 1"));
        }
        let c = 2.0 / (2.0 * PI).powf(eps);
        let half = half_modes_in_ball(cutoff)
            .into_iter()
            .map(|k| (k.k1, k.k2, c / k.norm().powf(1.0 + eps)))
            .collect();
        Ok(KernelSeries { eps, cutoff, half })
    }

    pub fn eval(&self, x: [f64; 2]) -> KernelValue {
        let singular = wrap(x[0]) == 0.0 && wrap(x[1]) == 0.0;
        if singular {
            return KernelValue {
                value: [0.0, 0.0],
                singular,
            };
        }
        let m = self.cutoff as i32;
        let w1 = Complex64::from_polar(1.0, 2.0 * PI * x[0]);
        let w2 = Complex64::from_polar(1.0, 2.0 * PI * x[1]);
        let p1 = powers(w1, 0, m);
        let p2 = powers(w2, -m, m);
        let (mut a, mut b) = (0.0, 0.0);
        for &(k1, k2, w) in &self.half {
            let s = (p1[k1 as usize] * p2[(k2 + m) as usize]).im * w;
            a += k2 as f64 * s;
            b -= k1 as f64 * s;
        }
        KernelValue {
            value: [-a, -b],
            singular,
        }
    }

    /// Unpaired complex evaluation over all `±k`; used to check that the imaginary
    /// residue vanishes.
    pub fn eval_complex(&self, x: [f64; 2]) -> [Complex64; 2] {
        let pre = Complex64::new(0.0, 1.0 / (2.0 * PI).powf(self.eps));
        let mut out = [Complex64::default(); 2];
        for k in modes_in_ball(self.cutoff) {
            let e = k.e(x) * (pre / k.norm().powf(1.0 + self.eps));
            let q = k.perp();
            out[0] += e * q[0];
            out[1] += e * q[1];
        }
        out
    }
}

fn powers(w: Complex64, lo: i32, hi: i32) -> Vec<Complex64> {
    let mut v = Vec::with_capacity((hi - lo + 1) as usize);
    let mut z = w.powi(lo);
    for _ in lo..=hi {
        v.push(z);
        z *= w;
    }
    v
}

/// `K_ε` sampled on the nodes `(i/n, j/n)` with bilinear interpolation in between.
/// Node values are exact evaluations of the truncated series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTable {
    pub eps: f64,
    pub cutoff: usize,
    pub n: usize,
    values: Vec<[f64; 2]>,
}

impl KernelTable {
    pub fn new(eps: f64, cutoff: usize, n: usize) -> Result<KernelTable> {
        let series = KernelSeries::new(eps, cutoff)?;
        if n < 4 {
            return Err(invalid("kernel_grid", "must be >= 4"));
        }
        let m = cutoff as i32;
        // separable evaluation: inner sum over k2 per (k1, column), then over k1
        let roots: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
            .collect();
        let root = |k: i64| roots[(k.rem_euclid(n as i64)) as usize];
        let mut inner = vec![[Complex64::default(); 2]; (m as usize + 1) * n];
        let mut by_row: Vec<Vec<(i32, f64)>> = vec![Vec::new(); m as usize + 1];
        for &(k1, k2, w) in &series.half {
            by_row[k1 as usize].push((k2, w));
        }
        for k1 in 0..=m as usize {
            for j in 0..n {
                let mut acc = [Complex64::default(); 2];
                for &(k2, w) in &by_row[k1] {
                    let e = root(k2 as i64 * j as i64) * w;
                    acc[0] += e * k2 as f64;
                    acc[1] -= e * k1 as f64;
                }
                inner[k1 * n + j] = acc;
            }
        }
        let mut values = vec![[0.0; 2]; n * n];
        for i in 0..n {
            for j in 0..n {
                let (mut a, mut b) = (0.0, 0.0);
                for k1 in 0..=m as usize {
                    let e = root(k1 as i64 * i as i64);
                    let s = inner[k1 * n + j];
                    a += (e * s[0]).im;
                    b += (e * s[1]).im;
                }
                values[i * n + j] = [-a, -b];
            }
        }
        values[0] = [0.0, 0.0];
        Ok(KernelTable {
            eps,
            cutoff,
            n,
            values,
        })
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        self.values[(i % self.n) * self.n + (j % self.n)]
    }

    /// Bilinear interpolation of the node values at `x` (any representative mod 1).
    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let n = self.n;
        let u = wrap(x[0]) * n as f64;
        let v = wrap(x[1]) * n as f64;
        let (i, j) = (u.floor() as usize % n, v.floor() as usize % n);
        let (fu, fv) = (u - u.floor(), v - v.floor());
        let (i1, j1) = ((i + 1) % n, (j + 1) % n);
        let a = self.values[i * n + j];
        let b = self.values[i1 * n + j];
        let c = self.values[i * n + j1];
        let d = self.values[i1 * n + j1];
        let w00 = (1.0 - fu) * (1.0 - fv);
        let w10 = fu * (1.0 - fv);
        let w01 = (1.0 - fu) * fv;
        let w11 = fu * fv;
        [
            w00 * a[0] + w10 * b[0] + w01 * c[0] + w11 * d[0],
            w00 * a[1] + w10 * b[1] + w01 * c[1] + w11 * d[1],
        ]
    }

    /// Largest interpolation error against the series at cell centres at distance
    /// at least `min_dist` from the singularity, sampled on a stride of cells.
    pub fn interpolation_error(&self, min_dist: f64, stride: usize) -> f64 {
        let series = KernelSeries::new(self.eps, self.cutoff).unwrap();
        let n = self.n;
        let mut err = 0.0f64;
        for i in (0..n).step_by(stride.max(1)) {
            for j in (0..n).step_by(stride.max(1)) {
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                let d = torus_delta(x, [0.0, 0.0]);
                if d[0].hypot(d[1]) < min_dist {
                    continue;
                }
                let e = series.eval(x).value;
                let t = self.eval(x);
                err = err.max((e[0] - t[0]).hypot(e[1] - t[1]));
            }
        }
        err
    }

    /// CSV rows `x1,x2,K1,K2` for every node.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,K1,K2\n");
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.node(i, j);
                s.push_str(&format!(
                    "{},{},{:.17e},{:.17e}\n",
                    i as f64 / self.n as f64,
                    j as f64 / self.n as f64,
                    v[0],
                    v[1]
                ));
            }
        }
        s
    }
}

/// How pairwise kernel values are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelBackend {
    Exact,
    Table,
    /// Table above 64 vortices, exact series at or below.
    Auto,
}

#[derive(Debug, Clone)]
pub enum Kernel {
    Series(Arc<KernelSeries>),
    Table(Arc<KernelTable>),
}

impl Kernel {
    pub fn series(eps: f64, cutoff: usize) -> Result<Kernel> {
        Ok(Kernel::Series(Arc::new(KernelSeries::new(eps, cutoff)?)))
    }

    pub fn table(eps: f64, cutoff: usize, n: usize) -> Result<Kernel> {
        Ok(Kernel::Table(Arc::new(KernelTable::new(eps, cutoff, n)?)))
    }

    pub fn for_vortices(
        backend: KernelBackend,
        eps: f64,
        cutoff: usize,
        grid: usize,
        n_vortices: usize,
    ) -> Result<Kernel> {
        match backend {
            KernelBackend::Exact => Kernel::series(eps, cutoff),
            KernelBackend::Table => Kernel::table(eps, cutoff, grid),
            KernelBackend::Auto if n_vortices > 64 => Kernel::table(eps, cutoff, grid),
            KernelBackend::Auto => Kernel::series(eps, cutoff),
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            Kernel::Series(s) => s.eps,
            Kernel::Table(t) => t.eps,
        }
    }

    pub fn cutoff(&self) -> usize {
        match self {
            Kernel::Series(s) => s.cutoff,
            Kernel::Table(t) => t.cutoff,
        }
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Kernel::Series(s) => s.eval(x).value,
            Kernel::Table(t) => t.eval(x),
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        match self {
            Kernel::Series(s) => serde_json::json!({
                "backend": "exact", "epsilon": s.eps, "kernel_cutoff": s.cutoff
            }),
            Kernel::Table(t) => serde_json::json!({
                "backend": "table", "epsilon": t.eps, "kernel_cutoff": t.cutoff,
                "kernel_grid": t.n, "interpolation": "bilinear",
                "interpolation_error_beyond_4_cells": t.interpolation_error(4.0 / t.n as f64, 7),
            }),
        }
    }
}

/// Cutoff bump `χ(z) = exp(1 - 1/(1 - (2|z|/r - 1)²))` on `r/2 < |z| < r`,
/// equal to 1 on `|z| <= r/2` and 0 on `|z| >= r`.
pub fn bump(z: f64, r: f64) -> f64 {
    let a = z.abs();
    if a <= 0.5 * r {
        1.0
    } else if a >= r {
        0.0
    } else {
        let s = 2.0 * a / r - 1.0;
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

pub const BUMP_RADIUS: f64 = 0.25;

/// `H_ε^φ(x, y) = 1_{x≠y} ½ K_ε(x - y)·(∇φ(x) - ∇φ(y))`.
pub fn h_eps_phi(x: [f64; 2], y: [f64; 2], phi: &TestFunction, kernel: &Kernel) -> Complex64 {
    if x == y {
        return Complex64::default();
    }
    let k = kernel.eval([x[0] - y[0], x[1] - y[1]]);
    let gx = phi.grad(x);
    let gy = phi.grad(y);
    ((gx[0] - gy[0]) * k[0] + (gx[1] - gy[1]) * k[1]) * 0.5
}

/// `H_n = H_ε^φ (1 - χ(n(x - y)))`, with the torus distance inside `χ`.
pub fn h_cutoff_approx(
    x: [f64; 2],
    y: [f64; 2],
    phi: &TestFunction,
    kernel: &Kernel,
    n: usize,
    r: f64,
) -> Complex64 {
    let d = torus_delta(x, y);
    let c = bump(n as f64 * d[0].hypot(d[1]), r);
    if c == 1.0 {
        return Complex64::default();
    }
    h_eps_phi(x, y, phi, kernel) * (1.0 - c)
}

/// `|H(x,y)| |x-y|^{1-ε} / ‖∇²φ‖_∞` maximized over the supplied pairs.
pub fn h_bound_constant(
    pairs: &[([f64; 2], [f64; 2])],
    phi: &TestFunction,
    kernel: &Kernel,
    hess_grid: usize,
) -> f64 {
    let hs = phi.hessian_sup(hess_grid);
    let eps = kernel.eps();
    pairs
        .iter()
        .map(|(x, y)| {
            let d = torus_delta(*x, *y);
            h_eps_phi(*x, *y, phi, kernel).norm() * d[0].hypot(d[1]).powf(1.0 - eps) / hs
        })
        .fold(0.0, f64::max)
}

/// `‖H·g‖²_{L²(T²×T²)}` for a radial weight `g(x - y)`, by orthogonality in `x`:
/// `π² Σ_l |φ̂_l|² ∫ |l·K(z)|² |1 - e_{-l}(z)|² g(z)² dz` on the table nodes.
/// Exact for unit weight when `n > 2 (M_K + |l|)`.
pub fn h_weighted_l2_norm2(
    phi: &TestFunction,
    table: &KernelTable,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let n = table.n;
    let h2 = 1.0 / (n * n) as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = [i as f64 / n as f64, j as f64 / n as f64];
            let d = torus_delta(z, [0.0, 0.0]);
            let g = weight(d[0].hypot(d[1]));
            if g == 0.0 {
                continue;
            }
            let kz = table.node(i, j);
            for (l, c) in phi.terms() {
                let lk = dot(l.as_vec(), kz);
                let one = Complex64::new(1.0, 0.0) - l.neg().e(z);
                total += c.norm_sqr() * lk * lk * one.norm_sqr() * g * g;
            }
        }
    }
    PI * PI * total * h2
}

pub fn h_l2_norm2(phi: &TestFunction, table: &KernelTable) -> f64 {
    h_weighted_l2_norm2(phi, table, |_| 1.0)
}

/// `‖H_n - H_{n'}‖²`, i.e. the weight `χ(n' z) - χ(n z)`.
pub fn h_cutoff_gap_l2(
    phi: &TestFunction,
    table: &KernelTable,
    n: usize,
    n2: usize,
    r: f64,
) -> f64 {
    h_weighted_l2_norm2(phi, table, |d| {
        bump(n2 as f64 * d, r) - bump(n as f64 * d, r)
    })
}

/// `∫∫ |H|^{q}` by a tensor sum over table nodes (cost `n⁴`).
pub fn h_lq_norm(phi: &TestFunction, table: &KernelTable, q: f64) -> f64 {
    let n = table.n;
    let pts: Vec<[f64; 2]> = (0..n * n)
        .map(|t| [(t / n) as f64 / n as f64, (t % n) as f64 / n as f64])
        .collect();
    let grads: Vec<[Complex64; 2]> = pts.iter().map(|&x| phi.grad(x)).collect();
    let mut total = 0.0;
    for a in 0..n * n {
        let (ia, ja) = (a / n, a % n);
        for b in 0..n * n {
            if a == b {
                continue;
            }
            let (ib, jb) = (b / n, b % n);
            let k = table.node((ia + n - ib) % n, (ja + n - jb) % n);
            let g = [grads[a][0] - grads[b][0], grads[a][1] - grads[b][1]];
            total += ((g[0] * k[0] + g[1] * k[1]) * 0.5).norm().powf(q);
        }
    }
    (total / ((n * n) as f64).powi(2)).powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::Mode;

    #[test]
    fn odd_and_real() {
        let s = KernelSeries::new(0.7, 12).unwrap();
        let x = [0.137, 0.291];
        let a = s.eval(x).value;
        let b = s.eval([-x[0], -x[1]]).value;
        assert_eq!(a[0], -b[0]);
        assert_eq!(a[1], -b[1]);
        let c = s.eval_complex(x);
        assert!(c[0].im.abs() < 1e-13 && c[1].im.abs() < 1e-13);
        assert!((c[0].re - a[0]).abs() < 1e-12 && (c[1].re - a[1]).abs() < 1e-12);
        assert!(s.eval([1.0, 0.0]).singular);
    }

    #[test]
    fn table_nodes_are_exact() {
        let s = KernelSeries::new(1.0, 6).unwrap();
        let t = KernelTable::new(1.0, 6, 20).unwrap();
        for (i, j) in [(1, 0), (3, 7), (19, 4), (10, 10)] {
            let e = s.eval([i as f64 / 20.0, j as f64 / 20.0]).value;
            let v = t.node(i, j);
            assert!((e[0] - v[0]).abs() < 1e-12 && (e[1] - v[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.1, 0.25), 1.0);
        assert_eq!(bump(0.25, 0.25), 0.0);
        let v = bump(0.2, 0.25);
        assert!(v > 0.0 && v < 1.0);
        assert!(bump(0.126, 0.25) > bump(0.2, 0.25));
    }

    #[test]
    fn h_symmetric_and_zero_on_diagonal() {
        let k = Kernel::series(0.5, 16).unwrap();
        let phi = TestFunction::cos(Mode::of(1, 2));
        let (x, y) = ([0.1, 0.8], [0.45, 0.3]);
        assert_eq!(h_eps_phi(x, x, &phi, &k), Complex64::default());
        let a = h_eps_phi(x, y, &phi, &k);
        let b = h_eps_phi(y, x, &phi, &k);
        assert!((a - b).norm() < 1e-14);
        assert_eq!(
            h_cutoff_approx(x, [0.1, 0.81], &phi, &k, 2, BUMP_RADIUS),
            Complex64::default()
        );
        assert_eq!(h_cutoff_approx(x, y, &phi, &k, 4, BUMP_RADIUS), a);
    }
}
