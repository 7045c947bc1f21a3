use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use super::vector::{factorial, orbit_size, tuples, ChaosVector};
use crate::error::{invalid, Error, Result};
use crate::kernel::check_eps;
use crate::modes::{modes_in_ball, Mode};

/// Pair coefficient `((2π)^{1−ε}/2)(a^⊥·b/|a|^{1+ε} + b^⊥·a/|b|^{1+ε})`, written in
/// the factored form `(a^⊥·b)(|a|^{−1−ε} − |b|^{−1−ε})` so `|a| = |b|` gives exactly 0.
pub fn beta(a: Mode, b: Mode, eps: f64) -> f64 {
    let cross = (a.k2 as f64) * (b.k1 as f64) - (a.k1 as f64) * (b.k2 as f64);
    if cross == 0.0 || a.norm2() == b.norm2() {
        return 0.0;
    }
    let c = (2.0 * PI).powf(1.0 - eps) / 2.0;
    let p = -(1.0 + eps) / 2.0;
    c * cross * ((a.norm2() as f64).powf(p) - (b.norm2() as f64).powf(p))
}

fn sorted_with(rest: impl IntoIterator<Item = Mode>, extra: &[Mode]) -> Vec<Mode> {
    let mut v: Vec<Mode> = rest.into_iter().chain(extra.iter().copied()).collect();
    v.sort();
    v
}

fn without<'a>(key: &'a [Mode], skip: &[usize]) -> impl Iterator<Item = Mode> + 'a {
    let skip = skip.to_vec();
    key.iter()
        .enumerate()
        .filter(move |(i, _)| !skip.contains(i))
        .map(|(_, k)| *k)
}

fn gm_plus_order(
    phi: &ChaosVector,
    r: usize,
    ball: &[Mode],
    m: usize,
    eps: f64,
    out: &mut ChaosVector,
) {
    // scatter candidate output tuples
    let mut cand: BTreeSet<Vec<Mode>> = BTreeSet::new();
    for (key, _) in phi.order(r) {
        for j in 0..r {
            let mu = key[j];
            if !mu.within(m) {
                continue;
            }
            for &a in ball {
                if let Some(b) = mu.sub(a) {
                    if b.within(m) {
                        cand.insert(sorted_with(without(key, &[j]), &[a, b]));
                    }
                }
            }
        }
    }
    let n = r + 1;
    for lam in cand {
        let mut acc = Complex64::default();
        for i in 0..n {
            if !lam[i].within(m) {
                continue;
            }
            for j in i + 1..n {
                if !lam[j].within(m) {
                    continue;
                }
                let s = match lam[i].add(lam[j]) {
                    Some(s) if s.within(m) => s,
                    _ => continue,
                };
                let bt = beta(lam[i], lam[j], eps);
                if bt == 0.0 {
                    continue;
                }
                acc += phi.get_sorted(&sorted_with(without(&lam, &[i, j]), &[s])) * bt;
            }
        }
        if acc != Complex64::default() {
            out.add(&lam, acc * (2.0 / n as f64));
        }
    }
}

fn gm_minus_order(
    phi: &ChaosVector,
    r: usize,
    ball: &[Mode],
    m: usize,
    eps: f64,
    out: &mut ChaosVector,
) {
    let mut cand: BTreeSet<Vec<Mode>> = BTreeSet::new();
    for (key, _) in phi.order(r) {
        for i in 0..r {
            if !key[i].within(m) {
                continue;
            }
            for j in i + 1..r {
                if !key[j].within(m) {
                    continue;
                }
                if let Some(s) = key[i].add(key[j]) {
                    if s.within(m) {
                        cand.insert(sorted_with(without(key, &[i, j]), &[s]));
                    }
                }
            }
        }
    }
    let n = r - 1;
    for lam in cand {
        let mut acc = Complex64::default();
        for i in 0..n {
            if !lam[i].within(m) {
                continue;
            }
            for &p in ball {
                let q = match lam[i].sub(p) {
                    Some(q) if q.within(m) => q,
                    _ => continue,
                };
                let bt = beta(p, q, eps);
                if bt == 0.0 {
                    continue;
                }
                acc += phi.get_sorted(&sorted_with(without(&lam, &[i]), &[p, q])) * bt;
            }
        }
        if acc != Complex64::default() {
            out.add(&lam, acc * (-((n + 1) as f64)));
        }
    }
}

/// `G^m_+ φ`, raising each order by one (not truncated; see [`ChaosVector::truncated`]).
pub fn apply_gm_plus(phi: &ChaosVector, m: usize, eps: f64) -> Result<ChaosVector> {
    check_eps(eps)?;
    let ball = modes_in_ball(m);
    let mut out = ChaosVector::new(phi.n_max + 1, phi.m_modes.max(m));
    for r in phi.orders().filter(|r| *r >= 1).collect::<Vec<_>>() {
        gm_plus_order(phi, r, &ball, m, eps, &mut out);
    }
    Ok(out)
}

/// `G^m_− φ`, lowering each order `>= 2` by one.
pub fn apply_gm_minus(phi: &ChaosVector, m: usize, eps: f64) -> Result<ChaosVector> {
    check_eps(eps)?;
    let ball = modes_in_ball(m);
    let mut out = ChaosVector::new(phi.n_max, phi.m_modes);
    for r in phi.orders().filter(|r| *r >= 2).collect::<Vec<_>>() {
        gm_minus_order(phi, r, &ball, m, eps, &mut out);
    }
    Ok(out)
}

pub fn apply_gm(phi: &ChaosVector, m: usize, eps: f64) -> Result<ChaosVector> {
    Ok(apply_gm_plus(phi, m, eps)?.add_vec(&apply_gm_minus(phi, m, eps)?))
}

/// Dense operator between two tuple bases.
#[derive(Debug, Clone)]
pub struct DenseOp {
    pub row_keys: Vec<Vec<Mode>>,
    pub col_keys: Vec<Vec<Mode>>,
    /// Row-major.
    pub data: Vec<Complex64>,
}

impl DenseOp {
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.col_keys.len() + c]
    }
}

/// Number of sorted `n`-tuples over `k` symbols, saturating.
fn multiset_count(k: usize, n: usize) -> usize {
    let mut r: usize = 1;
    for i in 0..n {
        r = r.saturating_mul(k + i) / (i + 1);
    }
    r
}

const DENSE_LIMIT: usize = 20_000_000;

fn dense(
    from: usize,
    to: usize,
    m_modes: usize,
    op: impl Fn(&ChaosVector) -> Result<ChaosVector>,
) -> Result<DenseOp> {
    let modes = modes_in_ball(m_modes);
    let (rows, cols) = (
        multiset_count(modes.len(), to),
        multiset_count(modes.len(), from),
    );
    if rows.saturating_mul(cols) > DENSE_LIMIT {
        return Err(Error::TooLarge { rows, cols });
    }
    let col_keys = tuples(&modes, from);
    let row_keys = tuples(&modes, to);
    let index: HashMap<&Vec<Mode>, usize> =
        row_keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut data = vec![Complex64::default(); rows * cols];
    for (c, key) in col_keys.iter().enumerate() {
        let mut e = ChaosVector::new(from.max(to), m_modes);
        e.set(key, Complex64::new(1.0, 0.0));
        for (k, v) in op(&e)?.order(to) {
            if let Some(&r) = index.get(k) {
                data[r * cols + c] = *v;
            }
        }
    }
    Ok(DenseOp {
        row_keys,
        col_keys,
        data,
    })
}

/// Matrix of `G^m_+` from order `n` to `n+1` over modes `|k| <= m_modes`.
pub fn dense_gm_plus(n: usize, m: usize, eps: f64, m_modes: usize) -> Result<DenseOp> {
    dense(n, n + 1, m_modes, |v| apply_gm_plus(v, m, eps))
}

/// Matrix of `G^m_−` from order `n+1` to `n`.
pub fn dense_gm_minus(n: usize, m: usize, eps: f64, m_modes: usize) -> Result<DenseOp> {
    dense(n + 1, n, m_modes, |v| apply_gm_minus(v, m, eps))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjointReport {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub m_modes: usize,
    pub rows: usize,
    pub cols: usize,
    /// `max |(G_+)* + G_−|` in the `n!`-weighted inner product.
    pub residual: f64,
    pub max_entry: f64,
}

pub fn adjoint_check(n: usize, m: usize, eps: f64, m_modes: usize) -> Result<AdjointReport> {
    if n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    let a = dense_gm_plus(n, m, eps, m_modes)?;
    let d = dense_gm_minus(n, m, eps, m_modes)?;
    let gn: Vec<f64> = a
        .col_keys
        .iter()
        .map(|k| factorial(n) * orbit_size(k))
        .collect();
    let gn1: Vec<f64> = a
        .row_keys
        .iter()
        .map(|k| factorial(n + 1) * orbit_size(k))
        .collect();
    let mut residual: f64 = 0.0;
    let mut max_entry: f64 = 0.0;
    for (c, gc) in gn.iter().enumerate() {
        for (r, gr) in gn1.iter().enumerate() {
            let adj = a.at(r, c).conj() * (gr / gc);
            residual = residual.max((adj + d.at(c, r)).norm());
            max_entry = max_entry.max(d.at(c, r).norm());
        }
    }
    Ok(AdjointReport {
        n,
        m,
        eps,
        m_modes,
        rows: a.row_keys.len(),
        cols: a.col_keys.len(),
        residual,
        max_entry,
    })
}

/// `M(n) = L(n+1)^{4/ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub l: f64,
    pub eps: f64,
}

impl CutoffSpec {
    pub fn new(l: f64, eps: f64) -> Result<CutoffSpec> {
        check_eps(eps)?;
        if !(l >= 1.0) || !l.is_finite() {
            return Err(invalid("cutoff_L", "must be >= 1"));
        }
        Ok(CutoffSpec { l, eps })
    }

    pub fn m_of(&self, n: usize) -> f64 {
        self.l * ((n + 1) as f64).powf(4.0 / self.eps)
    }
}

/// `(G^{m,≻}φ, G^{m,≺}φ)`, the indicator acting on the output tuple.
pub fn cutoff_split(
    phi: &ChaosVector,
    cutoff: &CutoffSpec,
    m: usize,
    eps: f64,
) -> Result<(ChaosVector, ChaosVector)> {
    let g = apply_gm(phi, m, eps)?;
    let hi = g.l0_indicator(|n| cutoff.m_of(n), true);
    let lo = g.l0_indicator(|n| cutoff.m_of(n), false);
    Ok((hi, lo))
}
