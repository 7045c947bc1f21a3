use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::modes::{modes_in_ball, Mode};

/// Number of distinct orderings of a sorted tuple (multinomial coefficient).
pub fn orbit_size(key: &[Mode]) -> f64 {
    let n = key.len();
    let mut r = factorial(n);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && key[j] == key[i] {
            j += 1;
        }
        r /= factorial(j - i);
        i = j;
    }
    r
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All sorted `n`-tuples (multisets) over `modes`.
pub fn tuples(modes: &[Mode], n: usize) -> Vec<Vec<Mode>> {
    let mut sorted = modes.to_vec();
    sorted.sort();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(s: &[Mode], start: usize, n: usize, cur: &mut Vec<Mode>, out: &mut Vec<Vec<Mode>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..s.len() {
            cur.push(s[i]);
            rec(s, i, n, cur, out);
            cur.pop();
        }
    }
    rec(&sorted, 0, n, &mut cur, &mut out);
    out
}

/// `−L₀` eigenvalue `4π² Σ|k_i|²` of a tuple.
pub(crate) fn l0_eigen(key: &[Mode]) -> f64 {
    4.0 * PI * PI * key.iter().map(|k| k.norm2() as f64).sum::<f64>()
}

/// Chaos coefficients `φ̂_n(k_{1:n})`, one entry per sorted tuple. Order 0 holds
/// the mean (key `[]`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChaosVector {
    /// Declared truncation; entries are not required to respect it until
    /// [`ChaosVector::truncated`] is applied.
    pub n_max: usize,
    pub m_modes: usize,
    orders: BTreeMap<usize, BTreeMap<Vec<Mode>, Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosEntry {
    pub order: usize,
    pub modes: Vec<[i32; 2]>,
    pub re: f64,
    pub im: f64,
}

#[derive(Serialize, Deserialize)]
struct ChaosJson {
    n_max: usize,
    m_modes: usize,
    entries: Vec<ChaosEntry>,
}

impl Serialize for ChaosVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChaosJson {
            n_max: self.n_max,
            m_modes: self.m_modes,
            entries: self.entries(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChaosVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ChaosJson::deserialize(d)?;
        let mut v = ChaosVector::new(j.n_max, j.m_modes);
        for e in j.entries {
            let key = e
                .modes
                .iter()
                .map(|k| Mode::new(k[0], k[1]))
                .collect::<Result<Vec<_>>>()
                .map_err(serde::de::Error::custom)?;
            if key.len() != e.order {
                return Err(serde::de::Error::custom(
                    "order does not match tuple length",
                ));
            }
            v.add(&key, Complex64::new(e.re, e.im));
        }
        Ok(v)
    }
}

impl ChaosVector {
    pub fn new(n_max: usize, m_modes: usize) -> ChaosVector {
        ChaosVector {
            n_max,
            m_modes,
            orders: BTreeMap::new(),
        }
    }

    pub fn constant(n_max: usize, m_modes: usize, c: Complex64) -> ChaosVector {
        let mut v = ChaosVector::new(n_max, m_modes);
        v.add(&[], c);
        v
    }

    /// Coefficient at any (not necessarily sorted) tuple.
    pub fn get(&self, key: &[Mode]) -> Complex64 {
        let mut k = key.to_vec();
        k.sort();
        self.get_sorted(&k)
    }

    pub(crate) fn get_sorted(&self, key: &[Mode]) -> Complex64 {
        self.orders
            .get(&key.len())
            .and_then(|o| o.get(key))
            .copied()
            .unwrap_or_default()
    }

    pub fn set(&mut self, key: &[Mode], c: Complex64) {
        let mut k = key.to_vec();
        k.sort();
        let o = self.orders.entry(k.len()).or_default();
        if c == Complex64::default() {
            o.remove(&k);
        } else {
            o.insert(k, c);
        }
    }

    pub fn add(&mut self, key: &[Mode], c: Complex64) {
        let v = self.get(key) + c;
        self.set(key, v);
    }

    pub fn orders(&self) -> impl Iterator<Item = usize> + '_ {
        self.orders
            .iter()
            .filter(|(_, o)| !o.is_empty())
            .map(|(n, _)| *n)
    }

    pub fn max_order(&self) -> usize {
        self.orders().max().unwrap_or(0)
    }

    pub fn order(&self, n: usize) -> impl Iterator<Item = (&Vec<Mode>, &Complex64)> {
        self.orders.get(&n).into_iter().flat_map(|o| o.iter())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Mode>, &Complex64)> {
        self.orders.values().flat_map(|o| o.iter())
    }

    pub fn len(&self) -> usize {
        self.orders.values().map(|o| o.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<ChaosEntry> {
        self.iter()
            .map(|(k, c)| ChaosEntry {
                order: k.len(),
                modes: k.iter().map(|m| [m.k1, m.k2]).collect(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    /// The value of the symmetric tensor at every full (unsorted) tuple, as a
    /// check that canonical storage reads back permutation-invariantly.
    pub fn symmetric_readback_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in self.iter() {
            let mut p = k.clone();
            p.reverse();
            worst = worst.max((self.get(&p) - c).norm());
            if p.len() > 1 {
                p.rotate_left(1);
                worst = worst.max((self.get(&p) - c).norm());
            }
        }
        worst
    }

    /// Fock inner product `Σ_n n! Σ_{k} conj(φ̂) ψ̂` (conjugate-linear in `self`).
    pub fn inner(&self, other: &ChaosVector) -> Complex64 {
        let mut s = Complex64::default();
        for (k, c) in self.iter() {
            let d = other.get_sorted(k);
            if d != Complex64::default() {
                s += c.conj() * d * (factorial(k.len()) * orbit_size(k));
            }
        }
        s
    }

    pub fn norm2(&self) -> f64 {
        self.iter()
            .map(|(k, c)| c.norm_sqr() * factorial(k.len()) * orbit_size(k))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn map_entries(&self, f: impl Fn(&[Mode], Complex64) -> Complex64) -> ChaosVector {
        let mut v = ChaosVector::new(self.n_max, self.m_modes);
        for (k, c) in self.iter() {
            let d = f(k, *c);
            if d != Complex64::default() {
                v.orders.entry(k.len()).or_default().insert(k.clone(), d);
            }
        }
        v
    }

    pub fn scale(&self, s: Complex64) -> ChaosVector {
        self.map_entries(|_, c| c * s)
    }

    pub fn add_vec(&self, other: &ChaosVector) -> ChaosVector {
        let mut v = self.clone();
        v.n_max = v.n_max.max(other.n_max);
        v.m_modes = v.m_modes.max(other.m_modes);
        for (k, c) in other.iter() {
            let o = v.orders.entry(k.len()).or_default();
            let e = o.entry(k.clone()).or_default();
            *e += c;
        }
        v
    }

    pub fn sub_vec(&self, other: &ChaosVector) -> ChaosVector {
        self.add_vec(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Projection on orders `1..=n_max` (plus order 0) with all modes `|k| <= m_modes`;
    /// returns the projected vector and the Fock mass removed.
    pub fn truncated(&self, n_max: usize, m_modes: usize) -> (ChaosVector, f64) {
        let mut v = ChaosVector::new(n_max, m_modes);
        let mut overflow = 0.0;
        for (k, c) in self.iter() {
            if k.len() <= n_max && k.iter().all(|m| m.within(m_modes)) {
                v.orders.entry(k.len()).or_default().insert(k.clone(), *c);
            } else {
                overflow += c.norm_sqr() * factorial(k.len()) * orbit_size(k);
            }
        }
        (v, overflow)
    }

    pub fn zero_mean(&self) -> ChaosVector {
        let mut v = self.clone();
        v.orders.remove(&0);
        v
    }

    /// `φ̂(−k) = conj φ̂(k)` residual (zero for real functionals).
    pub fn reality_residual(&self) -> f64 {
        self.iter()
            .map(|(k, c)| {
                let neg: Vec<Mode> = k.iter().map(|m| m.neg()).collect();
                (self.get(&neg) - c.conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `L₀φ`.
    pub fn apply_l0(&self) -> ChaosVector {
        self.map_entries(|k, c| c * (-l0_eigen(k)))
    }

    /// `(−L₀)^γ φ`; order-0 content only admits `γ >= 0`.
    pub fn neg_l0_pow(&self, gamma: f64) -> Result<ChaosVector> {
        if gamma < 0.0 && self.get_sorted(&[]) != Complex64::default() {
            return Err(Error::Precondition(
                "(-L0)^gamma with gamma < 0 on a nonzero mean".into(),
            ));
        }
        Ok(self.map_entries(|k, c| {
            if k.is_empty() {
                if gamma == 0.0 {
                    c
                } else {
                    Complex64::default()
                }
            } else {
                c * l0_eigen(k).powf(gamma)
            }
        }))
    }

    /// Spectral multiplier `f(N)` on the chaos order.
    pub fn number_multiplier(&self, f: impl Fn(usize) -> f64) -> ChaosVector {
        self.map_entries(|k, c| c * f(k.len()))
    }

    /// `1_{|L₀| ≥ M(N)}` (`above = true`) or its complement.
    pub fn l0_indicator(&self, m_of_n: impl Fn(usize) -> f64, above: bool) -> ChaosVector {
        self.map_entries(|k, c| {
            let hit = l0_eigen(k) >= m_of_n(k.len());
            if hit == above {
                c
            } else {
                Complex64::default()
            }
        })
    }

    /// Random vector on orders `1..=n_max` and modes `|k| <= m_modes`, optionally
    /// conjugate-symmetric (real functional).
    pub fn random<R: rand::Rng + ?Sized>(
        rng: &mut R,
        n_max: usize,
        m_modes: usize,
        real: bool,
    ) -> ChaosVector {
        use rand_distr::StandardNormal;
        let modes = modes_in_ball(m_modes);
        let mut v = ChaosVector::new(n_max, m_modes);
        for n in 1..=n_max {
            for key in tuples(&modes, n) {
                let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                    / (factorial(n) * orbit_size(&key)).sqrt();
                if real {
                    let mut neg: Vec<Mode> = key.iter().map(|m| m.neg()).collect();
                    neg.sort();
                    if neg < key {
                        continue;
                    }
                    if neg == key {
                        v.set(&key, Complex64::new(c.re, 0.0));
                    } else {
                        v.set(&key, c);
                        v.set(&neg, c.conj());
                    }
                } else {
                    v.set(&key, c);
                }
            }
        }
        v
    }
}

/// A chaos-order weight `w: N → R₊` given by its values on `0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub values: Vec<f64>,
}

impl WeightSpec {
    pub fn new(values: Vec<f64>) -> Result<WeightSpec> {
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("weight", "values must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("weight", "must be increasing"));
        }
        Ok(WeightSpec { values })
    }

    pub fn unit(n: usize) -> WeightSpec {
        WeightSpec {
            values: vec![1.0; n + 1],
        }
    }

    /// `w(x) = (1+x)^p` on `0..=n`.
    pub fn power(p: f64, n: usize) -> Result<WeightSpec> {
        WeightSpec::new((0..=n).map(|x| (1.0 + x as f64).powf(p)).collect())
    }

    /// `w(x)`; values past the table extend with the last ratio `|w|`.
    pub fn w(&self, x: usize) -> f64 {
        let n = self.values.len() - 1;
        if x <= n {
            self.values[x]
        } else {
            self.values[n] * self.bar().powi((x - n) as i32)
        }
    }

    /// Smallest `C` with `w(x) <= C w(x−1)`.
    pub fn bar(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(1.0, f64::max)
    }

    /// `α(γ) = (4/ε)(γ+½)+1`.
    pub fn alpha(gamma: f64, eps: f64) -> f64 {
        4.0 / eps * (gamma + 0.5) + 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn orbit_and_tuple_counts() {
        let a = Mode::of(1, 0);
        let b = Mode::of(0, 1);
        assert_eq!(orbit_size(&[a, a, b]), 3.0);
        assert_eq!(orbit_size(&[a, b]), 2.0);
        assert_eq!(orbit_size(&[]), 1.0);
        let modes = modes_in_ball(1);
        assert_eq!(tuples(&modes, 2).len(), 10);
        assert_eq!(tuples(&modes, 3).len(), 20);
        // Σ over sorted tuples of orbit sizes = 4^n
        let tot: f64 = tuples(&modes, 3).iter().map(|k| orbit_size(k)).sum();
        assert_eq!(tot, 64.0);
    }

    #[test]
    fn l0_and_powers() {
        let mut v = ChaosVector::new(1, 1);
        v.set(&[Mode::of(1, 0)], Complex64::new(1.0, 0.0));
        let w = v.apply_l0();
        assert!((w.get(&[Mode::of(1, 0)]).re + 4.0 * PI * PI).abs() < 1e-12);
        let h = v.neg_l0_pow(0.5).unwrap().neg_l0_pow(0.5).unwrap();
        assert_eq!(h, w.scale(Complex64::new(-1.0, 0.0)));
        assert!(ChaosVector::new(1, 1).apply_l0().is_empty());
        assert!(ChaosVector::constant(1, 1, Complex64::new(1.0, 0.0))
            .neg_l0_pow(-0.5)
            .is_err());
    }

    #[test]
    fn json_roundtrip_and_symmetry() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let v = ChaosVector::random(&mut rng, 3, 1, true);
        assert!(v.reality_residual() < 1e-15);
        assert_eq!(v.symmetric_readback_residual(), 0.0);
        let s = serde_json::to_string(&v).unwrap();
        let back: ChaosVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!((v.inner(&v).re - v.norm2()).abs() < 1e-12);
    }

    #[test]
    fn weights() {
        let w = WeightSpec::power(2.0, 4).unwrap();
        assert!((w.bar() - 4.0).abs() < 1e-12);
        assert!(WeightSpec::new(vec![2.0, 1.0]).is_err());
        assert!((WeightSpec::alpha(0.0, 1.0) - 3.0).abs() < 1e-15);
    }
}
