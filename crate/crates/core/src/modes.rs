//! Integer frequencies on the torus and the divergence-free basis vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A non-zero integer frequency `k = (k1, k2)`.
/// Serialized as `[k1, k2]`; `[0, 0]` is rejected on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[i32; 2]", into = "[i32; 2]")]
pub struct Mode {
    pub k1: i32,
    pub k2: i32,
}

impl From<Mode> for [i32; 2] {
    fn from(k: Mode) -> [i32; 2] {
        [k.k1, k.k2]
    }
}

impl TryFrom<[i32; 2]> for Mode {
    type Error = Error;
    fn try_from(v: [i32; 2]) -> Result<Mode> {
        Mode::new(v[0], v[1])
    }
}

/// Half-lattice sign: `+1` iff `k1 > 0`, or `k1 == 0 && k2 > 0`.
pub fn canonical_partition(k1: i32, k2: i32) -> Result<i8> {
    if k1 == 0 && k2 == 0 {
        return Err(Error::ZeroMode);
    }
    Ok(if k1 > 0 || (k1 == 0 && k2 > 0) { 1 } else { -1 })
}

impl Mode {
    pub fn new(k1: i32, k2: i32) -> Result<Mode> {
        canonical_partition(k1, k2)?;
        Ok(Mode { k1, k2 })
    }

    /// Panics on the zero mode; for literals known to be valid.
    pub fn of(k1: i32, k2: i32) -> Mode {
        Mode::new(k1, k2).expect("zero mode")
    }

    pub fn sign(self) -> i8 {
        if self.k1 > 0 || (self.k1 == 0 && self.k2 > 0) {
            1
        } else {
            -1
        }
    }

    pub fn is_positive(self) -> bool {
        self.sign() > 0
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Mode {
        Mode {
            k1: -self.k1,
            k2: -self.k2,
        }
    }

    /// `self + other`, or `None` when the sum is the zero mode.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Mode) -> Option<Mode> {
        let (a, b) = (self.k1 + other.k1, self.k2 + other.k2);
        if a == 0 && b == 0 {
            None
        } else {
            Some(Mode { k1: a, k2: b })
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Mode) -> Option<Mode> {
        self.add(other.neg())
    }

    pub fn norm2(self) -> i64 {
        let (a, b) = (self.k1 as i64, self.k2 as i64);
        a * a + b * b
    }

    pub fn norm(self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    pub fn as_vec(self) -> [f64; 2] {
        [self.k1 as f64, self.k2 as f64]
    }

    /// `k^⊥ = (k2, -k1)`.
    pub fn perp(self) -> [f64; 2] {
        [self.k2 as f64, -(self.k1 as f64)]
    }

    /// `a_k = sign(k) k^⊥ / |k|`; even in `k`.
    pub fn a(self) -> [f64; 2] {
        let s = self.sign() as f64 / self.norm();
        let p = self.perp();
        [s * p[0], s * p[1]]
    }

    pub fn within(self, m: usize) -> bool {
        self.norm2() <= (m * m) as i64
    }

    /// `e_k(x) = exp(2πi k·x)`.
    pub fn e(self, x: [f64; 2]) -> Complex64 {
        Complex64::from_polar(
            1.0,
            2.0 * PI * (self.k1 as f64 * x[0] + self.k2 as f64 * x[1]),
        )
    }

    /// `σ_k(x) = a_k e_k(x)`.
    pub fn sigma(self, x: [f64; 2]) -> [Complex64; 2] {
        let a = self.a();
        let e = self.e(x);
        [e * a[0], e * a[1]]
    }

    /// Jacobian `∂_j σ_k^i(x) = 2πi k_j σ_k^i(x)`, indexed `[i][j]`.
    pub fn sigma_grad(self, x: [f64; 2]) -> [[Complex64; 2]; 2] {
        let s = self.sigma(x);
        let k = self.as_vec();
        let f = Complex64::new(0.0, 2.0 * PI);
        [
            [f * k[0] * s[0], f * k[1] * s[0]],
            [f * k[0] * s[1], f * k[1] * s[1]],
        ]
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// All modes with `0 < |k| <= m`, ordered by `(|k|², k1, k2)`.
pub fn modes_in_ball(m: usize) -> Vec<Mode> {
    let r = m as i32;
    let mut out = Vec::new();
    for k1 in -r..=r {
        for k2 in -r..=r {
            if (k1, k2) != (0, 0) && (k1 * k1 + k2 * k2) as usize <= m * m {
                out.push(Mode { k1, k2 });
            }
        }
    }
    out.sort_by_key(|k| (k.norm2(), k.k1, k.k2));
    out
}

/// Modes of `modes_in_ball(m)` lying in the positive half-lattice.
pub fn half_modes_in_ball(m: usize) -> Vec<Mode> {
    modes_in_ball(m)
        .into_iter()
        .filter(|k| k.is_positive())
        .collect()
}

/// Minimum-image displacement `x - y` on the unit torus, components in `[-1/2, 1/2)`.
pub fn torus_delta(x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    let w = |d: f64| d - (d + 0.5).floor();
    [w(x[0] - y[0]), w(x[1] - y[1])]
}

pub fn torus_dist(x: [f64; 2], y: [f64; 2]) -> f64 {
    let d = torus_delta(x, y);
    d[0].hypot(d[1])
}

pub fn wrap(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        assert_eq!(canonical_partition(1, 0).unwrap(), 1);
        assert_eq!(canonical_partition(-1, 0).unwrap(), -1);
        assert_eq!(canonical_partition(0, -3).unwrap(), -1);
        assert_eq!(canonical_partition(0, 0), Err(Error::ZeroMode));
    }

    #[test]
    fn basis_vector_examples() {
        let k = Mode::of(1, 0);
        assert_eq!(k.a(), [0.0, -1.0]);
        let s = k.sigma([0.0, 0.0]);
        assert!((s[0] - Complex64::new(0.0, 0.0)).norm() < 1e-15);
        assert!((s[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(dot(Mode::of(0, 1).a(), Mode::of(0, 1).perp()), 1.0);
    }

    #[test]
    fn ball_counts() {
        assert_eq!(modes_in_ball(1).len(), 4);
        assert_eq!(modes_in_ball(2).len(), 12);
        assert_eq!(half_modes_in_ball(2).len(), 6);
    }

    #[test]
    fn min_image() {
        let d = torus_delta([0.95, 0.1], [0.05, 0.9]);
        assert!((d[0] + 0.1).abs() < 1e-12 && (d[1] - 0.2).abs() < 1e-12);
        assert_eq!(wrap(-1e-18), 0.0);
    }
}
