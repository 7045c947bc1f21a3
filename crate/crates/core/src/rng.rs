//! Reproducible per-replica random streams.
//!
//! A stream is keyed by `(root, replica, role)`; keys are mixed with splitmix64 into
//! a ChaCha8 seed so distinct keys give statistically independent streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a stream within one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamRole {
    Initial = 1,
    Intensities = 2,
    Noise = 3,
    Bridge = 4,
    Field = 5,
    Permutation = 6,
    Aux = 7,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, replica: u64, role: StreamRole) -> u64 {
    let a = splitmix64(root);
    let b = splitmix64(a ^ replica.wrapping_mul(0xd1b5_4a32_d192_ed03));
    splitmix64(b ^ (role as u64).wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
}

pub fn stream(root: u64, replica: u64, role: StreamRole) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, replica, role))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn distinct_and_reproducible() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..200 {
            for role in [StreamRole::Initial, StreamRole::Noise, StreamRole::Bridge] {
                assert!(seen.insert(derive_seed(7, r, role)));
            }
        }
        let a: u64 = stream(1, 2, StreamRole::Noise).random();
        let b: u64 = stream(1, 2, StreamRole::Noise).random();
        assert_eq!(a, b);
    }
}
