//! Seed derivation and keyed random variates.
//!
//! Everything random in the crate is reachable from a single `u64` seed. Keys
//! are folded through the SplitMix64 finalizer, which gives well-mixed,
//! independent-looking 64-bit words for every distinct key tuple. The coupled
//! engines use this to read variate `ordinal` of entity `id` in step `step`
//! without storing anything.

use libm::log;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a tuple of words into one well-mixed word. Order matters.
#[inline]
pub fn derive(parts: &[u64]) -> u64 {
    let mut acc = 0x6a09_e667_f3bc_c908u64;
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

/// Maps a word to the open interval (0, 1) on a grid of spacing 2^-52.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Unit-rate exponential variate from a word; always strictly positive.
#[inline]
pub fn unit_exponential(bits: u64) -> f64 {
    -log(open_unit(bits))
}

/// Unit-rate exponential drawn from a sequential generator.
#[inline]
pub fn sample_unit_exponential<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    unit_exponential(rng.next_u64())
}

/// Domain tags keep the key spaces of different consumers disjoint.
pub mod tag {
    pub const EDGE: u64 = 0x45;
    pub const RECOVERY: u64 = 0x52;
    pub const INIT: u64 = 0x49;
    pub const DES: u64 = 0x44;
    pub const DTS: u64 = 0x54;
    pub const GRAPH: u64 = 0x47;
    pub const SAMPLE: u64 = 0x53;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_unit_stays_inside_interval() {
        for bits in [0u64, 1, u64::MAX, u64::MAX - 1, 1 << 63] {
            let u = open_unit(bits);
            assert!(u > 0.0 && u < 1.0, "{bits} -> {u}");
            assert!(unit_exponential(bits) > 0.0);
        }
    }

    #[test]
    fn derive_is_order_sensitive() {
        assert_ne!(derive(&[1, 2]), derive(&[2, 1]));
        assert_ne!(derive(&[1]), derive(&[1, 0]));
        assert_eq!(derive(&[7, 8, 9]), derive(&[7, 8, 9]));
    }

    #[test]
    fn keyed_exponentials_have_unit_mean() {
        let n = 200_000u64;
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let e = unit_exponential(derive(&[42, i]));
            s += e;
            s2 += e * e;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }
}
