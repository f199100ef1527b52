//! Seed splitting for families of random grids.
//!
//! Grid `k` of a study with master seed `s` uses
//! `derive_seed(s, k) = splitmix64(s ^ splitmix64(k + 1))`, and every grid
//! draws its perturbations from `ChaCha8Rng::seed_from_u64` of that value.

/// One output of the SplitMix64 generator started at `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// `count` consecutive derived seeds.
pub fn seed_family(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| derive_seed(master, k)).collect()
}
