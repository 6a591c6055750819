//! Deterministic derivation of per-task random streams from a single base seed.
//!
//! Every Monte Carlo task (a sweep replicate, a calibration simulation) owns an
//! independent generator whose seed is a stable hash of the base seed and the
//! task's coordinates. Tasks can therefore run in any order, on any thread, and
//! still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all simulation work.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable hash of `base` followed by `coords`.
pub fn stream_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(base), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn stream_rng(base: u64, coords: &[u64]) -> SimRng {
    SimRng::seed_from_u64(stream_seed(base, coords))
}
