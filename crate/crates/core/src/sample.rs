//! Seeded sampling shared by every model-building path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Key;

/// Counter-based, platform-independent PRNG used for all sampling.
pub type SampleRng = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rng for one recursive call, derived from the user seed and the call's
/// position so that sequential and parallel runs draw identical samples.
pub fn rng_for(seed: u64, offset: usize, depth: usize) -> SampleRng {
    let s = splitmix64(seed ^ splitmix64(offset as u64 ^ ((depth as u64) << 56)));
    SampleRng::seed_from_u64(s)
}

/// Draws `count` keys uniformly with replacement. Returns the whole segment
/// when `count >= segment.len()`.
pub fn draw(segment: &[Key], count: usize, rng: &mut SampleRng) -> Vec<Key> {
    if count >= segment.len() {
        return segment.to_vec();
    }
    let n = segment.len();
    (0..count).map(|_| segment[rng.random_range(0..n)]).collect()
}

/// `draw` followed by an in-place sort of the sample.
pub fn draw_sorted(segment: &[Key], count: usize, rng: &mut SampleRng) -> Vec<Key> {
    let mut s = draw(segment, count, rng);
    crate::sort::radix_base_case_sort(&mut s);
    s
}
