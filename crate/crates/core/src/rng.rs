//! Counter-based uniform generator.
//!
//! Each variate is a pure function of (seed, stream index), so sampling can
//! be chunked or parallelized in any order and still produce identical
//! output. The mixer is splitmix64 applied twice to the combined key.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform variate in the open interval (0, 1) for stream element `j` of
/// stream `seed`.
pub fn uniform(seed: u64, j: u64) -> f64 {
    let mixed = splitmix64(splitmix64(seed).wrapping_add(j).wrapping_mul(0x2545f4914f6cdd1d));
    let bits = splitmix64(mixed) >> 11; // 53 random bits
    (bits as f64 + 0.5) * (1.0 / 9007199254740992.0) // / 2^53, never 0 or 1
}
