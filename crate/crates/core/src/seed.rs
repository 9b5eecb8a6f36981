//! Counter-based seed derivation.
//!
//! Every random stream in the simulator is addressed by a tuple of integers
//! (base seed, purpose tag, episode, step, ids...). The tuple is folded through
//! SplitMix64 so that `child = hash64(base ‖ a ‖ b ‖ ...)`. Adding a new stream
//! or a new sweep value never perturbs the existing ones, and evaluation order
//! does not matter.

/// Purpose tags keep streams that share the same counters apart.
pub mod tag {
    pub const ENV_EPISODE: u64 = 0x454e_5645;
    pub const AGENT: u64 = 0x4147_4e54;
    pub const INIT: u64 = 0x494e_4954;
    pub const EVAL: u64 = 0x4556_414c;
    pub const SWEEP: u64 = 0x5357_4550;
    pub const RESPAWN: u64 = 0x5245_5350;
    pub const BEAM: u64 = 0x4245_414d;
    pub const FADING: u64 = 0x4641_4445;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A uniform draw in `[0, 1)` addressed by `(base, parts)`.
pub fn unit_uniform(base: u64, parts: &[u64]) -> f64 {
    (derive_seed(base, parts) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
