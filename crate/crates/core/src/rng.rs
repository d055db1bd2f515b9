//! Keyed random substreams.
//!
//! Every stochastic unit of work (one bit exchange, one sweep point) draws
//! from its own ChaCha8 stream whose seed is a fixed function of a key tuple.
//! The mixer folds each key word into a SplitMix64 state:
//!
//! ```text
//! h = 0x6a09e667f3bcc908
//! for w in key: h = splitmix64(h ^ w)
//! ```
//!
//! The mapping is part of the reproducibility contract and must not change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const MIX_INIT: u64 = 0x6a09_e667_f3bc_c908;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a key tuple into a single 64-bit seed.
pub fn mix_key(key: &[u64]) -> u64 {
    key.iter().fold(MIX_INIT, |h, &w| splitmix64(h ^ w))
}

/// Stream for the given key tuple.
pub fn substream(key: &[u64]) -> SimRng {
    ChaCha8Rng::seed_from_u64(mix_key(key))
}

/// Domain tags keep streams for different purposes apart even when the
/// remaining key words coincide.
pub mod domain {
    pub const EXCHANGE: u64 = 0x45_58_43_48; // "EXCH"
    pub const SWEEP: u64 = 0x53_57_45_50; // "SWEP"
    pub const DEFENSE_BEFORE: u64 = 0x44_46_42_46; // "DFBF"
    pub const DEFENSE_AFTER: u64 = 0x44_46_41_46; // "DFAF"
    pub const SINGLE: u64 = 0x53_4e_47_4c; // "SNGL"
}
