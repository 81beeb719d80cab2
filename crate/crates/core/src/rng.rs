//! Seed expansion into independent labeled RNG streams.
//!
//! Every random draw in the toolkit comes from a stream derived from a
//! base seed plus a label and an index, so results never depend on how
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels. Keeping them in one place avoids accidental reuse.
pub mod label {
    pub const SYNTH: u64 = 0x5359_4e54;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const SMOTE_ORDER: u64 = 0x534d_4f52;
    pub const SMOTE_SAMPLE: u64 = 0x534d_5341;
    pub const FOREST_TREE: u64 = 0x4652_5354;
    pub const BOOST: u64 = 0x424f_4f53;
    pub const GRID: u64 = 0x4752_4944;
    pub const FOLD: u64 = 0x464f_4c44;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, label, index)`.
pub fn derive_seed(seed: u64, label: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ label) ^ index)
}

pub fn stream(seed: u64, label: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label, index))
}
