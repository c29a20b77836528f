//! Keyed random streams.
//!
//! Every stochastic task draws from its own ChaCha8 stream whose seed is a
//! hash of the root seed and a path of integer coordinates (cell ids,
//! replication index, purpose tag). Results therefore do not depend on the
//! order in which tasks are scheduled or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Purpose tags so that unrelated consumers of the same coordinates never
/// share a stream.
pub mod purpose {
    pub const DATA: u64 = 0x01;
    pub const SIGMA: u64 = 0x02;
    pub const PIVOTED: u64 = 0x03;
    pub const NON_PIVOTED: u64 = 0x04;
    pub const MOMENTS: u64 = 0x05;
    pub const TRUTH_LAW: u64 = 0x06;
    pub const SIMULATE: u64 = 0x07;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a coordinate path into a 64-bit seed.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Stream keyed by `(root, path)`.
pub fn stream(root: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(root, path))
}

/// Stable 64-bit FNV-1a hash, used to turn string tags into coordinates.
pub fn tag_id(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
