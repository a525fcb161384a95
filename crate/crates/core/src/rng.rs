//! Deterministic random streams.
//!
//! Every draw in this crate comes from a ChaCha12 generator keyed by
//! the 32-byte tuple (seed, domain, a, b). Distinct domains and block
//! coordinates get distinct streams by construction, so results do not
//! depend on how work is scheduled, only on the fixed iteration order
//! within each stream.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub(crate) const DOMAIN_LABELS: u64 = 1;
pub(crate) const DOMAIN_EDGES: u64 = 2;
pub(crate) const DOMAIN_NOISE: u64 = 3;
pub(crate) const DOMAIN_KMEANS: u64 = 4;
pub(crate) const DOMAIN_LANCZOS: u64 = 5;

pub(crate) fn stream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Folds `b` into `a`, producing a well-mixed derived seed. Used to give
/// every branch of a recursion (or every cell of a grid) its own stream
/// key without coordinating a global counter.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
