//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a single root seed. Each consumer
//! derives its own stream from the root via a stage name plus integer
//! indices, so adding tries to one stage never perturbs another and parallel
//! workers can be handed independent, reproducible generators.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a over a byte slice.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; a single step is a good 64-bit mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `root` for the stream `name` at `indices`.
///
/// Distinct (name, indices) tuples map to distinct streams with
/// overwhelming probability; equal tuples always map to the same seed.
pub fn stream_seed(root: u64, name: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ fnv1a(name.as_bytes()));
    for &ix in indices {
        h = splitmix64(h ^ splitmix64(ix.wrapping_add(0xa076_1d64_78bd_642f)));
    }
    h
}

/// Builds a reproducible generator for the stream `name` at `indices`.
pub fn stream_rng(root: u64, name: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(root, name, indices))
}

/// Stable 64-bit fingerprint of a byte string, rendered as fixed-width hex.
/// Used to stamp configurations into manifests; not cryptographic.
pub fn fingerprint(bytes: &[u8]) -> String {
    format!("{:016x}", splitmix64(fnv1a(bytes)))
}
