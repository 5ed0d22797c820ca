//! Deterministic substreams.
//!
//! A substream is keyed by `(seed, index, label)`. The key is folded through
//! SplitMix64's finalizer:
//!
//! ```text
//! h     = fnv1a64(label)
//! k1    = mix(seed ^ GOLDEN)
//! k2    = mix(k1 ^ index.rotate_left(17) ^ h)
//! key   = mix(k2 + GOLDEN)
//! ```
//!
//! and `key` seeds a ChaCha8 generator. Results never depend on the order in
//! which replicas are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The generator type behind every substream.
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// 64-bit key of a substream.
pub fn substream_key(seed: u64, index: u64, label: &str) -> u64 {
    let k1 = splitmix64(seed ^ GOLDEN);
    let k2 = splitmix64(k1 ^ index.rotate_left(17) ^ fnv1a64(label));
    splitmix64(k2.wrapping_add(GOLDEN))
}

/// Generator for substream `(seed, index, label)`.
pub fn derive_substream(seed: u64, index: u64, label: &str) -> StreamRng {
    StreamRng::seed_from_u64(substream_key(seed, index, label))
}

/// A master seed from which labelled, indexed substreams are carved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Substreams {
    seed: u64,
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Substreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, index: u64, label: &str) -> StreamRng {
        derive_substream(self.seed, index, label)
    }

    /// A child family, e.g. one per experiment stage.
    pub fn child(&self, label: &str) -> Substreams {
        Substreams { seed: substream_key(self.seed, u64::MAX, label) }
    }
}

/// Runs `f` for replicas `0..count` in parallel, replica `k` on substream
/// `(seed, k, label)`. Results are returned in replica order.
pub fn par_replicas<T, F>(seed: u64, label: &str, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> T + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|k| f(k, &mut derive_substream(seed, k as u64, label)))
        .collect()
}
