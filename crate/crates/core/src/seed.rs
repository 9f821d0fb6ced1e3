//! Splittable seed derivation.
//!
//! Every random draw in the crate descends from a master [`Seed`] through a
//! chain of [`Seed::child`] / [`Seed::branch`] calls, e.g.
//!
//! ```text
//! master -> branch("train") -> child(cell) -> child(m) -> branch("fit")
//! ```
//!
//! A child seed is `mix(parent ^ mix(tag + GOLDEN))`, where `mix` is the
//! SplitMix64 finalizer. String labels are hashed with 64-bit FNV-1a so the
//! derivation is stable across compilers and platforms. The leaf seed is
//! expanded into a [`ChaCha8Rng`] stream.
//!
//! Streams derived this way never depend on scheduling, so parallel work
//! reproduces sequential results exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream type used everywhere in the crate.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub const fn new(value: u64) -> Self {
        Seed(value)
    }

    /// Derive the seed for numbered sub-task `index`.
    pub fn child(self, index: u64) -> Seed {
        Seed(mix(self.0 ^ mix(index.wrapping_add(GOLDEN))))
    }

    /// Derive the seed for a named branch.
    pub fn branch(self, label: &str) -> Seed {
        self.child(fnv1a(label.as_bytes()))
    }

    pub fn stream(self) -> Stream {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

impl std::fmt::Display for Seed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}

/// SplitMix64 output function.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
