//! Seed discipline.
//!
//! Every experiment starts from a single 64-bit root seed. Independent
//! components obtain their own stream by hashing a component name and an
//! index into a sub-seed:
//!
//! ```text
//! sub_seed = mix(root ^ mix(fnv1a(name) ^ mix(index)))
//! ```
//!
//! where `mix` is the SplitMix64 finalizer and `fnv1a` the 64-bit FNV-1a hash
//! of the UTF-8 name. Streams are ChaCha8 seeded from the sub-seed. Because a
//! stream depends only on `(root, name, index)`, work can be scheduled in any
//! order or thread count without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random-stream type used throughout the simulator.
pub type Stream = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, name: &str, index: u64) -> u64 {
    mix(root ^ mix(fnv1a(name.as_bytes()) ^ mix(index)))
}

pub fn stream_from_seed(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A node in the seed hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn seed(&self, name: &str, index: u64) -> u64 {
        derive_seed(self.root, name, index)
    }

    pub fn stream(&self, name: &str, index: u64) -> Stream {
        stream_from_seed(self.seed(name, index))
    }

    pub fn child(&self, name: &str, index: u64) -> SeedTree {
        SeedTree::new(self.seed(name, index))
    }
}
