//! Seed derivation for reproducible runs.
//!
//! A run owns one `u64` seed. Components never share a generator; each asks
//! for a substream by name (`"init"`, `"taus"`, `"shuffle"`, ...) so adding a
//! draw in one component cannot shift the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for the named component.
    pub fn substream(&self, name: &str) -> RunRng {
        ChaCha8Rng::seed_from_u64(derive(self.seed, name))
    }

    /// Generator for the `index`-th instance of a named component
    /// (per-iteration opponents, per-dimension nets, ...).
    pub fn indexed(&self, name: &str, index: u64) -> RunRng {
        ChaCha8Rng::seed_from_u64(splitmix64(derive(self.seed, name) ^ splitmix64(index)))
    }

    /// A nested stream whose substreams are disjoint from this one's.
    pub fn child(&self, name: &str) -> SeedStream {
        SeedStream::new(derive(self.seed, name))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive(seed: u64, name: &str) -> u64 {
    splitmix64(splitmix64(seed) ^ fnv1a(name.as_bytes()))
}
