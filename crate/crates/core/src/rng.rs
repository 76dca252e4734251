//! Counter-based random streams.
//!
//! A [`Stream`] is identified by a 64-bit key. Child streams are derived from
//! the parent key and an index alone, so the numbers a child produces never
//! depend on how many draws the parent (or any sibling) has consumed. This is
//! what makes replications, batch elements and worker threads order-independent.

use rand::{RngCore, SeedableRng};
use rand_pcg::Pcg64Mcg;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive(key: u64, index: u64) -> u64 {
    mix(key ^ mix(index.wrapping_add(GOLDEN)).rotate_left(17))
}

/// Well-known labels for child streams used across the crate.
pub mod label {
    pub const TERMINATION: u64 = 0x5254_4552_4d00_0001;
    pub const ITERATIONS: u64 = 0x4954_4552_0000_0002;
    pub const POST: u64 = 0x504f_5354_0000_0003;
    pub const RUNS: u64 = 0x5255_4e53_0000_0004;
    pub const CANDIDATES: u64 = 0x4341_4e44_0000_0005;
    pub const EVALUATION: u64 = 0x4556_414c_0000_0006;
    pub const PILOT: u64 = 0x5049_4c4f_0000_0007;
    pub const INSTANCE: u64 = 0x494e_5354_0000_0008;
}

#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    rng: Pcg64Mcg,
}

impl Stream {
    /// Root stream for a master seed.
    pub fn new(seed: u64) -> Self {
        Self::from_key(derive(seed, 0))
    }

    fn from_key(key: u64) -> Self {
        let lo = mix(key);
        let hi = mix(key ^ GOLDEN);
        let state = ((hi as u128) << 64) | lo as u128;
        Stream {
            key,
            rng: Pcg64Mcg::new(state | 1),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child stream keyed by `index`, independent of this stream's position.
    pub fn fork(&self, index: u64) -> Stream {
        Self::from_key(derive(self.key, index))
    }

    /// Child stream keyed by a path of indices, e.g. `(iteration, sample)`.
    pub fn fork_path(&self, path: &[u64]) -> Stream {
        let key = path.iter().fold(self.key, |k, &i| derive(k, i));
        Self::from_key(key)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

impl SeedableRng for Stream {
    type Seed = [u8; 8];

    fn from_seed(seed: Self::Seed) -> Self {
        Stream::new(u64::from_le_bytes(seed))
    }
}
