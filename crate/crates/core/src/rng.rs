//! Reproducible random streams.
//!
//! Every random quantity in the pipeline is drawn from a ChaCha8 stream keyed
//! by a 64-bit seed and a 64-bit stream id, so any single state or shuffle can
//! be regenerated from `(seed, stream)` alone, independent of worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALGORITHM: &str = "chacha8";

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn algorithm(&self) -> &'static str {
        ALGORITHM
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a global seed and a fixed label.
pub fn derive_seed(global: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(splitmix64(global), |h, b| splitmix64(h ^ u64::from(b)))
}
