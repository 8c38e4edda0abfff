//! Deterministic, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit key. Child streams
//! are derived from `(parent key, index)` with a SplitMix64 finalizer, so a
//! realization's draws depend only on the master seed and its index and never
//! on which worker thread produced it.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    key: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            key: seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent child stream. Does not advance `self`.
    pub fn fork(&self, index: u64) -> RandomStream {
        let key = splitmix64(self.key ^ splitmix64(index.wrapping_add(0xA5A5_5A5A_0F0F_F0F0)));
        RandomStream::new(key)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unit-mean exponential draw, strictly positive.
    pub fn unit_exponential(&mut self) -> f64 {
        // 1 - u lies in (0, 1], so the log is finite.
        let e = -(1.0 - self.uniform()).ln();
        if e > 0.0 {
            e
        } else {
            f64::MIN_POSITIVE
        }
    }

    pub fn index_below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RandomStream {
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
