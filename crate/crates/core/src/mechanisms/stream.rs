//! Reproducible randomness: generators derived from a seed plus a path of
//! integers, so sub-streams are independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// A descriptor for a random sub-stream. Drawing is a pure function of
/// `(seed, path)`: identical descriptors yield identical draws, distinct
/// paths yield independent streams, and draws on one path are unaffected by
/// how many other paths were consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, path: Vec::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Descriptor for the `index`-th sub-stream of this stream.
    pub fn child(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self { seed: self.seed, path }
    }

    /// A fresh generator keyed by this descriptor. The key is a digest of
    /// `(seed, path)`, so the generator's output depends on nothing else.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut h = Sha256::new();
        h.update(b"dplinear.stream.v1");
        h.update(self.seed.to_le_bytes());
        h.update((self.path.len() as u64).to_le_bytes());
        for p in &self.path {
            h.update(p.to_le_bytes());
        }
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha12Rng::from_seed(key)
    }
}
