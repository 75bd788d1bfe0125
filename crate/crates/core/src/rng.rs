//! Deterministic, hierarchical random number streams.
//!
//! Every randomized unit of work (a tree, a boosting stage, a tuning
//! candidate, a CV fold) gets its own stream derived from a master seed and a
//! structured label path such as `("exp", 2, "tree", 41)`. The stream seed is
//! SHA-256 of the master seed plus the length-prefixed path segments, so the
//! generator a unit sees depends only on (master_seed, path), never on how
//! many draws other units made or in which order they ran.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Display;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<String>,
}

impl RngStream {
    /// Root stream for a master seed, with an empty label path.
    pub fn new(master_seed: u64) -> Self {
        RngStream {
            master_seed,
            path: Vec::new(),
        }
    }

    /// Derive a sub-stream by appending one path segment. Segments stringify,
    /// so indices and names mix freely: `root.child("tree").child(7)`.
    pub fn child(&self, segment: impl Display) -> Self {
        let mut path = self.path.clone();
        path.push(segment.to_string());
        RngStream {
            master_seed: self.master_seed,
            path,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }

    fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        for segment in &self.path {
            hasher.update((segment.len() as u64).to_le_bytes());
            hasher.update(segment.as_bytes());
        }
        hasher.finalize().into()
    }

    /// Instantiate the generator for this stream. Calling this repeatedly
    /// always restarts the same sequence.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.digest())
    }

    /// Collapse the stream identity to a single 64-bit seed, for components
    /// that take a plain seed field (model configs record one).
    pub fn derive_seed(&self) -> u64 {
        let d = self.digest();
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }
}
