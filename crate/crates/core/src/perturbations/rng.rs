//! Counter-based random substreams.
//!
//! Every draw is addressed by `(master_seed, realization, k, n, kind)`. The
//! address is hashed into a ChaCha key, so a draw never depends on which
//! worker evaluates it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. Part of the substream address so that two
/// different uses at the same lattice point never share bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum DrawKind {
    StateIndependent = 1,
    RuleGaussian = 2,
    RuleUniform = 3,
    Estimator = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    master_seed: u64,
    realization: u64,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            realization: 0,
        }
    }

    pub fn with_realization(self, realization: u64) -> Self {
        Self {
            realization,
            ..self
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    /// Generator for the draw at iteration `k`, node `n`.
    pub fn substream(&self, k: usize, n: usize, kind: DrawKind) -> ChaCha8Rng {
        let mut h = mix(self.master_seed ^ 0x5350_4152_4152_4541);
        for word in [self.realization, k as u64, n as u64, kind as u64] {
            h = mix(h ^ word);
        }
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            h = mix(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
