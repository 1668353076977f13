//! Counter-addressed random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose key is
//! derived from `(master_seed, phase)` and whose 64-bit stream id is the
//! replicate index. A replicate therefore sees the same numbers no matter
//! which worker runs it or in which order, which is what makes parallel runs
//! reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Phase tags separating independent uses of one master seed.
pub mod phase {
    pub const FIELD: u64 = 1;
    pub const MIXING: u64 = 2;
    pub const LAMBDA: u64 = 3;
    pub const RANDOMIZED: u64 = 4;
    pub const SAMPLER: u64 = 5;
    pub const CURVE: u64 = 6;
    pub const CALIBRATION: u64 = 7;
}

/// Provenance of one stream: enough to regenerate it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub phase: u64,
    pub index: u64,
}

impl SeedRecord {
    pub fn new(master: u64, phase: u64, index: u64) -> Self {
        Self {
            master,
            phase,
            index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        substream(self.master, self.phase, self.index)
    }

    /// A record for a derived phase, e.g. the per-`n` stream family of a curve.
    pub fn child(&self, phase: u64) -> Self {
        Self {
            master: splitmix64(self.master ^ splitmix64(self.phase.wrapping_add(self.index))),
            phase,
            index: 0,
        }
    }
}

/// SplitMix64 finalizer; used only to spread seeds into key material.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The generator for replicate `index` of `phase` under `master`.
pub fn substream(master: u64, phase: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = master ^ phase.rotate_left(32);
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
