//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8 keyed by a `u64`
//! seed (expanded with `SeedableRng::seed_from_u64`). Independent replications
//! use the same key with distinct 64-bit stream ids, so a replication's draws
//! depend only on `(seed, stream)` and never on scheduling. Gaussian variates
//! come from `rand_distr::StandardNormal` (ziggurat).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

/// Generator for a single seed (stream 0).
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for stream `stream` under key `seed`.
pub fn split(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Distribution of the standardized noise variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Symmetric signs, unit variance; a bounded sub-Gaussian alternative.
    Rademacher,
}

impl NoiseKind {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseKind::Gaussian => rng.sample(StandardNormal),
            NoiseKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.draw(rng);
        }
    }
}
