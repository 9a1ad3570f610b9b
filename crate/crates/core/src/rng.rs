//! Named random streams derived from a master seed.
//!
//! Every Monte Carlo trial draws from its own ChaCha stream, keyed by the
//! master seed, the trial index and the purpose of the draws. Results are
//! therefore independent of how trials are scheduled across threads, and two
//! estimators run with the same master seed see the same interferer geometry
//! and fading (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Each purpose gets an independent key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Interferer arrivals, positions and marks.
    Interferers,
    /// Reference link: receiver distance and its fading.
    ReferenceLink,
    /// Direct point-process sampling outside the trial machinery.
    PointProcess,
    /// Categorical draws such as two-level power selection.
    Selection,
    /// Anything test- or caller-specific.
    Custom(u32),
}

impl Purpose {
    fn key(self) -> u64 {
        match self {
            Purpose::Interferers => 0x1,
            Purpose::ReferenceLink => 0x2,
            Purpose::PointProcess => 0x3,
            Purpose::Selection => 0x4,
            Purpose::Custom(k) => 0x1_0000_0000 | u64::from(k),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for `(master seed, trial, purpose)`.
pub fn stream(master_seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let key = splitmix64(master_seed ^ splitmix64(purpose.key()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial);
    rng
}

/// Generator for a single-shot operation keyed only by a seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    stream(seed, 0, Purpose::PointProcess)
}
