//! Reproducible random streams.
//!
//! Every replicate and every consumer inside a replicate draws from its own
//! ChaCha8 stream. The 256-bit key comes from the experiment seed and the
//! 64-bit stream id is a mix of the replicate index and a purpose tag, so
//! replicates can run on any thread in any order and still produce the
//! same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Arrivals,
    ForwardArrivals,
    Shapes,
    Marks,
    Selection,
    Noodle,
    Custom(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Arrivals => 1,
            Purpose::ForwardArrivals => 2,
            Purpose::Shapes => 3,
            Purpose::Marks => 4,
            Purpose::Selection => 5,
            Purpose::Noodle => 6,
            Purpose::Custom(c) => 0x1_0000_0000 | u64::from(c),
        }
    }
}

/// Identifies one independent substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub experiment: u64,
    pub replicate: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(experiment: u64, replicate: u64, purpose: Purpose) -> Self {
        Self {
            experiment,
            replicate,
            purpose,
        }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.experiment);
        rng.set_stream(splitmix64(self.replicate ^ splitmix64(self.purpose.tag())));
        rng
    }

    /// Same experiment and purpose, different replicate.
    pub fn with_replicate(self, replicate: u64) -> Self {
        Self { replicate, ..self }
    }

    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Self { purpose, ..self }
    }
}

/// Convenience: rng for `(seed, replicate, purpose)`.
pub fn substream(seed: u64, replicate: u64, purpose: Purpose) -> SimRng {
    StreamKey::new(seed, replicate, purpose).rng()
}

/// Derives a fresh seed from an existing one (used for reseed retries).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
