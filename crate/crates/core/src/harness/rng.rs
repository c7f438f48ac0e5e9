//! Seeded noise streams.
//!
//! Every noise source draws from its own ChaCha8 stream. The 256-bit key is
//! expanded from the run's 64-bit master seed by `SeedableRng::seed_from_u64`
//! (PCG32 output), and the source is selected by the ChaCha stream id, so
//! adding draws to one source never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SENSOR_NOISE: u64 = 0x01;
pub const SENSOR_DROPOUT: u64 = 0x02;
pub const TRIGGER_LATENCY: u64 = 0x03;

pub fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

#[derive(Debug, Clone)]
pub struct NoiseStreams {
    pub sensor_noise: ChaCha8Rng,
    pub sensor_dropout: ChaCha8Rng,
    pub trigger_latency: ChaCha8Rng,
}

impl NoiseStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            sensor_noise: stream(seed, SENSOR_NOISE),
            sensor_dropout: stream(seed, SENSOR_DROPOUT),
            trigger_latency: stream(seed, TRIGGER_LATENCY),
        }
    }
}
