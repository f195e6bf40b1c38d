//! Seeded random streams.
//!
//! Every consumer of randomness takes an explicit generator. Independent parts
//! of an experiment (ground truth, initial factor, measurement stream, replicate
//! runs) draw from distinct ChaCha streams of the same seed so that changing one
//! part never shifts the draws of another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type QstRng = ChaCha20Rng;

pub mod stream {
    pub const TRUTH: u64 = 1;
    pub const INIT: u64 = 2;
    pub const MEASURE: u64 = 3;
    pub const INIT_MEASURE: u64 = 4;
    /// Replicate `j` of a boosted initialization uses `REPLICA_BASE + 2j` for its
    /// starting vector and `REPLICA_BASE + 2j + 1` for its measurements.
    pub const REPLICA_BASE: u64 = 1 << 32;
}

pub fn seeded(seed: u64) -> QstRng {
    QstRng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: u64) -> QstRng {
    let mut rng = QstRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
