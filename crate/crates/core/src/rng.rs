//! Seed fan-out. One global seed feeds independent ChaCha streams, one per
//! component, so adding a consumer never shifts the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    NetworkInit = 1,
    Exploration = 2,
    ReplaySampling = 3,
    TrainInitialConditions = 4,
    EvalInitialConditions = 5,
    Checks = 6,
}

/// Generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Stateless per-item seed, e.g. the initial condition of episode `index`.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(stream as u64)) ^ index)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
