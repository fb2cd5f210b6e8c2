//! Seeded generators. Everything random in the crate goes through ChaCha8 with
//! an explicit 64-bit seed, so streams are identical across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child stream, e.g. one per seed index or per meta-learner arm.
pub fn derive(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
