//! Seeded, splittable random streams.
//!
//! One master seed drives everything; independent purposes draw from
//! separate ChaCha streams so that, for example, changing the number of
//! epochs never perturbs the initial weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const INIT: u64 = 1 << 40;
const SHUFFLE: u64 = 2 << 40;
const DROPOUT: u64 = 3 << 40;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream for initializing the `index`-th parameter tensor.
pub fn init_stream(seed: u64, index: usize) -> ChaCha8Rng {
    stream(seed, INIT + index as u64)
}

pub fn shuffle_stream(seed: u64, epoch: usize) -> ChaCha8Rng {
    stream(seed, SHUFFLE + epoch as u64)
}

pub fn dropout_stream(seed: u64, epoch: usize) -> ChaCha8Rng {
    stream(seed, DROPOUT + epoch as u64)
}
