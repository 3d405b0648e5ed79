//! Seeded counter-based random streams.
//!
//! Every consumer draws from a ChaCha8 stream addressed by
//! `(seed, domain, index)`, so results never depend on thread scheduling
//! or on how many values another consumer drew.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    LatinHypercube = 1,
    ShuffledComplex = 2,
    Orthogonal = 3,
    Synthetic = 4,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) ^ index);
    rng
}
