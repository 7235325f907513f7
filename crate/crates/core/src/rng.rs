//! Reproducible random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream selected by
//! `(master seed, stream id)`, so results do not depend on how work is
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::C64;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Complex Gaussian with `E|z|² = sigma²` (independent real and imaginary
/// parts of variance `sigma²/2`).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> C64 {
    let s = sigma / std::f64::consts::SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}
