//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes an explicit generator. Parallel work derives
//! one independent ChaCha stream per worker index so results do not depend on
//! the number of threads.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream` of the family keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws a fresh family seed from `rng`, for fanning out child streams.
pub fn fork_seed(rng: &mut SimRng) -> u64 {
    rng.random()
}

/// Circularly-symmetric complex Gaussian sample with variance `var` (E|z|^2 = var).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex<f64> {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(s * re, s * im)
}

/// Fills `out` with i.i.d. CN(0, var) samples.
pub fn fill_complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64, out: &mut [Complex<f64>]) {
    for z in out.iter_mut() {
        *z = complex_gaussian(rng, var);
    }
}
