//! Seeded random sampling shared by the probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::statespace::StateVec;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> StateVec {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return StateVec::from_vec(v.into_iter().map(|c| c / norm).collect());
        }
    }
}

/// Uniform sample from the ball of radius `r`.
pub fn in_ball(rng: &mut impl Rng, n: usize, r: f64) -> StateVec {
    let dir = unit_vector(rng, n);
    let u: f64 = rng.random();
    dir.scaled(r * u.powf(1.0 / n as f64))
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    rng.random_range(lo..hi)
}
