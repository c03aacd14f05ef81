#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use hypsiam_core::PoincareBall;

/// Curvatures swept by the gradient and head suites.
pub const C_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 1.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, dim: usize, sd: f64) -> Vec<f64> {
    (0..dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform direction, norm uniform in `[0, max_norm)`.
pub fn vector(rng: &mut ChaCha8Rng, dim: usize, max_norm: f64) -> Vec<f64> {
    let dir = gaussian(rng, dim, 1.0);
    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let len = rng.random_range(0.0..max_norm);
    dir.iter().map(|v| v * len / n).collect()
}

/// A point whose norm is below `frac` of the ball radius.
pub fn ball_point(rng: &mut ChaCha8Rng, ball: &PoincareBall, dim: usize, frac: f64) -> Vec<f64> {
    vector(rng, dim, frac * ball.radius())
}

pub fn ball(c: f64) -> PoincareBall {
    PoincareBall::from_c(c).unwrap()
}

/// Hyperplane normal with norm in `[0.05, max_norm)`; the score bends on the scale of `‖t‖`,
/// so a fixed finite-difference step needs `‖t‖` well above it.
pub fn normal(rng: &mut ChaCha8Rng, dim: usize, max_norm: f64) -> Vec<f64> {
    let dir = gaussian(rng, dim, 1.0);
    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let len = rng.random_range(0.05..max_norm);
    dir.iter().map(|v| v * len / n).collect()
}
