//! Seeded simulation helpers for synthetic checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn white_noise(sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let mut rng = rng(seed);
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// Zero-mean Gaussian ARMA path
/// `x_t = Σ φ_i x_{t-i} + ε_t + Σ θ_j ε_{t-j}`, after a burn-in long enough
/// to forget the zero initial conditions.
pub fn simulate_arma(phi: &[f64], theta: &[f64], sigma2: f64, n: usize, seed: u64) -> Vec<f64> {
    let burn = 1000 + 50 * (phi.len() + theta.len());
    let eps = white_noise(sigma2.sqrt(), n + burn, seed);
    let mut x = vec![0.0; n + burn];
    for t in 0..n + burn {
        let mut v = eps[t];
        for (i, a) in phi.iter().enumerate() {
            if t > i {
                v += a * x[t - 1 - i];
            }
        }
        for (j, b) in theta.iter().enumerate() {
            if t > j {
                v += b * eps[t - 1 - j];
            }
        }
        x[t] = v;
    }
    x.split_off(burn)
}
