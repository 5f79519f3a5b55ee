#![allow(dead_code)]

/// 64-bit LCG shared with `oracle/statsmodels_oracle.py`.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn centered(&mut self) -> f64 {
        self.uniform() - 0.5
    }
}

pub fn ar1_series(seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let mut rng = Lcg::new(seed);
    let mut prev = 0.0;
    (0..n)
        .map(|_| {
            prev = phi * prev + rng.centered();
            prev
        })
        .collect()
}

pub fn arma11_series(seed: u64, n: usize, phi: f64, theta: f64) -> Vec<f64> {
    let mut rng = Lcg::new(seed);
    let (mut prev, mut eprev) = (0.0, 0.0);
    (0..n)
        .map(|_| {
            let e = rng.centered();
            prev = phi * prev + e + theta * eprev;
            eprev = e;
            prev
        })
        .collect()
}

pub fn random_walk(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = Lcg::new(seed);
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            level += rng.centered();
            level
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}
