mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::Lcg;
use cyclecast_core::ingest::DailySeries;
use cyclecast_core::stats::{acf, adf_test, autocovariance, detrend, fit_linear_trend, pacf, TrendModel};

fn noisy(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = Lcg::new(seed);
    let mut prev = 0.0;
    (0..n)
        .map(|_| {
            prev = 0.4 * prev + rng.centered();
            prev
        })
        .collect()
}

/// PACF at lag h as the last coefficient of the order-h Yule-Walker solve.
fn pacf_direct(x: &[f64], max_lag: usize) -> Vec<f64> {
    let g = autocovariance(x, max_lag).unwrap();
    (1..=max_lag)
        .map(|h| {
            let m = DMatrix::from_fn(h, h, |i, j| g[i.abs_diff(j)]);
            let rhs = DVector::from_fn(h, |i, _| g[i + 1]);
            m.lu().solve(&rhs).unwrap()[h - 1]
        })
        .collect()
}

proptest! {
    #[test]
    fn acf_is_affine_invariant(seed in any::<u64>(), a in 0.01f64..1e3, b in -1e5f64..1e5) {
        let x = noisy(seed, 120);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let rx = acf(&x, 15).unwrap();
        let ry = acf(&y, 15).unwrap();
        prop_assert_eq!(rx.values[0], 1.0);
        for (u, v) in rx.values.iter().zip(&ry.values) {
            prop_assert!(u.abs() <= 1.0 + 1e-12);
            prop_assert!((u - v).abs() < 1e-9, "{} vs {}", u, v);
        }
    }

    #[test]
    fn adf_is_scale_invariant(seed in any::<u64>(), a in 1e-3f64..1e4) {
        let x = noisy(seed, 150);
        let y: Vec<f64> = x.iter().map(|v| a * v).collect();
        let s1 = adf_test(&x).unwrap().statistic;
        let s2 = adf_test(&y).unwrap().statistic;
        prop_assert!((s1 - s2).abs() < 1e-9 * (1.0 + s1.abs()), "{} vs {}", s1, s2);
    }

    #[test]
    fn detrended_residuals_have_no_trend(
        intercept in -1e6f64..1e6,
        slope in -500.0f64..500.0,
        seed in any::<u64>(),
    ) {
        let mut rng = Lcg::new(seed);
        let counts: Vec<u64> = (1..=300)
            .map(|t| (1e6 + intercept + slope * t as f64 + 5e3 * rng.centered()).round() as u64)
            .collect();
        let series = DailySeries::new("2018-01-01".parse().unwrap(), counts).unwrap();
        let trend = fit_linear_trend(&series).unwrap();
        let resid = detrend(&series, &trend);
        let refit = TrendModel::fit(resid.values(), resid.origin_index()).unwrap();
        prop_assert!(refit.slope.abs() < 1e-6 * trend.slope.abs().max(1.0));
        prop_assert!(refit.intercept.abs() < 1e-6 * trend.intercept.abs().max(1.0));
    }
}

#[test]
fn durbin_levinson_matches_direct_solve() {
    for seed in 0..100u64 {
        let x = noisy(seed, 200 + seed as usize);
        let dl = pacf(&x, 20).unwrap();
        let direct = pacf_direct(&x, 20);
        for h in 1..=20 {
            assert!(
                (dl.values[h] - direct[h - 1]).abs() < 1e-8,
                "seed {seed}, lag {h}: {} vs {}",
                dl.values[h],
                direct[h - 1]
            );
        }
    }
}
