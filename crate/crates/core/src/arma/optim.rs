//! Quasi-Newton minimiser used for the likelihood fits.
//!
//! BFGS on the inverse Hessian with central-difference gradients and a
//! backtracking Armijo line search. Non-finite objective values are treated
//! as `+inf`, so the line search simply backs away from them.

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub max_iter: usize,
    /// Converged when the largest gradient component falls below this.
    pub grad_tol: f64,
    /// Converged when successive objective values differ by less than
    /// `f_tol * (1 + |f|)` for a few iterations running.
    pub f_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            grad_tol: 1e-7,
            f_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub iterations: usize,
}

const STALL_LIMIT: usize = 3;

pub(crate) fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            let g = (up - down) / (2.0 * h);
            if g.is_finite() {
                g
            } else {
                0.0
            }
        })
        .collect()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

pub(crate) fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: BfgsOptions) -> Minimum {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut fx = eval(&f, &x);
    if d == 0 {
        return Minimum {
            x,
            f: fx,
            converged: fx.is_finite(),
            iterations: 0,
        };
    }
    if !fx.is_finite() {
        return Minimum {
            x,
            f: fx,
            converged: false,
            iterations: 0,
        };
    }

    let identity = |scale: f64| {
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = scale;
        }
        h
    };
    let mut h = identity(1.0);
    let mut g = gradient(&f, &x);
    let mut stalled = 0;
    let mut fresh_h = true;

    for iter in 0..opts.max_iter {
        if norm_inf(&g) < opts.grad_tol {
            return Minimum {
                x,
                f: fx,
                converged: true,
                iterations: iter,
            };
        }

        let mut dir: Vec<f64> = (0..d)
            .map(|i| -(0..d).map(|j| h[i * d + j] * g[j]).sum::<f64>())
            .collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            h = identity(1.0);
            fresh_h = true;
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }

        // cap the step so one update cannot fling the PACFs to saturation
        let max_step = norm_inf(&dir);
        let mut step = if max_step > 5.0 { 5.0 / max_step } else { 1.0 };
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let ft = eval(&f, &trial);
            if ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }

        let Some((x_new, f_new)) = accepted else {
            if fresh_h {
                // No descent along the steepest direction: a numerical optimum.
                return Minimum {
                    x,
                    f: fx,
                    converged: norm_inf(&g) < 1e3 * opts.grad_tol,
                    iterations: iter,
                };
            }
            h = identity(1.0);
            fresh_h = true;
            continue;
        };

        let g_new = gradient(&f, &x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if fresh_h {
                let scale = sy / dot(&y, &y);
                h = identity(scale);
            }
            let hy: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| h[i * d + j] * y[j]).sum())
                .collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            fresh_h = false;
        }

        let change = fx - f_new;
        x = x_new;
        g = g_new;
        fx = f_new;
        if change.abs() <= opts.f_tol * (1.0 + fx.abs()) {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                return Minimum {
                    x,
                    f: fx,
                    converged: true,
                    iterations: iter + 1,
                };
            }
        } else {
            stalled = 0;
        }
    }

    Minimum {
        converged: norm_inf(&g) < opts.grad_tol,
        x,
        f: fx,
        iterations: opts.max_iter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], BfgsOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn quadratic_in_many_dimensions() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (i as f64 + 1.0) * (v - i as f64).powi(2))
                .sum::<f64>()
        };
        let m = minimize(f, &[0.0; 8], BfgsOptions::default());
        assert!(m.converged);
        for (i, v) in m.x.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn backs_away_from_infinite_region() {
        let f = |x: &[f64]| {
            if x[0] > 2.0 {
                f64::NAN
            } else {
                (x[0] - 1.5).powi(2)
            }
        };
        let m = minimize(f, &[-10.0], BfgsOptions::default());
        assert!((m.x[0] - 1.5).abs() < 1e-6);
    }

    #[test]
    fn non_finite_start_is_not_converged() {
        let m = minimize(|_: &[f64]| f64::NAN, &[0.0], BfgsOptions::default());
        assert!(!m.converged);
    }
}
