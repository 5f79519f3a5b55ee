//! Unconstrained parameterisation of stationary AR and invertible MA
//! polynomials through partial autocorrelations.
//!
//! Each real `u_k` maps to a partial autocorrelation `r_k = u_k / sqrt(1 + u_k²)`
//! in `(-1, 1)`; the Durbin-Levinson step-up recursion turns those into the
//! coefficients of a stationary `1 - Σ φ_j z^j`. MA coefficients use the
//! same map with the sign flipped, so `1 + Σ θ_j z^j` is invertible.

/// Partial autocorrelations of a stationary polynomial are kept at least
/// this far inside the unit interval when inverting.
const PACF_LIMIT: f64 = 0.995;

pub(crate) fn constrain_ar(u: &[f64]) -> Vec<f64> {
    let pacf: Vec<f64> = u.iter().map(|v| v / (1.0 + v * v).sqrt()).collect();
    step_up(&pacf)
}

pub(crate) fn constrain_ma(u: &[f64]) -> Vec<f64> {
    constrain_ar(u).into_iter().map(|c| -c).collect()
}

/// Inverse of [`constrain_ar`], or `None` if `phi` is not stationary.
pub(crate) fn unconstrain_ar(phi: &[f64]) -> Option<Vec<f64>> {
    let pacf = step_down(phi)?;
    Some(
        pacf.iter()
            .map(|r| {
                let r = r.clamp(-PACF_LIMIT, PACF_LIMIT);
                r / (1.0 - r * r).sqrt()
            })
            .collect(),
    )
}

pub(crate) fn unconstrain_ma(theta: &[f64]) -> Option<Vec<f64>> {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    unconstrain_ar(&neg)
}

/// Partial autocorrelations to AR coefficients.
pub(crate) fn step_up(pacf: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

/// AR coefficients to partial autocorrelations; `None` when some
/// `|r_k| >= 1`, i.e. the polynomial has a root on or inside the unit circle.
pub(crate) fn step_down(phi: &[f64]) -> Option<Vec<f64>> {
    let mut cur = phi.to_vec();
    let mut pacf = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let r = cur[k];
        if !r.is_finite() || r.abs() >= 1.0 {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        let prev: Vec<f64> = (0..k)
            .map(|j| (cur[j] + r * cur[k - 1 - j]) / denom)
            .collect();
        cur = prev;
    }
    Some(pacf)
}

pub(crate) fn is_stationary(phi: &[f64]) -> bool {
    step_down(phi).is_some()
}

pub(crate) fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    step_down(&neg).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let u = [0.3, -1.2, 2.5, 0.05];
        let phi = constrain_ar(&u);
        let back = unconstrain_ar(&phi).unwrap();
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ar2_known_pacf() {
        // φ = (1.0, -0.9): r_2 = -0.9, r_1 = 1 / 1.9
        let pacf = step_down(&[1.0, -0.9]).unwrap();
        assert!((pacf[1] + 0.9).abs() < 1e-15);
        assert!((pacf[0] - 1.0 / 1.9).abs() < 1e-15);
        let phi = step_up(&pacf);
        assert!((phi[0] - 1.0).abs() < 1e-14 && (phi[1] + 0.9).abs() < 1e-14);
    }

    #[test]
    fn detects_non_stationary() {
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[0.5, 0.6]));
        assert!(is_stationary(&[0.5, 0.3]));
        assert!(is_invertible(&[0.9]));
        assert!(!is_invertible(&[-1.5]));
    }

    #[test]
    fn ma_sign_convention() {
        let theta = constrain_ma(&[1.0]);
        assert!((theta[0] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(is_invertible(&theta));
    }
}
