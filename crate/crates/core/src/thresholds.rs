//! Closed-form synchronization thresholds for uniformly coupled networks.
//!
//! The critical coupling is the larger of two necessary conditions: an
//! order-parameter bound driven by the largest `|ω_j|`, and a bound driven by
//! the frequency range `ω_M − ω_m` evaluated at the optimal spreading angle
//! `θ_opt(n)`. Below it no synchronization state can exist. Neither term
//! involves the weights `d_j`.

use serde::{Deserialize, Serialize};

use crate::error::ThresholdError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n: usize,
    /// `max_j |ω_j|`
    pub omega_max_abs: f64,
    #[serde(rename = "omega_M")]
    pub omega_max: f64,
    #[serde(rename = "omega_m")]
    pub omega_min: f64,
    pub theta_opt: f64,
    /// `ω (n² + 1) / (n² − n + √(2n))`
    #[serde(rename = "term_ours")]
    pub order_parameter_term: f64,
    /// `(ω_M − ω_m) n / (2 sin θ_opt + 2 (n − 2) sin(θ_opt / 2))`
    #[serde(rename = "term_chopra")]
    pub frequency_range_term: f64,
    pub lambda_c: f64,
}

impl ThresholdReport {
    /// Whether coupling `lambda` lies below the critical value, in which case
    /// synchronization is impossible.
    pub fn rules_out(&self, lambda: f64) -> bool {
        lambda < self.lambda_c
    }
}

/// `θ_opt(n) = 2 arccos((−(n−2) + √((n−2)² + 32)) / 8)`.
pub fn theta_opt(n: usize) -> Result<f64, ThresholdError> {
    if n < 2 {
        return Err(ThresholdError::TooFewOscillators(n));
    }
    let a = (n - 2) as f64;
    // rationalized: (−a + √(a²+32))/8 = 4/(a + √(a²+32)), no cancellation for large n
    let arg = 4.0 / (a + (a * a + 32.0).sqrt());
    Ok(2.0 * arg.acos())
}

pub fn critical_coupling(omega: &[f64], n: usize) -> Result<ThresholdReport, ThresholdError> {
    if n < 2 {
        return Err(ThresholdError::TooFewOscillators(n));
    }
    if omega.len() != n {
        return Err(ThresholdError::SizeMismatch {
            got: omega.len(),
            expected: n,
        });
    }
    if omega.iter().all(|&w| w == 0.0) {
        return Err(ThresholdError::ZeroFrequencies);
    }
    let omega_max = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let omega_min = omega.iter().cloned().fold(f64::INFINITY, f64::min);
    let omega_max_abs = omega_max.abs().max(omega_min.abs());
    let theta = theta_opt(n)?;
    let nf = n as f64;
    let order_parameter_term = omega_max_abs * (nf * nf + 1.0) / (nf * nf - nf + (2.0 * nf).sqrt());
    let frequency_range_term =
        (omega_max - omega_min) * nf / (2.0 * theta.sin() + 2.0 * (nf - 2.0) * (theta / 2.0).sin());
    Ok(ThresholdReport {
        n,
        omega_max_abs,
        omega_max,
        omega_min,
        theta_opt: theta,
        order_parameter_term,
        frequency_range_term,
        lambda_c: order_parameter_term.max(frequency_range_term),
    })
}

/// Upper bound `1 − 1/n + (1/n)√(1 − (ω/λ)²)` on the limiting order-parameter
/// magnitude of a synchronized state.
pub fn r_upper_bound(omega_max_abs: f64, lambda: f64, n: usize) -> Result<f64, ThresholdError> {
    if n < 2 {
        return Err(ThresholdError::TooFewOscillators(n));
    }
    if !(omega_max_abs > 0.0 && lambda > omega_max_abs) {
        return Err(ThresholdError::CouplingTooWeak {
            lambda,
            omega: omega_max_abs,
        });
    }
    let nf = n as f64;
    let ratio = omega_max_abs / lambda;
    Ok(1.0 - 1.0 / nf + (1.0 - ratio * ratio).sqrt() / nf)
}

/// Locking threshold of two identical-weight oscillators.
pub fn two_oscillator_threshold(omega1: f64, omega2: f64) -> f64 {
    (omega2 - omega1).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn theta_opt_values() {
        assert_abs_diff_eq!(theta_opt(2).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        // independent evaluation of the unrationalized closed form
        let direct = |n: f64| 2.0 * ((-(n - 2.0) + ((n - 2.0).powi(2) + 32.0).sqrt()) / 8.0).acos();
        assert_abs_diff_eq!(theta_opt(100).unwrap(), direct(100.0), epsilon = 1e-12);
        assert_abs_diff_eq!(theta_opt(100).unwrap(), 3.1008, epsilon = 5e-5);
        assert!((PI - theta_opt(1_000_000).unwrap()).abs() < 1e-3);
        assert!(theta_opt(1).is_err());
    }

    #[test]
    fn theta_opt_increasing_and_bounded() {
        let mut prev = 0.0;
        for n in 2..=10_000 {
            let t = theta_opt(n).unwrap();
            assert!(t > prev && t < PI, "n = {n}");
            prev = t;
        }
    }

    #[test]
    fn two_oscillator_terms() {
        let w0 = 0.8;
        let r = critical_coupling(&[w0, -w0], 2).unwrap();
        assert_abs_diff_eq!(r.order_parameter_term, 1.25 * w0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.frequency_range_term, 2.0 * w0, epsilon = 1e-12);
        assert_eq!(r.lambda_c, r.frequency_range_term);
    }

    #[test]
    fn reference_network_values() {
        let mut omega = vec![0.0; 100];
        omega[0] = 1.2162;
        omega[1] = 1.2162 - 2.3697;
        let r = critical_coupling(&omega, 100).unwrap();
        assert_abs_diff_eq!(r.order_parameter_term, 1.2269, epsilon = 5e-4);
        assert_abs_diff_eq!(r.frequency_range_term, 1.2088, epsilon = 5e-4);
        assert!(r.rules_out(1.22));
        assert!(!r.rules_out(1.44));
        assert_abs_diff_eq!(
            r_upper_bound(1.2162, 1.44, 100).unwrap(),
            0.9954,
            epsilon = 1e-4
        );
    }

    #[test]
    fn scale_covariance() {
        let omega = [0.3, -1.1, 0.5, 0.3];
        let base = critical_coupling(&omega, 4).unwrap();
        let scaled: Vec<f64> = omega.iter().map(|w| w * 3.5).collect();
        let s = critical_coupling(&scaled, 4).unwrap();
        assert_abs_diff_eq!(
            s.order_parameter_term,
            3.5 * base.order_parameter_term,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            s.frequency_range_term,
            3.5 * base.frequency_range_term,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s.lambda_c, 3.5 * base.lambda_c, epsilon = 1e-12);
        assert_eq!(s.theta_opt, base.theta_opt);
    }

    #[test]
    fn bound_examples_and_errors() {
        assert_abs_diff_eq!(r_upper_bound(0.6, 1.0, 2).unwrap(), 0.9, epsilon = 1e-15);
        assert!(r_upper_bound(1e-9, 1e3, 10).unwrap() > 1.0 - 1e-12);
        assert!(r_upper_bound(1.0, 1.0, 10).is_err());
        assert!(r_upper_bound(0.0, 1.0, 10).is_err());
        assert_eq!(
            critical_coupling(&[0.0, 0.0], 2),
            Err(ThresholdError::ZeroFrequencies)
        );
        assert_eq!(two_oscillator_threshold(0.5, -0.5), 1.0);
        assert_eq!(two_oscillator_threshold(0.3, 0.3), 0.0);
    }

    #[test]
    fn bound_dominates_ratio_above_order_parameter_term() {
        for n in [2usize, 3, 7, 50, 400] {
            for w in [0.1, 1.0, 2.7] {
                let omega: Vec<f64> = std::iter::once(w)
                    .chain(std::iter::repeat_n(0.0, n - 1))
                    .collect();
                let r_n = critical_coupling(&omega, n).unwrap();
                for factor in [1.0 + 1e-9, 1.01, 1.5, 4.0] {
                    let lambda = r_n.order_parameter_term * factor;
                    if lambda > w {
                        let bound = r_upper_bound(w, lambda, n).unwrap();
                        assert!(bound >= w / lambda - 1e-12, "n={n} w={w} f={factor}");
                    }
                }
            }
        }
    }
}
