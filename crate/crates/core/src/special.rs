//! Thin layer over the special functions the rest of the crate needs.
//!
//! Gamma-family evaluations all go through `ln_gamma` so that ratios of huge
//! gamma values (dimension up to 1e7) never overflow.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// Natural log of the gamma function.
pub fn lgamma(x: f64) -> f64 {
    ln_gamma(x)
}

/// exp(sum of log-gamma terms); `num` and `den` are gamma arguments.
pub fn gamma_ratio(num: &[f64], den: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &a in num {
        acc += ln_gamma(a);
    }
    for &a in den {
        acc -= ln_gamma(a);
    }
    acc.exp()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(a, x)
}

/// Regularized incomplete beta I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    beta_reg(a, b, x)
}

/// Standard normal distribution function, accurate in both tails.
///
/// Evaluated through the regularized incomplete gamma (erfc(y) = Q(1/2, y^2)),
/// which is far more accurate here than a rational erf approximation.
pub fn std_normal_cdf(t: f64) -> f64 {
    let x = 0.5 * t * t;
    if x == 0.0 {
        return 0.5;
    }
    let q = gamma_ur(0.5, x);
    if t > 0.0 {
        1.0 - 0.5 * q
    } else {
        0.5 * q
    }
}

/// CDF of the Kolmogorov distribution, K(x) = P(sup|B(t)| <= x).
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.05 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * x * x).exp();
        if term < 1e-18 {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// Upper quantile of the Kolmogorov distribution: smallest c with 1 - K(c) <= alpha.
pub fn kolmogorov_critical(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    let (mut lo, mut hi) = (0.1, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - kolmogorov_cdf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper quantile of the chi-squared distribution with `df` degrees of freedom.
pub fn chi_squared_critical(df: u64, alpha: f64) -> f64 {
    let dist = ChiSquared::new(df as f64).expect("df must be positive");
    dist.inverse_cdf(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_points() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-15);
        // Phi(1) = 0.8413447460685429
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((std_normal_cdf(-8.0) - 6.220_960_574_271_786e-16).abs() < 1e-18);
    }

    #[test]
    fn kolmogorov_known_quantiles() {
        // Classical values: K(1.3581) = 0.95, K(1.6276) = 0.99.
        assert!((kolmogorov_critical(0.05) - 1.3581).abs() < 2e-4);
        assert!((kolmogorov_critical(0.01) - 1.6276).abs() < 2e-4);
    }

    #[test]
    fn chi_squared_quantile_df15() {
        // chi^2_{15, 0.99} = 30.5779
        assert!((chi_squared_critical(15, 0.01) - 30.5779).abs() < 1e-3);
    }

    #[test]
    fn incomplete_beta_endpoints_and_uniform_power() {
        assert_eq!(reg_inc_beta(5.0, 1.0, 0.0), 0.0);
        assert_eq!(reg_inc_beta(5.0, 1.0, 1.0), 1.0);
        // I_x(a, 1) = x^a
        let x: f64 = 0.73;
        assert!((reg_inc_beta(5.0, 1.0, x) - x.powi(5)).abs() < 1e-13);
    }

    #[test]
    fn reg_lower_gamma_half_life() {
        // P(1/2, 1/2) = P(chi^2_1 <= 1) = 2 Phi(1) - 1
        let expect = 2.0 * std_normal_cdf(1.0) - 1.0;
        assert!((reg_lower_gamma(0.5, 0.5) - expect).abs() < 1e-12);
    }
}
