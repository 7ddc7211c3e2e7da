//! Goodness-of-fit tests used by the verification harness: one- and
//! two-sample Kolmogorov-Smirnov tests with asymptotic critical values.

use crate::error::{Error, Result};
use crate::fluctuation::EmpiricalCdf;
use crate::special::kolmogorov_critical;

/// Outcome of a significance test.
#[derive(Debug, Clone, Copy)]
pub struct TestOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// One-sample KS test of `ecdf` against a continuous target CDF at level
/// `alpha`. Uses the asymptotic Kolmogorov critical value K_alpha / sqrt(N).
pub fn one_sample_ks<F: Fn(f64) -> f64>(
    ecdf: &EmpiricalCdf,
    target_cdf: F,
    alpha: f64,
) -> TestOutcome {
    let d = crate::fluctuation::kolmogorov_distance(ecdf, target_cdf);
    let n = ecdf.len() as f64;
    let critical = kolmogorov_critical(alpha) / n.sqrt();
    TestOutcome { statistic: d, critical, pass: d <= critical }
}

/// Exact two-sample KS statistic sup |F_a - F_b| by a sorted merge walk.
pub fn two_sample_ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid_argument("two-sample KS needs nonempty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    Ok(d)
}

/// Two-sample KS test at level `alpha` with the asymptotic critical value
/// K_alpha * sqrt((n + m) / (n m)).
pub fn two_sample_ks(a: &[f64], b: &[f64], alpha: f64) -> Result<TestOutcome> {
    let d = two_sample_ks_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let critical = kolmogorov_critical(alpha) * ((n + m) / (n * m)).sqrt();
    Ok(TestOutcome { statistic: d, critical, pass: d <= critical })
}
