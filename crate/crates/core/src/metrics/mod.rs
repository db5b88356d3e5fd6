//! Rates, recovery criteria, optimal-rate curves and binomial tail bounds.

mod chernoff;
mod criterion;
mod thresholds;

pub use chernoff::{chernoff_lower, chernoff_upper, chernoff_weak_lower, chernoff_weak_upper};
pub use criterion::{evaluate, evaluate_with_mode, Criterion, Evaluation, SizeMode};
pub use thresholds::{r_star, threshold_curve, thresholds_csv, zeta, ThresholdPoint, EXACT_PLATEAU_END};

use std::f64::consts::LN_2;

use statrs::function::gamma::ln_gamma;

use crate::error::{param, Result};

const ROUNDING_TOL: f64 = 1e-9;

/// `floor(x)` that absorbs representation error just below an integer,
/// e.g. `(1 - 0.9) * 10`.
pub fn floor_tol(x: f64) -> usize {
    (x + ROUNDING_TOL).floor().max(0.0) as usize
}

/// `ceil(x)` that absorbs representation error just above an integer.
pub fn ceil_tol(x: f64) -> usize {
    (x - ROUNDING_TOL).ceil().max(0.0) as usize
}

/// Above this many factors the log-binomial switches from a direct
/// compensated sum to log-gamma differences.
const DIRECT_SUM_LIMIT: usize = 1_000_000;

/// Natural log of `C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "ln_binomial needs k <= n");
    let m = k.min(n - k);
    if m == 0 {
        return 0.0;
    }
    if m > DIRECT_SUM_LIMIT {
        return ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
    }
    // ln C(n, m) = sum_{i=1}^{m} ln(1 + (n - m) / i), Neumaier-compensated
    let rest = (n - m) as f64;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in 1..=m {
        let term = (rest / i as f64).ln_1p();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `log2 C(n, k)`.
pub fn log2_binomial(n: usize, k: usize) -> f64 {
    ln_binomial(n, k) / LN_2
}

/// Bits of defective-set identity learned per test, `log2 C(n, k) / T`.
pub fn rate(n: usize, k: usize, tests: usize) -> Result<f64> {
    if k == 0 || k > n || tests == 0 {
        return param(format!("rate needs 1 <= k <= n and T >= 1, got n={n}, k={k}, T={tests}"));
    }
    Ok(log2_binomial(n, k) / tests as f64)
}

/// Smallest `T` whose rate does not exceed `target`.
pub fn tests_for_rate(n: usize, k: usize, target: f64) -> Result<usize> {
    if !(target > 0.0 && target.is_finite()) {
        return param(format!("target rate must be positive, got {target}"));
    }
    let bits = log2_binomial(n, k);
    let mut t = ((bits / target).ceil() as usize).max(1);
    while rate(n, k, t)? > target {
        t += 1;
    }
    while t > 1 && rate(n, k, t - 1)? <= target {
        t -= 1;
    }
    Ok(t)
}

/// Wilson score interval for `successes / trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nt = trials as f64;
    let p = successes as f64 / nt;
    let z2 = z * z;
    let denom = 1.0 + z2 / nt;
    let center = (p + z2 / (2.0 * nt)) / denom;
    let half = z * (p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_small_cases() {
        assert_eq!(rate(2, 1, 1).unwrap(), 1.0);
        let r = rate(4, 2, 5).unwrap();
        assert!((r - 6f64.log2() / 5.0).abs() < 1e-15);
        assert!(rate(3, 0, 1).is_err());
        assert!(rate(3, 4, 1).is_err());
        assert!(rate(3, 1, 0).is_err());
    }

    #[test]
    fn tests_for_rate_examples() {
        assert_eq!(tests_for_rate(2, 1, 1.0).unwrap(), 1);
        assert_eq!(tests_for_rate(4, 2, LN_2).unwrap(), 4);
        assert!(tests_for_rate(4, 2, 0.0).is_err());
    }

    #[test]
    fn rounding_helpers() {
        assert_eq!(floor_tol((1.0 - 0.9) * 10.0), 1);
        assert_eq!(floor_tol(0.75 * 4.0), 3);
        assert_eq!(ceil_tol(1.1 * 10.0), 11);
        assert_eq!(ceil_tol(2.2), 3);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(10, 100, 1.96);
        assert!(lo < 0.1 && 0.1 < hi);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
        let (lo, _) = wilson_interval(0, 50, 1.96);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn large_binomial_paths_agree() {
        // compare the direct sum with the log-gamma route where both apply
        let n = 5_000_000usize;
        let k = 900_000usize;
        let direct = ln_binomial(n, k);
        let lg = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
        assert!(((direct - lg) / direct).abs() < 1e-9);
    }
}
