//! Multiplicative Chernoff bounds for a sum of `n` i.i.d. Bernoulli(`mu`)
//! variables, in the standard and weakened quadratic forms.

use crate::error::{param, Result};

fn check(n: usize, mu: f64, delta: f64, lower: bool) -> Result<()> {
    if n == 0 {
        return param("n must be at least 1");
    }
    if !(mu > 0.0 && mu < 1.0) {
        return param(format!("mu must lie in (0,1), got {mu}"));
    }
    let ok = if lower { delta > 0.0 && delta <= 1.0 } else { delta > 0.0 && delta.is_finite() };
    if !ok {
        return param(format!("delta out of range: {delta}"));
    }
    Ok(())
}

/// Bound on `P(X >= (1+δ) n μ)`: `exp(-nμ((1+δ)ln(1+δ) - δ))`.
pub fn chernoff_upper(n: usize, mu: f64, delta: f64) -> Result<f64> {
    check(n, mu, delta, false)?;
    let rate = (1.0 + delta) * delta.ln_1p() - delta;
    Ok((-(n as f64) * mu * rate).exp())
}

/// Bound on `P(X <= (1-δ) n μ)`: `exp(-nμ((1-δ)ln(1-δ) + δ))`, with
/// `0 ln 0 = 0` at `δ = 1`.
pub fn chernoff_lower(n: usize, mu: f64, delta: f64) -> Result<f64> {
    check(n, mu, delta, true)?;
    let xlogx = if delta == 1.0 { 0.0 } else { (1.0 - delta) * (-delta).ln_1p() };
    Ok((-(n as f64) * mu * (xlogx + delta)).exp())
}

/// `exp(-δ² nμ / 3)`.
pub fn chernoff_weak_upper(n: usize, mu: f64, delta: f64) -> Result<f64> {
    check(n, mu, delta, false)?;
    Ok((-delta * delta * n as f64 * mu / 3.0).exp())
}

/// `exp(-δ² nμ / 2)`.
pub fn chernoff_weak_lower(n: usize, mu: f64, delta: f64) -> Result<f64> {
    check(n, mu, delta, true)?;
    Ok((-delta * delta * n as f64 * mu / 2.0).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_delta_gives_trivial_bound() {
        for f in [chernoff_upper, chernoff_lower, chernoff_weak_upper, chernoff_weak_lower] {
            assert!((f(10, 0.3, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_lower_deviation() {
        let b = chernoff_lower(20, 0.1, 1.0).unwrap();
        assert!((b - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn domains() {
        assert!(chernoff_upper(0, 0.5, 0.1).is_err());
        assert!(chernoff_upper(5, 1.0, 0.1).is_err());
        assert!(chernoff_upper(5, 0.5, 0.0).is_err());
        assert!(chernoff_upper(5, 0.5, 3.0).is_ok());
        assert!(chernoff_lower(5, 0.5, 1.5).is_err());
        assert!(chernoff_weak_lower(5, 0.5, 1.01).is_err());
    }

    #[test]
    fn strong_below_weak() {
        for i in 1..=100 {
            let d = i as f64 / 100.0;
            assert!(chernoff_upper(50, 0.2, d).unwrap() <= chernoff_weak_upper(50, 0.2, d).unwrap());
            assert!(chernoff_lower(50, 0.2, d).unwrap() <= chernoff_weak_lower(50, 0.2, d).unwrap());
        }
    }
}
