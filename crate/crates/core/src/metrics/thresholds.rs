use std::f64::consts::LN_2;
use std::io::Write;

use crate::error::{param, Result};

/// Sparsity exponent up to which the exact-recovery rate equals 1:
/// `ln 2 / (1 + ln 2)`.
pub const EXACT_PLATEAU_END: f64 = LN_2 / (1.0 + LN_2);

/// Optimal non-adaptive exact-recovery rate `min{1, ln2 (1-θ)/θ}`.
pub fn zeta(theta: f64) -> f64 {
    if theta <= EXACT_PLATEAU_END {
        1.0
    } else {
        LN_2 * (1.0 - theta) / theta
    }
}

/// Optimal SUPERSET rate `max{ζ(θ), ln 2}`.
pub fn r_star(theta: f64) -> f64 {
    zeta(theta).max(LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub theta: f64,
    pub zeta: f64,
    pub r_star: f64,
    /// Counting bound, also the SUBSET and two-sided optimum.
    pub counting_bound_rate: f64,
}

pub fn threshold_curve(grid: &[f64]) -> Result<Vec<ThresholdPoint>> {
    grid.iter()
        .map(|&theta| {
            if !(theta > 0.0 && theta < 1.0) {
                return param(format!("theta must lie in (0,1), got {theta}"));
            }
            Ok(ThresholdPoint { theta, zeta: zeta(theta), r_star: r_star(theta), counting_bound_rate: 1.0 })
        })
        .collect()
}

/// Writes `theta,zeta,r_star,counting_bound` rows.
pub fn thresholds_csv<W: Write>(points: &[ThresholdPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "zeta", "r_star", "counting_bound"])?;
    for p in points {
        w.write_record(&[
            p.theta.to_string(),
            p.zeta.to_string(),
            p.r_star.to_string(),
            p.counting_bound_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_points() {
        assert_eq!(zeta(1.0 / 3.0), 1.0);
        assert_eq!(r_star(1.0 / 3.0), 1.0);
        assert!((zeta(0.5) - LN_2).abs() < 1e-15);
        assert!((r_star(0.5) - LN_2).abs() < 1e-15);
        assert!((zeta(0.9) - LN_2 / 9.0).abs() < 1e-15);
        assert_eq!(r_star(0.9), LN_2);
    }

    #[test]
    fn plateau_boundary() {
        assert!((EXACT_PLATEAU_END - 0.409_383_89).abs() < 1e-6);
        assert_eq!(zeta(EXACT_PLATEAU_END), 1.0);
        assert!(zeta(EXACT_PLATEAU_END + 1e-12) < 1.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(threshold_curve(&[0.0]).is_err());
        assert!(threshold_curve(&[1.0]).is_err());
    }

    #[test]
    fn csv_header() {
        let pts = threshold_curve(&[0.5]).unwrap();
        let mut buf = Vec::new();
        thresholds_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,zeta,r_star,counting_bound\n0.5,"));
    }
}
