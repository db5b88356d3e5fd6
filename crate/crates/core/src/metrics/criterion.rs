use std::fmt;
use std::str::FromStr;

use crate::error::{param, Error, Result};
use crate::model::DefectiveSet;

use super::{ceil_tol, floor_tol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Exact,
    /// `estimate ⊆ truth`, at most `eta_minus * k` misses.
    Subset(f64),
    /// `estimate ⊇ truth`, at most `eta_plus * k` extras.
    Superset(f64),
    /// At most `beta * k` false negatives and at most `beta * k` false positives.
    TwoSided(f64),
    /// At most `a1 * k` false negatives and `a2 * k` false positives.
    Asymmetric(f64, f64),
}

impl Criterion {
    pub fn validate(&self) -> Result<()> {
        let unit_open = |x: f64| x > 0.0 && x < 1.0;
        match *self {
            Criterion::Exact => Ok(()),
            Criterion::Subset(e) if (0.0..=1.0).contains(&e) => Ok(()),
            Criterion::Superset(e) if e >= 0.0 && e.is_finite() => Ok(()),
            Criterion::TwoSided(b) if unit_open(b) => Ok(()),
            Criterion::Asymmetric(a1, a2) if unit_open(a1) && unit_open(a2) => Ok(()),
            other => param(format!("criterion parameters out of range: {other}")),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Criterion::Exact => write!(f, "exact"),
            Criterion::Subset(e) => write!(f, "subset:{e}"),
            Criterion::Superset(e) => write!(f, "superset:{e}"),
            Criterion::TwoSided(b) => write!(f, "two-sided:{b}"),
            Criterion::Asymmetric(a1, a2) => write!(f, "asymmetric:{a1}/{a2}"),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    /// Accepts `exact`, `subset:ETA`, `superset:ETA`, `two-sided:BETA` and
    /// `asymmetric:A1/A2`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |v: &str| -> Result<f64> {
            v.trim().parse::<f64>().map_err(|_| Error::Param(format!("bad criterion parameter {v:?} in {s:?}")))
        };
        let c = match name.trim() {
            "exact" => Criterion::Exact,
            "subset" => Criterion::Subset(num(arg)?),
            "superset" => Criterion::Superset(num(arg)?),
            "two-sided" => Criterion::TwoSided(num(arg)?),
            "asymmetric" => {
                let (a, b) = arg
                    .split_once('/')
                    .ok_or_else(|| Error::Param(format!("asymmetric criterion needs A1/A2, got {s:?}")))?;
                Criterion::Asymmetric(num(a)?, num(b)?)
            }
            other => return param(format!("unknown criterion {other:?}")),
        };
        c.validate()?;
        Ok(c)
    }
}

/// How strictly the estimate size is checked for subset/superset criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SizeMode {
    /// `|estimate| >= floor((1-eta)k)` for subset, `<= ceil((1+eta)k)` for
    /// superset.
    #[default]
    Window,
    /// The size must equal the rounded target exactly.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub success: bool,
    pub false_negatives: usize,
    pub false_positives: usize,
}

pub fn evaluate(criterion: &Criterion, truth: &DefectiveSet, estimate: &[usize]) -> Evaluation {
    evaluate_with_mode(criterion, truth, estimate, SizeMode::Window)
}

pub fn evaluate_with_mode(criterion: &Criterion, truth: &DefectiveSet, estimate: &[usize], mode: SizeMode) -> Evaluation {
    let fp = estimate.iter().filter(|&&i| !truth.contains(i)).count();
    let fnn = truth.len() - (estimate.len() - fp);
    let k = truth.len() as f64;
    let size = estimate.len();
    let within = |count: usize, frac: f64| count as f64 <= frac * k + 1e-9;
    let success = match *criterion {
        Criterion::Exact => fp == 0 && fnn == 0,
        Criterion::Subset(eta) => {
            let target = floor_tol((1.0 - eta) * k);
            fp == 0
                && match mode {
                    SizeMode::Window => size >= target,
                    SizeMode::Strict => size == target,
                }
        }
        Criterion::Superset(eta) => {
            let target = ceil_tol((1.0 + eta) * k);
            fnn == 0
                && match mode {
                    SizeMode::Window => size <= target,
                    SizeMode::Strict => size == target,
                }
        }
        Criterion::TwoSided(beta) => within(fp, beta) && within(fnn, beta),
        Criterion::Asymmetric(a1, a2) => within(fnn, a1) && within(fp, a2),
    };
    Evaluation { success, false_negatives: fnn, false_positives: fp }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(m: &[usize]) -> DefectiveSet {
        DefectiveSet::new(10, m.to_vec()).unwrap()
    }

    #[test]
    fn exact_match_passes_everything() {
        let t = truth(&[1, 2, 3, 4]);
        for c in [
            Criterion::Exact,
            Criterion::Subset(0.25),
            Criterion::Superset(0.0),
            Criterion::TwoSided(0.1),
            Criterion::Asymmetric(0.1, 0.2),
        ] {
            assert!(evaluate(&c, &t, &[1, 2, 3, 4]).success, "{c}");
        }
    }

    #[test]
    fn subset_size_floor() {
        let t = truth(&[1, 2, 3, 4]);
        let e = [1, 2, 3];
        assert!(evaluate(&Criterion::Subset(0.25), &t, &e).success);
        assert!(evaluate(&Criterion::Subset(0.2), &t, &e).success);
        assert!(evaluate(&Criterion::Subset(0.1), &t, &e).success);
        assert!(!evaluate(&Criterion::Subset(0.0), &t, &e).success);
        assert!(!evaluate(&Criterion::Subset(0.25), &t, &[1, 2, 5]).success);
        assert!(evaluate_with_mode(&Criterion::Subset(0.25), &t, &e, SizeMode::Strict).success);
        assert!(!evaluate_with_mode(&Criterion::Subset(0.25), &t, &[1, 2, 3, 4], SizeMode::Strict).success);
    }

    #[test]
    fn superset_size_bound() {
        let t = truth(&[1]);
        assert!(evaluate(&Criterion::Superset(1.0), &t, &[1, 2]).success);
        assert!(!evaluate(&Criterion::Superset(0.0), &t, &[1, 2]).success);
        assert!(!evaluate(&Criterion::Superset(5.0), &t, &[2, 3]).success);
    }

    #[test]
    fn counts_reported() {
        let ev = evaluate(&Criterion::Exact, &truth(&[1, 2, 3]), &[2, 3, 7, 8]);
        assert_eq!((ev.false_negatives, ev.false_positives), (1, 2));
    }

    #[test]
    fn parse_and_display() {
        for s in ["exact", "subset:0.1", "superset:0.25", "two-sided:0.2", "asymmetric:0.1/0.3"] {
            let c: Criterion = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("subset:1.5".parse::<Criterion>().is_err());
        assert!("two-sided:0".parse::<Criterion>().is_err());
        assert!("fuzzy".parse::<Criterion>().is_err());
    }
}
