//! Experiment configuration and its flat `key = value` text form.

use std::path::PathBuf;
use std::sync::Arc;

use crate::decode::{DecoderId, Frontend, InnerDecoder, PipelineParams, SubsetParams};
use crate::design::{load_design, ColumnWeight, Density, DesignSpec};
use crate::error::{param, Error, Result};
use crate::metrics::{tests_for_rate, Criterion};
use crate::model::{k_from_theta, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeChoice {
    K(usize),
    /// `k = round(n^theta)`.
    Theta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestsChoice {
    Tests(usize),
    /// Smallest `T` whose rate does not exceed the target.
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignChoice {
    Bernoulli,
    Ncc,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Combinatorial,
    /// IID with `q = k / n`.
    Iid,
    Trim,
    Pad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontendChoice {
    Ml,
    DdPad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub size: SizeChoice,
    pub tests: TestsChoice,
    pub design: DesignChoice,
    pub nu: f64,
    pub prior: PriorKind,
    /// Resample trim/pad priors until the set has exactly k members.
    pub exact_k: bool,
    pub decoder: DecoderId,
    pub inner: DecoderId,
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub radius_mult: f64,
    pub frontend: FrontendChoice,
    pub ml_cap: u128,
    pub family_cap: Option<u128>,
    pub alpha: f64,
    /// Defaults by decoder: superset for COMP, exact for ML, subset otherwise.
    pub criterion: Option<Criterion>,
    pub trials: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub record_sets: bool,
    /// Record decode wall time; off by default so output stays byte-stable.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 1024,
            size: SizeChoice::Theta(0.5),
            tests: TestsChoice::Rate(0.5),
            design: DesignChoice::Ncc,
            nu: std::f64::consts::LN_2,
            prior: PriorKind::Combinatorial,
            exact_k: false,
            decoder: DecoderId::Dd,
            inner: DecoderId::Dd,
            eta_minus: 0.1,
            eta_plus: 0.1,
            radius_mult: 3.0,
            frontend: FrontendChoice::DdPad,
            ml_cap: 1_000_000,
            family_cap: None,
            alpha: 0.5,
            criterion: None,
            trials: 100,
            master_seed: 0,
            workers: 1,
            record_sets: false,
            timing: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Param(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => param(format!("bad boolean {other:?} for {key}")),
    }
}

impl ExperimentConfig {
    /// Sets one option by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "n" => self.n = parse_num(key, v)?,
            "k" => self.size = SizeChoice::K(parse_num(key, v)?),
            "theta" => self.size = SizeChoice::Theta(parse_num(key, v)?),
            "tests" | "t" => self.tests = TestsChoice::Tests(parse_num(key, v)?),
            "rate" => self.tests = TestsChoice::Rate(parse_num(key, v)?),
            "design" => {
                self.design = match v {
                    "bernoulli" => DesignChoice::Bernoulli,
                    "ncc" => DesignChoice::Ncc,
                    _ => match v.strip_prefix("file:") {
                        Some(path) if !path.is_empty() => DesignChoice::File(PathBuf::from(path)),
                        _ => return param(format!("unknown design {v:?}")),
                    },
                }
            }
            "nu" => self.nu = parse_num(key, v)?,
            "prior" => {
                self.prior = match v {
                    "combinatorial" => PriorKind::Combinatorial,
                    "iid" => PriorKind::Iid,
                    "trim" => PriorKind::Trim,
                    "pad" => PriorKind::Pad,
                    _ => return param(format!("unknown prior {v:?}")),
                }
            }
            "exact_k" => self.exact_k = parse_bool(key, v)?,
            "decoder" => self.decoder = v.parse()?,
            "inner" => self.inner = v.parse()?,
            "eta_minus" => self.eta_minus = parse_num(key, v)?,
            "eta_plus" => self.eta_plus = parse_num(key, v)?,
            "radius_mult" => self.radius_mult = parse_num(key, v)?,
            "frontend" => {
                self.frontend = match v {
                    "ml" => FrontendChoice::Ml,
                    "ddpad" => FrontendChoice::DdPad,
                    _ => return param(format!("unknown frontend {v:?}")),
                }
            }
            "ml_cap" => self.ml_cap = parse_num(key, v)?,
            "family_cap" => self.family_cap = Some(parse_num(key, v)?),
            "alpha" => self.alpha = parse_num(key, v)?,
            "criterion" => self.criterion = Some(v.parse()?),
            "trials" => self.trials = parse_num(key, v)?,
            "seed" => self.master_seed = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "record_sets" => self.record_sets = parse_bool(key, v)?,
            "timing" => self.timing = parse_bool(key, v)?,
            other => return param(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Applies `key = value` lines (`#` starts a comment) on top of `self`.
    /// A file may not set both `k` and `theta`, nor both `tests` and `rate`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: idx + 1, msg: format!("expected key = value, got {line:?}") })?;
            let key = key.trim().replace('-', "_");
            seen.insert(key.clone());
            self.set(&key, value).map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        }
        if seen.contains("k") && seen.contains("theta") {
            return param("config sets both k and theta");
        }
        if (seen.contains("tests") || seen.contains("t")) && seen.contains("rate") {
            return param("config sets both tests and rate");
        }
        Ok(())
    }

    pub fn criterion_or_default(&self) -> Criterion {
        self.criterion.unwrap_or(match self.decoder {
            DecoderId::Comp => Criterion::Superset(self.eta_plus),
            DecoderId::Ml => Criterion::Exact,
            DecoderId::Pipeline => Criterion::Subset(self.alpha),
            DecoderId::Dd | DecoderId::Subset => Criterion::Subset(self.eta_minus),
        })
    }

    pub fn subset_params(&self) -> SubsetParams {
        let frontend = match self.frontend {
            FrontendChoice::Ml => Frontend::BruteForceMl { cap: self.ml_cap },
            FrontendChoice::DdPad => Frontend::DdPad,
        };
        SubsetParams { eta_minus: self.eta_minus, radius_mult: self.radius_mult, frontend, family_cap: self.family_cap }
    }

    pub fn pipeline_params(&self) -> Result<PipelineParams> {
        let inner = match self.inner {
            DecoderId::Comp => InnerDecoder::Comp,
            DecoderId::Dd => InnerDecoder::Dd,
            DecoderId::Ml => InnerDecoder::Ml { cap: self.ml_cap },
            DecoderId::Subset => InnerDecoder::Subset(self.subset_params()),
            DecoderId::Pipeline => return param("pipeline cannot nest itself"),
        };
        Ok(PipelineParams::new(self.alpha, inner))
    }

    pub fn design_label(&self) -> &'static str {
        match self.design {
            DesignChoice::Bernoulli => "bernoulli",
            DesignChoice::Ncc => "ncc",
            DesignChoice::File(_) => "file",
        }
    }

    /// Validates the configuration and derives k, T, the design recipe and
    /// the prior.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.n == 0 {
            return param("n must be positive");
        }
        if self.trials == 0 {
            return param("trials must be at least 1");
        }
        if self.workers == 0 {
            return param("workers must be at least 1");
        }
        let k = match self.size {
            SizeChoice::K(k) => k,
            SizeChoice::Theta(theta) => k_from_theta(self.n, theta)?,
        };
        if k == 0 || k > self.n {
            return param(format!("need 1 <= k <= n, got k={k}, n={}", self.n));
        }
        let design_n = match self.decoder {
            DecoderId::Pipeline => None,
            _ => Some(self.n),
        };
        let spec = match &self.design {
            DesignChoice::Bernoulli => DesignSpec::Bernoulli(Density::Nu(self.nu)),
            DesignChoice::Ncc => DesignSpec::NearConstant(ColumnWeight::Nu(self.nu)),
            DesignChoice::File(path) => {
                if self.decoder == DecoderId::Pipeline {
                    return param("the deletion pipeline builds its own design; file designs are not supported");
                }
                DesignSpec::Explicit(Arc::new(load_design(path)?))
            }
        };
        let tests = match (&spec, self.tests) {
            (DesignSpec::Explicit(d), _) => d.tests(),
            (_, TestsChoice::Tests(t)) => t,
            (_, TestsChoice::Rate(r)) => tests_for_rate(self.n, k, r)?,
        };
        if let (DesignSpec::Explicit(d), Some(n)) = (&spec, design_n) {
            if d.n() != n {
                return param(format!("design file has {} items but n={n}", d.n()));
            }
        }
        if tests == 0 {
            return param("T must be positive");
        }
        let prior = match self.prior {
            PriorKind::Combinatorial => PriorSpec::Combinatorial { k },
            PriorKind::Iid => PriorSpec::Iid { q: k as f64 / self.n as f64 },
            PriorKind::Trim => PriorSpec::IidThenTrim { k },
            PriorKind::Pad => PriorSpec::IidThenPad { k },
        };
        prior.validate(self.n)?;
        let criterion = self.criterion_or_default();
        criterion.validate()?;
        if self.decoder == DecoderId::Pipeline {
            self.pipeline_params()?;
        }
        Ok(Resolved { k, tests, design: spec, prior, criterion })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub k: usize,
    pub tests: usize,
    pub design: DesignSpec,
    pub prior: PriorSpec,
    pub criterion: Criterion,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_overrides_defaults() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# sweep\nn = 4096\ntheta = 0.5\nrate=0.6 # trailing\ndecoder = comp\ncriterion = superset:0.2\n")
            .unwrap();
        assert_eq!(c.n, 4096);
        assert_eq!(c.size, SizeChoice::Theta(0.5));
        assert_eq!(c.tests, TestsChoice::Rate(0.6));
        assert_eq!(c.decoder, DecoderId::Comp);
        let r = c.resolve().unwrap();
        assert_eq!(r.k, 64);
        assert_eq!(r.criterion, Criterion::Superset(0.2));
    }

    #[test]
    fn exclusive_keys() {
        let mut c = ExperimentConfig::default();
        assert!(c.apply_text("k = 3\ntheta = 0.5\n").is_err());
        let mut c = ExperimentConfig::default();
        assert!(c.apply_text("tests = 3\nrate = 0.5\n").is_err());
    }

    #[test]
    fn bad_lines_report_line_number() {
        let mut c = ExperimentConfig::default();
        match c.apply_text("n = 5\nbogus\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.apply_text("n = x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn default_criteria() {
        let mut c = ExperimentConfig::default();
        for (d, want) in [
            ("comp", Criterion::Superset(0.1)),
            ("dd", Criterion::Subset(0.1)),
            ("ml", Criterion::Exact),
            ("pipeline", Criterion::Subset(0.5)),
        ] {
            c.set("decoder", d).unwrap();
            assert_eq!(c.criterion_or_default(), want);
        }
    }

    #[test]
    fn resolve_rejects_bad_values() {
        let c = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(c.resolve().is_err());
        let c = ExperimentConfig { size: SizeChoice::K(2000), ..Default::default() };
        assert!(c.resolve().is_err());
    }
}
