//! Monte Carlo experiment runner.
//!
//! Trials are independent: trial `i` draws everything from generators seeded
//! by [`trial_seed`]`(master_seed, i)`, so results do not depend on the
//! worker count and records are always emitted in trial order.

mod config;
mod masking;
pub mod oracle;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::masking_report;
use crate::decode::{comp_decode, deletion_pipeline, dd_decode, ml_oracle, subset_decode};
use crate::decode::DecoderId;
use crate::design::TestDesign;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, wilson_interval};
use crate::model::{generate_outcomes, sample_defectives, sample_defectives_exact, DefectiveSet};
use crate::seed::{stream_rng, stream_seed, trial_seed, Stream};

pub use config::{DesignChoice, ExperimentConfig, FrontendChoice, PriorKind, Resolved, SizeChoice, TestsChoice};
pub use masking::{masking_csv, masking_sweep, MaskingPoint, MaskingSweep};

/// Per-trial refusals above this fraction abort the experiment.
pub const REFUSAL_BUDGET: f64 = 0.01;

const EXACT_K_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Success,
    Failure,
    /// The decoder declined (enumeration cap); excluded from the error rate.
    Refused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub tests: usize,
    pub est_size: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub outcome: TrialOutcome,
    pub masked_defectives: usize,
    pub masked_nondefectives: usize,
    pub elapsed_us: u64,
    pub defectives: Option<Vec<usize>>,
    pub estimate: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub n: usize,
    pub k: usize,
    pub tests: usize,
    pub trials: usize,
    pub included: usize,
    pub failures: usize,
    pub refused: usize,
    pub p_error: f64,
    /// 95% Wilson interval for the error probability.
    pub wilson: (f64, f64),
    pub records: Vec<TrialRecord>,
}

impl ExperimentSummary {
    pub fn check_refusal_budget(&self) -> Result<()> {
        if self.refused as f64 > REFUSAL_BUDGET * self.trials as f64 {
            return Err(Error::RefusalBudget { refused: self.refused, trials: self.trials });
        }
        Ok(())
    }
}

fn run_trial(cfg: &ExperimentConfig, res: &Resolved, trial: usize) -> Result<TrialRecord> {
    let seed = trial_seed(cfg.master_seed, trial as u64);
    let mut prior_rng = stream_rng(seed, Stream::Prior);
    let truth = if cfg.exact_k && res.prior.target_k().is_some() {
        sample_defectives_exact(&res.prior, cfg.n, &mut prior_rng, EXACT_K_ATTEMPTS)?
    } else {
        sample_defectives(&res.prior, cfg.n, &mut prior_rng)?
    };

    let started = Instant::now();
    let (decoded, design, observed): (Result<Vec<usize>>, TestDesign, DefectiveSet) =
        if cfg.decoder == DecoderId::Pipeline {
            let params = cfg.pipeline_params()?;
            match deletion_pipeline(&res.design, &truth, res.tests, &params, seed) {
                Ok(out) => (Ok(out.estimate), out.design, out.reduced_truth),
                Err(e @ Error::Refused { .. }) => {
                    (Err(e), TestDesign::identity(1), DefectiveSet::empty(1))
                }
                Err(e) => return Err(e),
            }
        } else {
            let design = res.design.build(cfg.n, res.k, res.tests, stream_seed(seed, Stream::Design))?;
            let y = generate_outcomes(&design, &truth)?;
            let est = match cfg.decoder {
                DecoderId::Comp => comp_decode(&design, &y),
                DecoderId::Dd => dd_decode(&design, &y),
                DecoderId::Ml => ml_oracle(&design, &y, res.k, cfg.ml_cap),
                DecoderId::Subset => subset_decode(&design, &y, res.k, &cfg.subset_params()).map(|o| o.estimate),
                DecoderId::Pipeline => unreachable!(),
            };
            (est, design, truth.clone())
        };
    let elapsed_us = if cfg.timing { started.elapsed().as_micros() as u64 } else { 0 };

    let estimate = match decoded {
        Ok(e) => Some(e),
        Err(Error::Refused { .. }) => None,
        // no size-k set fits the outcomes (possible when |S| != k)
        Err(Error::Internal(_)) if cfg.decoder == DecoderId::Ml => Some(Vec::new()),
        Err(e) => return Err(e),
    };
    let mask = if estimate.is_some() { masking_report(&design, &observed) } else { Default::default() };
    let mut rec = TrialRecord {
        trial,
        seed,
        k: truth.len(),
        tests: res.tests,
        est_size: 0,
        false_negatives: 0,
        false_positives: 0,
        outcome: TrialOutcome::Refused,
        masked_defectives: mask.masked_defectives,
        masked_nondefectives: mask.masked_nondefectives,
        elapsed_us,
        defectives: cfg.record_sets.then(|| truth.members().to_vec()),
        estimate: None,
    };
    if let Some(est) = estimate {
        let ev = evaluate(&res.criterion, &truth, &est);
        rec.est_size = est.len();
        rec.false_negatives = ev.false_negatives;
        rec.false_positives = ev.false_positives;
        rec.outcome = if ev.success { TrialOutcome::Success } else { TrialOutcome::Failure };
        rec.estimate = cfg.record_sets.then_some(est);
    }
    Ok(rec)
}

/// Runs every trial of the configured experiment on `cfg.workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    let res = cfg.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let records: Vec<TrialRecord> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, &res, i)).collect::<Result<_>>())?;
    Ok(summarize(cfg.n, res.k, res.tests, records))
}

pub fn summarize(n: usize, k: usize, tests: usize, records: Vec<TrialRecord>) -> ExperimentSummary {
    let refused = records.iter().filter(|r| r.outcome == TrialOutcome::Refused).count();
    let failures = records.iter().filter(|r| r.outcome == TrialOutcome::Failure).count();
    let included = records.len() - refused;
    let p_error = if included == 0 { 0.0 } else { failures as f64 / included as f64 };
    ExperimentSummary {
        n,
        k,
        tests,
        trials: records.len(),
        included,
        failures,
        refused,
        p_error,
        wilson: wilson_interval(failures, included, 1.96),
        records,
    }
}

pub const TRIAL_CSV_HEADER: [&str; 15] = [
    "trial", "seed", "n", "k", "T", "design", "decoder", "criterion", "fn", "fp", "est_size", "success",
    "masked_def", "masked_nondef", "elapsed_us",
];

fn join_one_based(items: &[usize]) -> String {
    items.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}

/// Writes one row per trial. With `record_sets`, two extra columns hold the
/// 1-based defective set and estimate, semicolon-separated.
pub fn write_trials_csv<W: Write>(cfg: &ExperimentConfig, summary: &ExperimentSummary, out: W) -> Result<()> {
    let criterion = cfg.criterion_or_default().to_string();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = TRIAL_CSV_HEADER.to_vec();
    if cfg.record_sets {
        header.extend(["defectives", "estimate"]);
    }
    w.write_record(&header)?;
    for r in &summary.records {
        let refused = r.outcome == TrialOutcome::Refused;
        let num = |v: usize| if refused { String::new() } else { v.to_string() };
        let mut row = vec![
            r.trial.to_string(),
            r.seed.to_string(),
            summary.n.to_string(),
            r.k.to_string(),
            r.tests.to_string(),
            cfg.design_label().to_string(),
            cfg.decoder.to_string(),
            criterion.clone(),
            num(r.false_negatives),
            num(r.false_positives),
            num(r.est_size),
            match r.outcome {
                TrialOutcome::Success => "1".into(),
                TrialOutcome::Failure => "0".into(),
                TrialOutcome::Refused => "refused".into(),
            },
            r.masked_defectives.to_string(),
            r.masked_nondefectives.to_string(),
            r.elapsed_us.to_string(),
        ];
        if cfg.record_sets {
            row.push(r.defectives.as_deref().map(join_one_based).unwrap_or_default());
            row.push(r.estimate.as_deref().map(join_one_based).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_comp_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("id.txt");
        crate::design::save_design(&TestDesign::identity(30), &path).unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&format!("n = 30\nk = 4\ndesign = file:{}\ndecoder = comp\ncriterion = exact\ntrials = 50\n", path.display()))
            .unwrap();
        let s = run_experiment(&cfg).unwrap();
        assert_eq!(s.failures, 0);
        assert_eq!(s.p_error, 0.0);
        assert_eq!(s.tests, 30);
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let base = ExperimentConfig { n: 500, size: SizeChoice::K(8), trials: 40, master_seed: 17, ..Default::default() };
        let one = run_experiment(&base).unwrap();
        let four = run_experiment(&ExperimentConfig { workers: 4, ..base.clone() }).unwrap();
        assert_eq!(one.records, four.records);
    }

    #[test]
    fn refusals_are_excluded() {
        let cfg = ExperimentConfig {
            n: 200,
            size: SizeChoice::K(10),
            tests: TestsChoice::Tests(20),
            decoder: DecoderId::Ml,
            ml_cap: 10,
            trials: 5,
            ..Default::default()
        };
        let s = run_experiment(&cfg).unwrap();
        assert_eq!(s.refused, 5);
        assert_eq!(s.included, 0);
        assert!(matches!(s.check_refusal_budget(), Err(Error::RefusalBudget { refused: 5, trials: 5 })));
    }

    #[test]
    fn csv_has_expected_header() {
        let cfg = ExperimentConfig { n: 100, size: SizeChoice::K(3), trials: 2, record_sets: true, ..Default::default() };
        let s = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&cfg, &s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "trial,seed,n,k,T,design,decoder,criterion,fn,fp,est_size,success,masked_def,masked_nondef,elapsed_us,defectives,estimate"
        );
        assert_eq!(text.lines().count(), 3);
    }
}
