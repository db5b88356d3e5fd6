//! Masked-item counts as a function of the rate.

use std::io::Write;

use rayon::prelude::*;

use crate::analysis::masking_report;
use crate::design::DesignSpec;
use crate::error::{param, Error, Result};
use crate::metrics::tests_for_rate;
use crate::model::{sample_defectives, PriorSpec};
use crate::seed::{stream_rng, stream_seed, trial_seed, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct MaskingPoint {
    pub rate: f64,
    pub tests: usize,
    pub mean_masked_defectives: f64,
    pub mean_masked_nondefectives: f64,
    /// Fraction of trials with at least one masked defective.
    pub any_masked_defective: f64,
    /// 10%, 50% and 90% quantiles (nearest rank).
    pub masked_defective_quantiles: [usize; 3],
    pub masked_nondefective_quantiles: [usize; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskingSweep {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub points: Vec<MaskingPoint>,
}

fn quantiles(mut v: Vec<usize>) -> [usize; 3] {
    v.sort_unstable();
    let at = |q: f64| v[((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
    [at(0.1), at(0.5), at(0.9)]
}

/// For each target rate, draws `trials` (S, X) pairs and tallies masked
/// items. Trial `i` reuses the same defective set and design seed at every
/// rate, so rate points are paired.
pub fn masking_sweep(
    n: usize,
    k: usize,
    rates: &[f64],
    design: &DesignSpec,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<MaskingSweep> {
    if trials == 0 || workers == 0 {
        return param("trials and workers must be at least 1");
    }
    if let Some(r) = rates.iter().find(|r| r.is_nan() || **r <= 0.0) {
        return param(format!("rates must be positive, got {r}"));
    }
    let prior = PriorSpec::Combinatorial { k };
    prior.validate(n)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let mut points = Vec::with_capacity(rates.len());
    for &rate in rates {
        let tests = tests_for_rate(n, k, rate)?;
        let counts: Vec<(usize, usize)> = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|i| {
                    let ts = trial_seed(seed, i as u64);
                    let truth = sample_defectives(&prior, n, &mut stream_rng(ts, Stream::Prior))?;
                    let x = design.build(n, k, tests, stream_seed(ts, Stream::Design))?;
                    let rep = masking_report(&x, &truth);
                    Ok((rep.masked_defectives, rep.masked_nondefectives))
                })
                .collect::<Result<_>>()
        })?;
        let t = trials as f64;
        let defs: Vec<usize> = counts.iter().map(|c| c.0).collect();
        let nondefs: Vec<usize> = counts.iter().map(|c| c.1).collect();
        points.push(MaskingPoint {
            rate,
            tests,
            mean_masked_defectives: defs.iter().sum::<usize>() as f64 / t,
            mean_masked_nondefectives: nondefs.iter().sum::<usize>() as f64 / t,
            any_masked_defective: defs.iter().filter(|&&d| d > 0).count() as f64 / t,
            masked_defective_quantiles: quantiles(defs),
            masked_nondefective_quantiles: quantiles(nondefs),
        });
    }
    Ok(MaskingSweep { n, k, trials, points })
}

pub fn masking_csv<W: Write>(sweep: &MaskingSweep, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "k",
        "rate",
        "T",
        "trials",
        "mean_masked_def",
        "mean_masked_nondef",
        "freq_any_masked_def",
        "q10_masked_def",
        "q50_masked_def",
        "q90_masked_def",
        "q10_masked_nondef",
        "q50_masked_nondef",
        "q90_masked_nondef",
    ])?;
    for p in &sweep.points {
        let mut row = vec![
            sweep.n.to_string(),
            sweep.k.to_string(),
            p.rate.to_string(),
            p.tests.to_string(),
            sweep.trials.to_string(),
            p.mean_masked_defectives.to_string(),
            p.mean_masked_nondefectives.to_string(),
            p.any_masked_defective.to_string(),
        ];
        row.extend(p.masked_defective_quantiles.iter().map(|q| q.to_string()));
        row.extend(p.masked_nondefective_quantiles.iter().map(|q| q.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
