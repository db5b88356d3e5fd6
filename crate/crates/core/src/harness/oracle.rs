//! Self-checks that compare the fast routines against naive dense-matrix
//! oracles or Monte Carlo at pinned sizes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use statrs::distribution::DiscreteCDF;

use crate::analysis::{explained_tests, good_test_counts, masking_report, posterior_uniformity_check,
    posterior_uniformity_check_with, satisfying_sets};
use crate::decode::{ml_oracle, subset_decode, Frontend, SubsetParams};
use crate::design::{bernoulli_design, ncc_design, TestDesign};
use crate::error::{Error, Result};
use crate::metrics::{chernoff_lower, chernoff_upper, chernoff_weak_lower, chernoff_weak_upper, floor_tol};
use crate::model::{generate_outcomes, sample_defectives, DefectiveSet, PriorSpec};
use crate::seed::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    SubsetArgmax,
    MlEnum,
    PosteriorUniformity,
    ChernoffDominance,
    ExplainedNaive,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::SubsetArgmax, Suite::MlEnum, Suite::PosteriorUniformity, Suite::ChernoffDominance, Suite::ExplainedNaive];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::SubsetArgmax => "subset-argmax",
            Suite::MlEnum => "ml-enum",
            Suite::PosteriorUniformity => "posterior-uniformity",
            Suite::ChernoffDominance => "chernoff-dominance",
            Suite::ExplainedNaive => "explained-naive",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| Error::Param(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub suite: Suite,
    pub cases: usize,
    pub failures: usize,
    /// Descriptions of the first few failing cases.
    pub notes: Vec<String>,
}

impl OracleReport {
    fn new(suite: Suite) -> Self {
        OracleReport { suite, cases: 0, failures: 0, notes: Vec::new() }
    }

    fn record(&mut self, ok: bool, note: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < 10 {
                self.notes.push(note());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{} {}: {}/{} agree", verdict, self.suite, self.cases - self.failures, self.cases)?;
        for note in &self.notes {
            write!(f, "\n  {note}")?;
        }
        Ok(())
    }
}

pub fn oracle_check(suite: Suite, seed: u64) -> Result<OracleReport> {
    let mut rng = rng_from_seed(seed);
    match suite {
        Suite::SubsetArgmax => subset_argmax(&mut rng),
        Suite::MlEnum => ml_enum(&mut rng),
        Suite::PosteriorUniformity => posterior_uniformity(seed),
        Suite::ChernoffDominance => chernoff_dominance(&mut rng),
        Suite::ExplainedNaive => explained_naive(&mut rng),
    }
}

/// A random small instance: either design family, combinatorial prior.
fn small_instance(rng: &mut SimRng, n: usize, k: usize) -> Result<(TestDesign, DefectiveSet)> {
    let tests = rng.random_range(1..=n + 2);
    let seed = rng.random();
    let design = if rng.random_bool(0.5) {
        bernoulli_design(n, tests, rng.random_range(0.1..0.6), seed)?
    } else {
        ncc_design(n, tests, rng.random_range(1..=3.min(tests)), seed)?
    };
    let truth = sample_defectives(&PriorSpec::Combinatorial { k }, n, rng)?;
    Ok((design, truth))
}

fn dense(design: &TestDesign) -> Vec<Vec<bool>> {
    (0..design.tests()).map(|t| (0..design.n()).map(|i| design.contains(t, i)).collect()).collect()
}

fn dense_outcomes(x: &[Vec<bool>], s: &[usize]) -> Vec<bool> {
    x.iter().map(|row| s.iter().any(|&i| row[i])).collect()
}

fn naive_explained(x: &[Vec<bool>], y: &[bool], cand: &[usize]) -> Vec<usize> {
    let n = x.first().map_or(0, Vec::len);
    let clean: Vec<bool> = (0..n).map(|i| (0..x.len()).all(|t| y[t] || !x[t][i])).collect();
    (0..x.len()).filter(|&t| y[t] && cand.iter().any(|&i| x[t][i] && clean[i])).collect()
}

fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    all.sort();
    all
}

fn subset_argmax(rng: &mut SimRng) -> Result<OracleReport> {
    let mut rep = OracleReport::new(Suite::SubsetArgmax);
    for case in 0..200 {
        let n = rng.random_range(4..=14);
        let k = rng.random_range(1..=5.min(n));
        let eta = [0.2, 0.25, 0.4][case % 3];
        let (design, truth) = small_instance(rng, n, k)?;
        let y = generate_outcomes(&design, &truth)?;
        let base = if case % 2 == 0 {
            truth.members().to_vec()
        } else {
            let mut b = rand::seq::index::sample(rng, n, k).into_vec();
            b.sort_unstable();
            b
        };
        let params = SubsetParams::new(eta, Frontend::Provided(base.clone()));
        let got = subset_decode(&design, &y, k, &params)?.estimate;

        let x = dense(&design);
        let size = floor_tol((1.0 - eta) * k as f64);
        let radius = floor_tol(3.0 * eta * k as f64);
        let mut best: (usize, Vec<usize>) = (0, Vec::new());
        if size > 0 {
            for cand in combinations(n, size) {
                let dist = cand.iter().filter(|i| !base.contains(i)).count()
                    + base.iter().filter(|i| !cand.contains(i)).count();
                if dist > radius {
                    continue;
                }
                let score = naive_explained(&x, y.bits(), &cand).len();
                if score > best.0 {
                    best = (score, cand);
                }
            }
        }
        rep.record(got == best.1, || format!("n={n} k={k} eta={eta}: got {got:?}, oracle {:?}", best.1));
    }
    Ok(rep)
}

fn ml_enum(rng: &mut SimRng) -> Result<OracleReport> {
    let mut rep = OracleReport::new(Suite::MlEnum);
    for _ in 0..200 {
        let n = rng.random_range(3..=12);
        let k = rng.random_range(1..=4.min(n));
        let (design, truth) = small_instance(rng, n, k)?;
        let y = generate_outcomes(&design, &truth)?;
        let x = dense(&design);
        let oracle: Vec<Vec<usize>> =
            combinations(n, k).into_iter().filter(|c| dense_outcomes(&x, c) == y.bits()).collect();
        let fast = satisfying_sets(&design, &y, k, u128::MAX)?;
        let first = ml_oracle(&design, &y, k, u128::MAX)?;
        let ok = fast == oracle && Some(&first) == oracle.first();
        rep.record(ok, || format!("n={n} k={k}: {} fast vs {} naive satisfying sets", fast.len(), oracle.len()));
    }
    Ok(rep)
}

/// The three pinned designs on six items used by the posterior check.
pub fn uniformity_designs() -> Vec<TestDesign> {
    let rows = [
        vec![vec![0, 1], vec![2, 3], vec![4, 5]],
        vec![vec![0, 1, 2], vec![2, 3, 4], vec![0, 4, 5], vec![1, 3, 5]],
        vec![vec![0, 1, 2, 3], vec![3, 4, 5]],
    ];
    rows.into_iter().map(|r| TestDesign::from_rows(6, r).expect("valid design")).collect()
}

/// Draws size-2 sets on six items, biased toward sets containing item 0.
pub fn biased_pair_sampler(rng: &mut SimRng) -> DefectiveSet {
    loop {
        let s = sample_defectives(&PriorSpec::Combinatorial { k: 2 }, 6, rng).expect("valid prior");
        if s.contains(0) || rng.random_bool(0.5) {
            return s;
        }
    }
}

fn posterior_uniformity(seed: u64) -> Result<OracleReport> {
    let mut rep = OracleReport::new(Suite::PosteriorUniformity);
    for (d, design) in uniformity_designs().iter().enumerate() {
        let r = posterior_uniformity_check(design, 2, 100_000, seed.wrapping_add(d as u64))?;
        rep.record(r.all_uniform(0.01), || format!("design {d}: min p-value {:?}", r.min_p_value()));
    }
    // The control must be rejected on at least one design.
    let mut rejected = false;
    for (d, design) in uniformity_designs().iter().enumerate() {
        let r = posterior_uniformity_check_with(design, 2, 100_000, seed.wrapping_add(100 + d as u64), |rng| {
            biased_pair_sampler(rng)
        })?;
        rejected |= !r.all_uniform(0.01);
    }
    rep.record(rejected, || "biased sampler was not rejected".into());
    Ok(rep)
}

/// Grid used by the Chernoff suite: bound dominance over a 5x5x5 grid.
pub const CHERNOFF_N: [usize; 5] = [10, 30, 100, 300, 1000];
pub const CHERNOFF_MU: [f64; 5] = [0.02, 0.1, 0.25, 0.5, 0.8];
pub const CHERNOFF_DELTA: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

/// `P(X >= hi)` and `P(X <= lo)` for `X ~ Bin(n, mu)`.
fn exact_tails(n: usize, mu: f64, hi: f64, lo: f64) -> Result<(f64, f64)> {
    let b = statrs::distribution::Binomial::new(mu, n as u64).map_err(|e| Error::Internal(e.to_string()))?;
    let first = hi.ceil() as u64;
    let up = if first == 0 { 1.0 } else { b.sf(first - 1) };
    let down = if lo < 0.0 { 0.0 } else { b.cdf(lo.floor() as u64) };
    Ok((up, down))
}

fn chernoff_dominance(rng: &mut SimRng) -> Result<OracleReport> {
    let mut rep = OracleReport::new(Suite::ChernoffDominance);
    const SAMPLES: usize = 100_000;
    for n in CHERNOFF_N {
        for mu in CHERNOFF_MU {
            let dist = Binomial::new(n as u64, mu).map_err(|e| Error::Internal(e.to_string()))?;
            let draws: Vec<u64> = (0..SAMPLES).map(|_| dist.sample(rng)).collect();
            let mean = n as f64 * mu;
            for delta in CHERNOFF_DELTA {
                let upper = draws.iter().filter(|&&x| x as f64 >= (1.0 + delta) * mean).count() as f64 / SAMPLES as f64;
                let lower = draws.iter().filter(|&&x| x as f64 <= (1.0 - delta) * mean).count() as f64 / SAMPLES as f64;
                let (bu, bl) = (chernoff_upper(n, mu, delta)?, chernoff_lower(n, mu, delta)?);
                let (wu, wl) = (chernoff_weak_upper(n, mu, delta)?, chernoff_weak_lower(n, mu, delta)?);
                let (eu, el) = exact_tails(n, mu, (1.0 + delta) * mean, (1.0 - delta) * mean)?;
                // sampling noise can push an estimate past a nearly tight bound
                let noise = |b: f64| 3.0 * (b * (1.0 - b) / SAMPLES as f64).sqrt();
                let exact_ok = eu <= bu * (1.0 + 1e-9) && el <= bl * (1.0 + 1e-9);
                let sampled_ok = upper <= bu + noise(bu) && lower <= bl + noise(bl);
                let ok = exact_ok && sampled_ok && wu >= bu && wl >= bl;
                rep.record(ok, || {
                    format!("n={n} mu={mu} delta={delta}: tails ({upper}, {lower}) bounds ({bu}, {bl}) weak ({wu}, {wl})")
                });
            }
        }
    }
    Ok(rep)
}

fn explained_naive(rng: &mut SimRng) -> Result<OracleReport> {
    let mut rep = OracleReport::new(Suite::ExplainedNaive);
    for _ in 0..500 {
        let n = rng.random_range(2..=16);
        let k = rng.random_range(1..=4.min(n));
        let (design, truth) = small_instance(rng, n, k)?;
        let y = generate_outcomes(&design, &truth)?;
        let x = dense(&design);
        let s = truth.members();
        let cand_len = rng.random_range(0..=n);
        let mut cand = rand::seq::index::sample(rng, n, cand_len).into_vec();
        cand.sort_unstable();

        let explained_ok = explained_tests(&design, &y, &cand).explained_tests == naive_explained(&x, y.bits(), &cand);
        let good: Vec<usize> = s
            .iter()
            .map(|&i| (0..x.len()).filter(|&t| x[t][i] && s.iter().all(|&j| j == i || !x[t][j])).count())
            .collect();
        let good_ok = good_test_counts(&design, &truth) == good;
        let masked: Vec<usize> = (0..n)
            .filter(|&i| (0..x.len()).all(|t| !x[t][i] || s.iter().any(|&j| j != i && x[t][j])))
            .collect();
        let report = masking_report(&design, &truth);
        let masked_def = masked.iter().filter(|i| s.contains(i)).count();
        let mask_ok = report.masked_items == masked
            && report.masked_defectives == masked_def
            && report.masked_nondefectives == masked.len() - masked_def;
        rep.record(explained_ok && good_ok && mask_ok, || {
            format!("n={n} S={s:?}: explained {explained_ok} good {good_ok} masking {mask_ok}")
        });
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        for s in [Suite::SubsetArgmax, Suite::MlEnum, Suite::ExplainedNaive] {
            let r = oracle_check(s, 2024).unwrap();
            assert!(r.passed(), "{r}");
        }
    }
}
