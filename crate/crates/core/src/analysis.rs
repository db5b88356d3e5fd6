//! Structural predicates on (design, defective set, outcomes): explained
//! tests, good tests, masking, and the set of outcome-consistent k-subsets.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::design::TestDesign;
use crate::error::{Error, Result};
use crate::model::{generate_outcomes, sample_defectives, DefectiveSet, OutcomeVector, PriorSpec};
use crate::seed::{rng_from_seed, SimRng};

/// Size of the symmetric difference of two sorted index lists.
pub fn set_hamming(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

/// Items that appear in no negative test ("possible defectives").
pub fn clean_items(design: &TestDesign, outcomes: &OutcomeVector) -> Vec<bool> {
    design
        .cols()
        .iter()
        .map(|col| col.iter().all(|&t| outcomes.is_positive(t)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplainCount {
    pub explained_tests: Vec<usize>,
}

impl ExplainCount {
    pub fn count(&self) -> usize {
        self.explained_tests.len()
    }
}

/// Tests explained by the candidate: positive tests holding some candidate
/// item that appears in no negative test.
pub fn explained_tests(design: &TestDesign, outcomes: &OutcomeVector, candidate: &[usize]) -> ExplainCount {
    let mut hit = vec![false; design.tests()];
    for &i in candidate {
        let col = design.col(i);
        if col.iter().all(|&t| outcomes.is_positive(t)) {
            for &t in col {
                hit[t] = true;
            }
        }
    }
    ExplainCount { explained_tests: (0..hit.len()).filter(|&t| hit[t]).collect() }
}

/// Number of defectives in each test.
pub fn defectives_per_test(design: &TestDesign, s: &DefectiveSet) -> Vec<usize> {
    let mut cnt = vec![0usize; design.tests()];
    for &i in s.members() {
        for &t in design.col(i) {
            cnt[t] += 1;
        }
    }
    cnt
}

/// For each defective (in member order), the number of tests containing it
/// and no other defective.
pub fn good_test_counts(design: &TestDesign, s: &DefectiveSet) -> Vec<usize> {
    let cnt = defectives_per_test(design, s);
    s.members()
        .iter()
        .map(|&i| design.col(i).iter().filter(|&&t| cnt[t] == 1).count())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskingReport {
    pub masked_defectives: usize,
    pub masked_nondefectives: usize,
    pub masked_items: Vec<usize>,
    /// Items in no test at all; these are masked vacuously and included in
    /// the counts above.
    pub zero_test_items: usize,
}

/// An item is masked when every test containing it also contains a
/// different defective.
pub fn masking_report(design: &TestDesign, s: &DefectiveSet) -> MaskingReport {
    let cnt = defectives_per_test(design, s);
    let mut rep = MaskingReport::default();
    for i in 0..design.n() {
        let col = design.col(i);
        let own = usize::from(s.contains(i));
        if col.iter().all(|&t| cnt[t] > own) {
            rep.masked_items.push(i);
            if own == 1 {
                rep.masked_defectives += 1;
            } else {
                rep.masked_nondefectives += 1;
            }
            if col.is_empty() {
                rep.zero_test_items += 1;
            }
        }
    }
    rep
}

/// For a masked item, the defectives (other than the item) that cover each of
/// its tests, as `(test, maskers)` pairs. `None` if the item is not masked.
pub fn masking_witnesses(design: &TestDesign, s: &DefectiveSet, item: usize) -> Option<Vec<(usize, Vec<usize>)>> {
    let mut out = Vec::new();
    for &t in design.col(item) {
        let maskers: Vec<usize> = design.row(t).iter().copied().filter(|&j| j != item && s.contains(j)).collect();
        if maskers.is_empty() {
            return None;
        }
        out.push((t, maskers));
    }
    Some(out)
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at each step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Visits every size-`k` set consistent with the outcomes in lexicographic
/// order. Only items in no negative test can belong to such a set, so the
/// search runs over those and `cap` bounds `C(#possible defectives, k)`.
pub fn for_each_satisfying<F>(
    design: &TestDesign,
    outcomes: &OutcomeVector,
    k: usize,
    cap: u128,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    if outcomes.len() != design.tests() {
        return Err(Error::Dimension { expected: design.tests(), found: outcomes.len() });
    }
    let clean = clean_items(design, outcomes);
    let pd: Vec<usize> = (0..design.n()).filter(|&i| clean[i]).collect();
    let size = binomial_u128(pd.len(), k);
    if size > cap {
        return Err(Error::Refused { size, cap });
    }
    if k > pd.len() {
        return Ok(());
    }
    let positives: Vec<usize> = (0..design.tests()).filter(|&t| outcomes.is_positive(t)).collect();
    let mut cover = vec![0u32; design.tests()];
    let mut idx: Vec<usize> = (0..k).collect();
    let mut chosen = Vec::with_capacity(k);
    loop {
        chosen.clear();
        chosen.extend(idx.iter().map(|&j| pd[j]));
        for &i in &chosen {
            for &t in design.col(i) {
                cover[t] += 1;
            }
        }
        let ok = positives.iter().all(|&t| cover[t] > 0);
        for &i in &chosen {
            for &t in design.col(i) {
                cover[t] -= 1;
            }
        }
        if ok && visit(&chosen).is_break() {
            return Ok(());
        }
        // next combination of k indices out of pd.len()
        let m = pd.len();
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            if idx[pos] < m - k + pos {
                break;
            }
        }
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All size-`k` sets whose outcomes equal `outcomes`, lexicographically.
pub fn satisfying_sets(design: &TestDesign, outcomes: &OutcomeVector, k: usize, cap: u128) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for_each_satisfying(design, outcomes, k, cap, |s| {
        out.push(s.to_vec());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BinReport {
    pub outcome: OutcomeVector,
    pub satisfying: usize,
    pub samples: usize,
    /// `None` when the bin was skipped for having too few samples.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct UniformityReport {
    pub bins: Vec<BinReport>,
}

impl UniformityReport {
    pub fn skipped(&self) -> usize {
        self.bins.iter().filter(|b| b.p_value.is_none()).count()
    }

    pub fn min_p_value(&self) -> Option<f64> {
        self.bins.iter().filter_map(|b| b.p_value).reduce(f64::min)
    }

    /// True when every tested bin has p-value above `alpha`.
    pub fn all_uniform(&self, alpha: f64) -> bool {
        self.bins.iter().filter_map(|b| b.p_value).all(|p| p > alpha)
    }
}

/// Samples `S` from the combinatorial prior, bins draws by outcome vector,
/// and chi-square tests whether `S` is uniform over the satisfying sets of
/// each bin.
pub fn posterior_uniformity_check(design: &TestDesign, k: usize, trials: usize, seed: u64) -> Result<UniformityReport> {
    let prior = PriorSpec::Combinatorial { k };
    let n = design.n();
    posterior_uniformity_check_with(design, k, trials, seed, |rng| {
        sample_defectives(&prior, n, rng).expect("validated prior")
    })
}

/// As [`posterior_uniformity_check`] with a caller-supplied sampler of
/// size-`k` sets.
pub fn posterior_uniformity_check_with<F>(
    design: &TestDesign,
    k: usize,
    trials: usize,
    seed: u64,
    mut sampler: F,
) -> Result<UniformityReport>
where
    F: FnMut(&mut SimRng) -> DefectiveSet,
{
    let mut rng = rng_from_seed(seed);
    let mut bins: BTreeMap<OutcomeVector, BTreeMap<Vec<usize>, usize>> = BTreeMap::new();
    for _ in 0..trials {
        let s = sampler(&mut rng);
        if s.len() != k {
            return Err(Error::Param(format!("sampler produced a set of size {} (k={k})", s.len())));
        }
        let y = generate_outcomes(design, &s)?;
        *bins.entry(y).or_default().entry(s.into_members()).or_default() += 1;
    }
    let mut reports = Vec::with_capacity(bins.len());
    for (y, counts) in bins {
        let sat = satisfying_sets(design, &y, k, u128::MAX)?;
        let samples: usize = counts.values().sum();
        for s in counts.keys() {
            if sat.binary_search(s).is_err() {
                return Err(Error::Internal(format!("sampled set {s:?} is not consistent with its outcome")));
            }
        }
        let p_value = if sat.len() == 1 {
            Some(1.0)
        } else if samples < 5 * sat.len() {
            None
        } else {
            let expected = samples as f64 / sat.len() as f64;
            let stat: f64 = sat
                .iter()
                .map(|s| {
                    let o = counts.get(s).copied().unwrap_or(0) as f64;
                    (o - expected).powi(2) / expected
                })
                .sum();
            let chi = ChiSquared::new((sat.len() - 1) as f64).map_err(|e| Error::Internal(e.to_string()))?;
            Some(chi.sf(stat))
        };
        reports.push(BinReport { outcome: y, satisfying: sat.len(), samples, p_value });
    }
    Ok(UniformityReport { bins: reports })
}
