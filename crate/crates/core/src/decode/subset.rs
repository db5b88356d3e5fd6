//! Explained-count SUBSET decoding.
//!
//! Starting from a size-k two-sided estimate (the "base"), the decoder scans
//! every set of the target size within a Hamming radius of the base and keeps
//! the first one (in lexicographic order) that explains strictly more tests
//! than anything before it. The best score starts at zero with an empty set,
//! so if no candidate explains a test the output is empty.
//!
//! A candidate keeping `size - j` base items and adding `j` outside items is
//! at distance `|base| - size + 2j` from the base, which bounds `j`.

use crate::analysis::{binomial_u128, clean_items};
use crate::design::TestDesign;
use crate::error::{param, Result};
use crate::metrics::floor_tol;
use crate::model::OutcomeVector;

use super::{dd_decode, ml_oracle};

/// Lexicographic iterator over `{ S : |S| = size, d_H(base, S) <= radius }`
/// within ground set `0..n`.
#[derive(Debug, Clone)]
pub struct CandidateFamily {
    n: usize,
    size: usize,
    is_base: Vec<bool>,
    base_after: Vec<usize>,
    budget: usize,
    cur: Vec<usize>,
    state: IterState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

impl CandidateFamily {
    pub fn new(base: &[usize], n: usize, size: usize, radius: usize) -> Self {
        let mut is_base = vec![false; n];
        for &b in base {
            is_base[b] = true;
        }
        let mut base_after = vec![0; n + 1];
        for p in (0..n).rev() {
            base_after[p] = base_after[p + 1] + usize::from(is_base[p]);
        }
        let gap = base.len() as i64 - size as i64;
        let slack = radius as i64 - gap;
        let (budget, state) = if slack < 0 || size > n {
            (0, IterState::Done)
        } else {
            ((slack / 2) as usize, IterState::Fresh)
        };
        CandidateFamily { n, size, is_base, base_after, budget, cur: Vec::with_capacity(size), state }
    }

    /// Can `remaining` picks be made from positions `>= pos` using at most
    /// `outside` non-base items?
    fn feasible(&self, pos: usize, remaining: usize, outside: usize) -> bool {
        let base_left = self.base_after[pos];
        let outside_left = (self.n - pos) - base_left;
        remaining <= base_left + outside.min(outside_left)
    }

    /// Smallest item `>= from` that can occupy the next slot, leaving
    /// `remaining` slots after it.
    fn smallest_choice(&self, from: usize, remaining: usize, outside: usize) -> Option<(usize, usize)> {
        (from..self.n).find_map(|v| {
            let left = if self.is_base[v] {
                outside
            } else if outside > 0 {
                outside - 1
            } else {
                return None;
            };
            self.feasible(v + 1, remaining, left).then_some((v, left))
        })
    }

    fn fill(&mut self, mut from: usize, mut outside: usize) {
        while self.cur.len() < self.size {
            let remaining = self.size - self.cur.len() - 1;
            let (v, left) = self.smallest_choice(from, remaining, outside).expect("feasible prefix");
            self.cur.push(v);
            from = v + 1;
            outside = left;
        }
    }

    fn outside_used(&self, prefix: usize) -> usize {
        self.cur[..prefix].iter().filter(|&&v| !self.is_base[v]).count()
    }
}

impl Iterator for CandidateFamily {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        match self.state {
            IterState::Done => return None,
            IterState::Fresh => {
                if !self.feasible(0, self.size, self.budget) {
                    self.state = IterState::Done;
                    return None;
                }
                self.fill(0, self.budget);
                self.state = IterState::Running;
                return Some(self.cur.clone());
            }
            IterState::Running => {}
        }
        for slot in (0..self.size).rev() {
            let outside = self.budget - self.outside_used(slot);
            let remaining = self.size - slot - 1;
            if let Some((v, left)) = self.smallest_choice(self.cur[slot] + 1, remaining, outside) {
                self.cur.truncate(slot);
                self.cur.push(v);
                self.fill(v + 1, left);
                return Some(self.cur.clone());
            }
        }
        self.state = IterState::Done;
        None
    }
}

/// Family of size-`floor((1 - eta_minus) |base|)` sets within `radius` of
/// `base`.
pub fn candidate_family(base: &[usize], n: usize, eta_minus: f64, radius: usize) -> CandidateFamily {
    let size = floor_tol((1.0 - eta_minus) * base.len() as f64);
    CandidateFamily::new(base, n, size, radius)
}

/// Number of sets [`CandidateFamily::new`] would yield.
pub fn family_size(base_len: usize, n: usize, size: usize, radius: usize) -> u128 {
    let gap = base_len as i64 - size as i64;
    let slack = radius as i64 - gap;
    if slack < 0 || size > n {
        return 0;
    }
    let budget = (slack / 2) as usize;
    let outside = n - base_len;
    let lo = size.saturating_sub(base_len);
    let hi = budget.min(size).min(outside);
    (lo..=hi)
        .map(|j| binomial_u128(base_len, size - j).saturating_mul(binomial_u128(outside, j)))
        .fold(0u128, |a, b| a.saturating_add(b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frontend {
    /// Exhaustive maximum-likelihood estimate; refuses beyond `cap`
    /// enumerated sets.
    BruteForceMl { cap: u128 },
    /// DD output padded with the lowest-index possible defectives to size k.
    DdPad,
    Provided(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetParams {
    pub eta_minus: f64,
    pub radius_mult: f64,
    pub frontend: Frontend,
    /// When the family exceeds this many sets, fall back to single-swap hill
    /// climbing. `None` always enumerates.
    pub family_cap: Option<u128>,
}

impl SubsetParams {
    pub fn new(eta_minus: f64, frontend: Frontend) -> Self {
        SubsetParams { eta_minus, radius_mult: 3.0, frontend, family_cap: None }
    }

    pub fn output_size(&self, k: usize) -> usize {
        floor_tol((1.0 - self.eta_minus) * k as f64)
    }

    pub fn radius(&self, k: usize) -> usize {
        floor_tol(self.radius_mult * self.eta_minus * k as f64)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta_minus) {
            return param(format!("eta_minus must lie in [0,1], got {}", self.eta_minus));
        }
        if self.radius_mult.is_nan() || self.radius_mult < 0.0 {
            return param(format!("radius multiplier must be non-negative, got {}", self.radius_mult));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyReason {
    /// The target size rounds to zero.
    ZeroSize,
    /// No candidate explains a single test.
    NothingExplained,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetOutput {
    pub estimate: Vec<usize>,
    pub explained: usize,
    pub base: Vec<usize>,
    pub candidates_examined: u64,
    pub empty: Option<EmptyReason>,
    /// True when the hill-climbing fallback was used.
    pub heuristic: bool,
}

/// Counts tests explained by a set, reusing scratch space across calls.
struct ExplainScorer<'a> {
    design: &'a TestDesign,
    clean: Vec<bool>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl<'a> ExplainScorer<'a> {
    fn new(design: &'a TestDesign, outcomes: &OutcomeVector) -> Self {
        ExplainScorer { design, clean: clean_items(design, outcomes), stamp: vec![0; design.tests()], epoch: 0 }
    }

    fn score(&mut self, set: &[usize]) -> usize {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let mut count = 0;
        for &i in set {
            if !self.clean[i] {
                continue;
            }
            for &t in self.design.col(i) {
                if self.stamp[t] != self.epoch {
                    self.stamp[t] = self.epoch;
                    count += 1;
                }
            }
        }
        count
    }
}

/// Explained-count search around a given base.
pub fn subset_search(
    design: &TestDesign,
    outcomes: &OutcomeVector,
    base: &[usize],
    size: usize,
    radius: usize,
    family_cap: Option<u128>,
) -> SubsetOutput {
    let mut out = SubsetOutput {
        estimate: Vec::new(),
        explained: 0,
        base: base.to_vec(),
        candidates_examined: 0,
        empty: None,
        heuristic: false,
    };
    if size == 0 {
        out.empty = Some(EmptyReason::ZeroSize);
        return out;
    }
    let mut scorer = ExplainScorer::new(design, outcomes);
    let n = design.n();
    if family_cap.is_some_and(|cap| family_size(base.len(), n, size, radius) > cap) {
        out.heuristic = true;
        hill_climb(&mut scorer, base, n, size, radius, &mut out);
    } else {
        for cand in CandidateFamily::new(base, n, size, radius) {
            out.candidates_examined += 1;
            let s = scorer.score(&cand);
            if s > out.explained {
                out.explained = s;
                out.estimate = cand;
            }
        }
    }
    if out.explained == 0 {
        out.empty = Some(EmptyReason::NothingExplained);
    }
    out
}

/// Best-improvement single-swap local search inside the candidate family,
/// started from its lexicographically first member.
fn hill_climb(
    scorer: &mut ExplainScorer<'_>,
    base: &[usize],
    n: usize,
    size: usize,
    radius: usize,
    out: &mut SubsetOutput,
) {
    let Some(mut cur) = CandidateFamily::new(base, n, size, radius).next() else {
        return;
    };
    let mut is_base = vec![false; n];
    for &b in base {
        is_base[b] = true;
    }
    let dist = |set: &[usize]| {
        let kept = set.iter().filter(|&&v| is_base[v]).count();
        base.len() - kept + (set.len() - kept)
    };
    let mut best = scorer.score(&cur);
    out.candidates_examined += 1;
    loop {
        let mut improved: Option<(usize, Vec<usize>)> = None;
        for pos in 0..cur.len() {
            for add in 0..n {
                if cur.binary_search(&add).is_ok() {
                    continue;
                }
                let mut cand = cur.clone();
                cand.remove(pos);
                let at = cand.binary_search(&add).unwrap_err();
                cand.insert(at, add);
                if dist(&cand) > radius {
                    continue;
                }
                out.candidates_examined += 1;
                let s = scorer.score(&cand);
                let better = match &improved {
                    Some((bs, bc)) => s > *bs || (s == *bs && cand < *bc),
                    None => s > best,
                };
                if better {
                    improved = Some((s, cand));
                }
            }
        }
        match improved {
            Some((s, c)) => {
                best = s;
                cur = c;
            }
            None => break,
        }
    }
    if best > 0 {
        out.explained = best;
        out.estimate = cur;
    }
}

/// DD estimate topped up with the lowest-index possible defectives (then the
/// lowest-index remaining items) until it has `target` members. A DD output
/// already at or above `target` is returned unchanged.
pub(crate) fn dd_pad(design: &TestDesign, outcomes: &OutcomeVector, target: usize) -> Result<Vec<usize>> {
    let mut est = dd_decode(design, outcomes)?;
    if est.len() >= target {
        return Ok(est);
    }
    let clean = clean_items(design, outcomes);
    let mut in_est = vec![false; design.n()];
    for &i in &est {
        in_est[i] = true;
    }
    let order = (0..design.n()).filter(|&i| clean[i]).chain((0..design.n()).filter(|&i| !clean[i]));
    for i in order {
        if est.len() >= target {
            break;
        }
        if !in_est[i] {
            in_est[i] = true;
            est.push(i);
        }
    }
    est.sort_unstable();
    Ok(est)
}

/// SUBSET decoding with known `k`: output size `floor((1 - eta) k)`, radius
/// `floor(radius_mult * eta * k)` around the front-end estimate.
pub fn subset_decode(
    design: &TestDesign,
    outcomes: &OutcomeVector,
    k: usize,
    params: &SubsetParams,
) -> Result<SubsetOutput> {
    params.validate()?;
    if k > design.n() {
        return param(format!("k={k} exceeds n={}", design.n()));
    }
    let base = match &params.frontend {
        Frontend::BruteForceMl { cap } => ml_oracle(design, outcomes, k, *cap)?,
        Frontend::DdPad => dd_pad(design, outcomes, k)?,
        Frontend::Provided(b) => {
            let mut b = b.clone();
            b.sort_unstable();
            b.dedup();
            if b.len() != k || b.last().is_some_and(|&v| v >= design.n()) {
                return param(format!("provided estimate must hold {k} distinct items below n"));
            }
            b
        }
    };
    Ok(subset_search(design, outcomes, &base, params.output_size(k), params.radius(k), params.family_cap))
}
