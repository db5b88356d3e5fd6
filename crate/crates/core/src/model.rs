//! Defective sets, priors over them, and the noiseless OR observation channel.

use rand::seq::index;

use crate::design::{bernoulli_indices, round_half_up, TestDesign};
use crate::error::{param, Error, Result};
use crate::seed::SimRng;

/// Sorted set of distinct defective item indices in `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DefectiveSet {
    n: usize,
    members: Vec<usize>,
}

impl DefectiveSet {
    /// Builds a set from arbitrary-order members; duplicates and
    /// out-of-range indices are rejected.
    pub fn new(n: usize, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return param("duplicate defective index");
        }
        if members.last().is_some_and(|&m| m >= n) {
            return param(format!("defective index out of range for n={n}"));
        }
        Ok(DefectiveSet { n, members })
    }

    pub fn empty(n: usize) -> Self {
        DefectiveSet { n, members: Vec::new() }
    }

    pub(crate) fn from_sorted(n: usize, members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        DefectiveSet { n, members }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn into_members(self) -> Vec<usize> {
        self.members
    }
}

/// Test results, one bit per test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeVector {
    bits: Vec<bool>,
}

impl OutcomeVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        OutcomeVector { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_positive(&self, t: usize) -> bool {
        self.bits[t]
    }

    pub fn positives(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    /// Uniform over all k-subsets.
    Combinatorial { k: usize },
    /// Each item defective independently with probability `q`.
    Iid { q: f64 },
    /// IID with `q' = (k + sqrt(k) ln n) / n`, then uniform removal down to k.
    IidThenTrim { k: usize },
    /// IID with `q' = (k - sqrt(k) ln n) / n`, then uniform padding up to k.
    IidThenPad { k: usize },
}

impl PriorSpec {
    /// Target size, when the prior has one.
    pub fn target_k(&self) -> Option<usize> {
        match *self {
            PriorSpec::Combinatorial { k } | PriorSpec::IidThenTrim { k } | PriorSpec::IidThenPad { k } => Some(k),
            PriorSpec::Iid { .. } => None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            PriorSpec::Iid { q } if !(q > 0.0 && q < 1.0) => param(format!("iid prior needs 0 < q < 1, got {q}")),
            PriorSpec::Iid { .. } => Ok(()),
            _ => {
                let k = self.target_k().unwrap();
                if k == 0 || k > n {
                    param(format!("prior needs 1 <= k <= n, got k={k}, n={n}"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PriorSpec::Combinatorial { .. } => "combinatorial",
            PriorSpec::Iid { .. } => "iid",
            PriorSpec::IidThenTrim { .. } => "trim",
            PriorSpec::IidThenPad { .. } => "pad",
        }
    }
}

/// `q' = (k + sqrt(k) ln n) / n`, clamped to `[0, 1]`.
pub fn trim_probability(n: usize, k: usize) -> f64 {
    let k = k as f64;
    ((k + k.sqrt() * (n as f64).ln()) / n as f64).clamp(0.0, 1.0)
}

/// `q~' = (k - sqrt(k) ln n) / n`, clamped to `[0, 1]`.
pub fn pad_probability(n: usize, k: usize) -> f64 {
    let k = k as f64;
    ((k - k.sqrt() * (n as f64).ln()) / n as f64).clamp(0.0, 1.0)
}

/// `k = round(n^theta)`, ties up.
pub fn k_from_theta(n: usize, theta: f64) -> Result<usize> {
    if !(theta > 0.0 && theta < 1.0) {
        return param(format!("theta must lie in (0,1), got {theta}"));
    }
    let k = round_half_up((n as f64).powf(theta));
    if k < 1 || k as usize > n {
        return param(format!("round(n^theta) = {k} outside 1..={n}"));
    }
    Ok(k as usize)
}

fn uniform_subset(n: usize, k: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

/// Draws a defective set. Trim/pad priors may fall short of / exceed k when
/// the IID step lands on the wrong side; the realized size is the caller's to
/// record.
pub fn sample_defectives(prior: &PriorSpec, n: usize, rng: &mut SimRng) -> Result<DefectiveSet> {
    prior.validate(n)?;
    let members = match *prior {
        PriorSpec::Combinatorial { k } => uniform_subset(n, k, rng),
        PriorSpec::Iid { q } => bernoulli_indices(n, q, rng),
        PriorSpec::IidThenTrim { k } => {
            let first = bernoulli_indices(n, trim_probability(n, k), rng);
            if first.len() > k {
                let mut keep: Vec<usize> =
                    index::sample(rng, first.len(), k).into_iter().map(|j| first[j]).collect();
                keep.sort_unstable();
                keep
            } else {
                first
            }
        }
        PriorSpec::IidThenPad { k } => {
            let mut first = bernoulli_indices(n, pad_probability(n, k), rng);
            if first.len() < k {
                let complement: Vec<usize> = complement_of(&first, n);
                let add = index::sample(rng, complement.len(), k - first.len());
                first.extend(add.into_iter().map(|j| complement[j]));
                first.sort_unstable();
            }
            first
        }
    };
    Ok(DefectiveSet::from_sorted(n, members))
}

/// Resamples until the set has exactly the prior's target size.
pub fn sample_defectives_exact(
    prior: &PriorSpec,
    n: usize,
    rng: &mut SimRng,
    max_attempts: usize,
) -> Result<DefectiveSet> {
    let k = prior.target_k().ok_or_else(|| Error::Param("iid prior has no target size".into()))?;
    for _ in 0..max_attempts {
        let s = sample_defectives(prior, n, rng)?;
        if s.len() == k {
            return Ok(s);
        }
    }
    param(format!("no size-{k} draw in {max_attempts} attempts"))
}

pub(crate) fn complement_of(sorted: &[usize], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted.len());
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Noiseless OR channel: test `t` is positive iff it contains a defective.
pub fn generate_outcomes(design: &TestDesign, s: &DefectiveSet) -> Result<OutcomeVector> {
    if s.n() != design.n() {
        return Err(Error::Dimension { expected: design.n(), found: s.n() });
    }
    let mut bits = vec![false; design.tests()];
    for &i in s.members() {
        for &t in design.col(i) {
            bits[t] = true;
        }
    }
    Ok(OutcomeVector { bits })
}
