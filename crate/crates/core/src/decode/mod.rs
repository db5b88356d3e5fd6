//! Decoders: COMP, DD, an exhaustive maximum-likelihood oracle, the
//! explained-count SUBSET search and the deletion-then-decode pipeline.

mod pipeline;
mod subset;

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::time::Duration;

use rand::Rng;

use crate::analysis::{clean_items, for_each_satisfying, satisfying_sets};
use crate::design::TestDesign;
use crate::error::{Error, Result};
use crate::model::{DefectiveSet, OutcomeVector};
use crate::seed::SimRng;

pub use pipeline::{
    decode_reduced, deletion_pipeline, plan_deletion, DeletionPlan, InnerDecoder, PipelineOutput, PipelineParams,
};
pub use subset::{
    candidate_family, family_size, subset_decode, subset_search, CandidateFamily, EmptyReason, Frontend,
    SubsetOutput, SubsetParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderId {
    Comp,
    Dd,
    Ml,
    Subset,
    Pipeline,
}

impl DecoderId {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderId::Comp => "comp",
            DecoderId::Dd => "dd",
            DecoderId::Ml => "ml",
            DecoderId::Subset => "subset",
            DecoderId::Pipeline => "pipeline",
        }
    }
}

impl fmt::Display for DecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "comp" => DecoderId::Comp,
            "dd" => DecoderId::Dd,
            "ml" => DecoderId::Ml,
            "subset" => DecoderId::Subset,
            "pipeline" => DecoderId::Pipeline,
            other => return Err(Error::Param(format!("unknown decoder {other:?}"))),
        })
    }
}

/// An estimate scored against the true defective set.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub estimate: Vec<usize>,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub subset_ok: bool,
    pub superset_ok: bool,
    pub decoder: DecoderId,
    pub elapsed: Duration,
}

impl DecodeResult {
    pub fn score(decoder: DecoderId, estimate: Vec<usize>, truth: &DefectiveSet, elapsed: Duration) -> Self {
        let false_positives = estimate.iter().filter(|&&i| !truth.contains(i)).count();
        let hits = estimate.len() - false_positives;
        let false_negatives = truth.len() - hits;
        DecodeResult {
            estimate,
            false_negatives,
            false_positives,
            subset_ok: false_positives == 0,
            superset_ok: false_negatives == 0,
            decoder,
            elapsed,
        }
    }
}

fn check_dims(design: &TestDesign, outcomes: &OutcomeVector) -> Result<()> {
    if design.tests() != outcomes.len() {
        return Err(Error::Dimension { expected: design.tests(), found: outcomes.len() });
    }
    Ok(())
}

/// COMP: every item outside all negative tests is declared defective.
pub fn comp_decode(design: &TestDesign, outcomes: &OutcomeVector) -> Result<Vec<usize>> {
    check_dims(design, outcomes)?;
    let clean = clean_items(design, outcomes);
    Ok((0..design.n()).filter(|&i| clean[i]).collect())
}

/// DD: possible defectives that are the only possible defective in some
/// positive test.
pub fn dd_decode(design: &TestDesign, outcomes: &OutcomeVector) -> Result<Vec<usize>> {
    check_dims(design, outcomes)?;
    let clean = clean_items(design, outcomes);
    let mut definite = vec![false; design.n()];
    for (t, row) in design.rows().iter().enumerate() {
        if !outcomes.is_positive(t) {
            continue;
        }
        let mut pd = row.iter().filter(|&&i| clean[i]);
        if let (Some(&only), None) = (pd.next(), pd.next()) {
            definite[only] = true;
        }
    }
    Ok((0..design.n()).filter(|&i| definite[i]).collect())
}

/// Lexicographically smallest size-`k` set consistent with the outcomes.
pub fn ml_oracle(design: &TestDesign, outcomes: &OutcomeVector, k: usize, cap: u128) -> Result<Vec<usize>> {
    let mut found = None;
    for_each_satisfying(design, outcomes, k, cap, |s| {
        found = Some(s.to_vec());
        ControlFlow::Break(())
    })?;
    found.ok_or_else(|| Error::Internal(format!("no size-{k} set is consistent with the outcomes")))
}

/// Uniform draw from the size-`k` sets consistent with the outcomes.
pub fn ml_oracle_sample(
    design: &TestDesign,
    outcomes: &OutcomeVector,
    k: usize,
    cap: u128,
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let mut all = satisfying_sets(design, outcomes, k, cap)?;
    if all.is_empty() {
        return Err(Error::Internal(format!("no size-{k} set is consistent with the outcomes")));
    }
    let pick = rng.random_range(0..all.len());
    Ok(all.swap_remove(pick))
}
