//! Deletion-then-decode: a fraction of items is declared non-defective up
//! front and never tested; the inner decoder runs on the survivors with the
//! defective count known only within a window `[k_lo, k_hi]`.

use rand::seq::index;

use crate::design::{round_half_up, DesignSpec, TestDesign};
use crate::error::{param, Error, Result};
use crate::metrics::floor_tol;
use crate::model::{complement_of, generate_outcomes, DefectiveSet, OutcomeVector};
use crate::seed::{rng_from_seed, stream_seed, SimRng, Stream};

use super::subset::{dd_pad, subset_search, Frontend, SubsetParams};
use super::{comp_decode, dd_decode, ml_oracle};

#[derive(Debug, Clone, PartialEq)]
pub enum InnerDecoder {
    Comp,
    Dd,
    Ml { cap: u128 },
    /// `Frontend::Provided` is not available here.
    Subset(SubsetParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub alpha: f64,
    /// Deleted fraction is `alpha - xi`; defaults to `0.01 * alpha`.
    pub xi: Option<f64>,
    pub inner: InnerDecoder,
    /// Half-width of the `[k_lo, k_hi]` window in hypergeometric standard
    /// deviations of the surviving defective count.
    pub k_sigmas: f64,
}

impl PipelineParams {
    pub fn new(alpha: f64, inner: InnerDecoder) -> Self {
        PipelineParams { alpha, xi: None, inner, k_sigmas: 3.0 }
    }

    pub fn xi(&self) -> f64 {
        self.xi.unwrap_or(0.01 * self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeletionPlan {
    pub n: usize,
    /// Surviving items in original labels, sorted; reduced item `r` is
    /// `kept[r]`.
    pub kept: Vec<usize>,
    /// Expected number of surviving defectives.
    pub k_expected: f64,
    pub k_lo: usize,
    pub k_hi: usize,
}

impl DeletionPlan {
    pub fn reduced_n(&self) -> usize {
        self.kept.len()
    }

    /// Restricts a defective set to the survivors, in reduced labels.
    pub fn reduce(&self, truth: &DefectiveSet) -> Result<DefectiveSet> {
        if truth.n() != self.n {
            return Err(Error::Dimension { expected: self.n, found: truth.n() });
        }
        let members = truth.members().iter().filter_map(|i| self.kept.binary_search(i).ok()).collect();
        DefectiveSet::new(self.kept.len(), members)
    }

    /// Maps a reduced-label estimate back to original labels.
    pub fn lift(&self, reduced: &[usize]) -> Vec<usize> {
        reduced.iter().map(|&r| self.kept[r]).collect()
    }
}

/// Picks `round((alpha - xi) n)` items uniformly at random to delete.
pub fn plan_deletion(n: usize, k: usize, params: &PipelineParams, rng: &mut SimRng) -> Result<DeletionPlan> {
    let alpha = params.alpha;
    let xi = params.xi();
    if !(alpha > 0.0 && alpha < 1.0) {
        return param(format!("alpha must lie in (0,1), got {alpha}"));
    }
    if !(0.0..=alpha).contains(&xi) {
        return param(format!("xi must lie in [0, alpha], got {xi}"));
    }
    if k == 0 || k > n {
        return param(format!("need 1 <= k <= n, got k={k}, n={n}"));
    }
    let delete = round_half_up((alpha - xi) * n as f64).clamp(0, n as i64 - 1) as usize;
    let mut deleted = index::sample(rng, n, delete).into_vec();
    deleted.sort_unstable();
    let kept = complement_of(&deleted, n);
    let frac = kept.len() as f64 / n as f64;
    let k_expected = k as f64 * frac;
    let sigma = if n > 1 {
        (k as f64 * frac * (1.0 - frac) * (n - k) as f64 / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = params.k_sigmas * sigma;
    let k_lo = (k_expected - half).floor().max(0.0) as usize;
    let k_hi = ((k_expected + half).ceil() as usize).min(kept.len()).max(k_lo);
    Ok(DeletionPlan { n, kept, k_expected, k_lo, k_hi })
}

/// Runs the inner decoder on a design over the survivors and returns the
/// estimate in original labels.
pub fn decode_reduced(
    plan: &DeletionPlan,
    design: &TestDesign,
    outcomes: &OutcomeVector,
    params: &PipelineParams,
) -> Result<Vec<usize>> {
    if design.n() != plan.reduced_n() {
        return Err(Error::Dimension { expected: plan.reduced_n(), found: design.n() });
    }
    let k_mid = round_half_up(plan.k_expected).max(0) as usize;
    let reduced = match &params.inner {
        InnerDecoder::Comp => comp_decode(design, outcomes)?,
        InnerDecoder::Dd => dd_decode(design, outcomes)?,
        InnerDecoder::Ml { cap } => ml_in_window(design, outcomes, plan, k_mid, *cap)?,
        InnerDecoder::Subset(sp) => {
            let base = match &sp.frontend {
                Frontend::DdPad => dd_pad(design, outcomes, k_mid)?,
                Frontend::BruteForceMl { cap } => ml_in_window(design, outcomes, plan, k_mid, *cap)?,
                Frontend::Provided(_) => return param("a provided front-end estimate cannot be used after deletion"),
            };
            let size = floor_tol((1.0 - sp.eta_minus) * plan.k_lo as f64);
            let radius = floor_tol(sp.radius_mult * sp.eta_minus * plan.k_hi as f64);
            subset_search(design, outcomes, &base, size, radius, sp.family_cap).estimate
        }
    };
    Ok(plan.lift(&reduced))
}

/// Tries sizes in the window, nearest to the expected count first (ties to
/// the smaller size), and returns the first consistent set found.
fn ml_in_window(
    design: &TestDesign,
    outcomes: &OutcomeVector,
    plan: &DeletionPlan,
    k_mid: usize,
    cap: u128,
) -> Result<Vec<usize>> {
    let mut sizes: Vec<usize> = (plan.k_lo..=plan.k_hi).collect();
    sizes.sort_by_key(|&s| (s.abs_diff(k_mid), s));
    for s in sizes {
        match ml_oracle(design, outcomes, s, cap) {
            Ok(est) => return Ok(est),
            Err(Error::Internal(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Internal(format!("no consistent set with size in [{}, {}]", plan.k_lo, plan.k_hi)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub estimate: Vec<usize>,
    pub plan: DeletionPlan,
    pub design: TestDesign,
    pub reduced_truth: DefectiveSet,
}

/// Full pipeline for a known truth: plan the deletion, build a `tests`-row
/// design over the survivors, observe, decode.
pub fn deletion_pipeline(
    design_spec: &DesignSpec,
    truth: &DefectiveSet,
    tests: usize,
    params: &PipelineParams,
    seed: u64,
) -> Result<PipelineOutput> {
    let n = truth.n();
    let k = truth.len();
    let mut rng = rng_from_seed(stream_seed(seed, Stream::Deletion));
    let plan = plan_deletion(n, k, params, &mut rng)?;
    let k_design = round_half_up(plan.k_expected).max(1) as usize;
    let design = design_spec.build(plan.reduced_n(), k_design, tests, stream_seed(seed, Stream::Design))?;
    let reduced_truth = plan.reduce(truth)?;
    let outcomes = generate_outcomes(&design, &reduced_truth)?;
    let estimate = decode_reduced(&plan, &design, &outcomes, params)?;
    Ok(PipelineOutput { estimate, plan, design, reduced_truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_defectives, PriorSpec};

    #[test]
    fn plan_sizes() {
        let mut rng = rng_from_seed(5);
        let p = PipelineParams::new(0.5, InnerDecoder::Dd);
        let plan = plan_deletion(1000, 50, &p, &mut rng).unwrap();
        // round((0.5 - 0.005) * 1000) = 495 deleted
        assert_eq!(plan.reduced_n(), 505);
        assert!(plan.k_lo as f64 <= plan.k_expected && plan.k_expected <= plan.k_hi as f64);
        assert!(plan.kept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_deletion_is_identity() {
        let mut rng = rng_from_seed(5);
        let mut p = PipelineParams::new(0.3, InnerDecoder::Dd);
        p.xi = Some(0.3);
        let plan = plan_deletion(100, 10, &p, &mut rng).unwrap();
        assert_eq!(plan.kept, (0..100).collect::<Vec<_>>());
        assert_eq!((plan.k_lo, plan.k_hi), (10, 10));
    }

    #[test]
    fn deleted_items_never_estimated() {
        let mut rng = rng_from_seed(11);
        let truth = sample_defectives(&PriorSpec::Combinatorial { k: 20 }, 2000, &mut rng).unwrap();
        let p = PipelineParams::new(0.5, InnerDecoder::Comp);
        let out = deletion_pipeline(&DesignSpec::ncc_default(), &truth, 150, &p, 3).unwrap();
        assert!(out.estimate.iter().all(|i| out.plan.kept.binary_search(i).is_ok()));
    }

    #[test]
    fn bad_alpha_rejected() {
        let mut rng = rng_from_seed(1);
        for a in [0.0, 1.0, -0.5] {
            assert!(plan_deletion(10, 2, &PipelineParams::new(a, InnerDecoder::Dd), &mut rng).is_err());
        }
    }
}
