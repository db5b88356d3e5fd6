//! Fixed instances shared by the benchmarks.

use gtlab::design::{DesignSpec, TestDesign};
use gtlab::model::{generate_outcomes, sample_defectives, DefectiveSet, OutcomeVector, PriorSpec};
use gtlab::seed::rng_from_seed;

pub struct Instance {
    pub design: TestDesign,
    pub truth: DefectiveSet,
    pub outcomes: OutcomeVector,
}

/// A seeded instance at `n`, `k`, `tests` for the given design family.
pub fn instance(spec: &DesignSpec, n: usize, k: usize, tests: usize, seed: u64) -> Instance {
    let design = spec.build(n, k, tests, seed).expect("design parameters");
    let mut rng = rng_from_seed(seed ^ 0x5eed);
    let truth = sample_defectives(&PriorSpec::Combinatorial { k }, n, &mut rng).expect("prior parameters");
    let outcomes = generate_outcomes(&design, &truth).expect("matching sizes");
    Instance { design, truth, outcomes }
}
