//! Non-adaptive group testing with one-sided error.
//!
//! Random test designs, the COMP, DD, SUBSET and maximum-likelihood decoders,
//! structural analyses (explained tests, good tests, masking, satisfying
//! sets), rate and threshold formulas, and a deterministic Monte Carlo
//! harness. Items and tests are 0-based in memory.

pub mod analysis;
pub mod decode;
pub mod design;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod seed;

pub use decode::{comp_decode, dd_decode, ml_oracle, subset_decode, DecoderId};
pub use design::{DesignSpec, TestDesign};
pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentConfig, ExperimentSummary, TrialRecord};
pub use metrics::Criterion;
pub use model::{generate_outcomes, DefectiveSet, OutcomeVector, PriorSpec};
