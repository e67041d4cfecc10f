//! A laboratory for adaptive multiple-choice drilling.
//!
//! The crate covers the full loop of a drill experiment:
//!
//! * [`itembank`] — stochastic generation of multiple-choice items from
//!   option pools, including "none/all of the above" variants and
//!   hint-paired item twins;
//! * [`scheduler`] — difficulty-matched adaptive item selection;
//! * [`learner`] — simulated students with configurable memorization and
//!   comprehension behavior, run as whole cohorts;
//! * [`logstore`] / [`features`] — response-log storage (JSONL/CSV) and
//!   per-response feature derivation;
//! * [`rote`] — attempt-curve fits separating recognition of seen items
//!   from genuine transfer to unseen ones;
//! * [`hints`] / [`report`] — cue/hint effect analyses: stratified accuracy,
//!   grade-change tables, wrong-start conversion tests, and pair-specific
//!   interaction comparisons;
//! * [`power`] — Monte Carlo power curves and required-sample-size search
//!   over resampled outcome rows;
//! * [`glm`], [`tables`], [`linalg`], [`special`] — the numeric engines
//!   (ridge-penalized logistic regression, chi-square tests, Cholesky
//!   solves, special functions) behind the analyses.
//!
//! The numeric engines are generic over the scalar type via [`num::Float`]
//! (`f32` or `f64`); the aliases below pin the common `f64` choices.
//! Randomness everywhere flows from explicit seeds through
//! [`rng::derive_seed`], so every pipeline stage is reproducible.

pub mod features;
pub mod fixtures;
pub mod glm;
pub mod hints;
pub mod itembank;
pub mod learner;
pub mod linalg;
pub mod logstore;
pub mod num;
pub mod power;
pub mod report;
pub mod rng;
pub mod rote;
pub mod scheduler;
pub mod special;
pub mod tables;

pub use features::{derive_features, extract_triplets, FeatureRow, Triplet};
pub use itembank::{DrillSet, GenerationConfig, Item, OptionPool, SpecialKind};
pub use learner::{simulate_cohort, CohortSpec, LearnerProfile, MemoryState};
pub use logstore::{ResponseLog, ResponseRecord};
pub use report::{hint_report, HintReport};
pub use rng::{derive_seed, rng_from_seed, Rng};
pub use scheduler::{select_item, ItemStats, StudentState};
pub use tables::{chi_square_test, ContingencyTable, Correction};

/// `f64` logistic-regression fit, the default for the analyses here.
pub type FitResult = glm::FitResult<f64>;
/// `f64` chi-square test outcome.
pub type TestResult = tables::TestResult<f64>;
/// `f64` symmetric matrix for the normal-equation solves.
pub type SymMatrix = linalg::SymMatrix<f64>;
