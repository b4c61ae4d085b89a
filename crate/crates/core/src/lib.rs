//! Random Forest and Random Ferns based feature selection.
//!
//! The crate provides the two ensemble classifiers together with their
//! importance measures, four selection algorithms built on top of them
//! (Boruta, RF-ACE, recursive feature elimination and regularised random
//! forest) and a bootstrap protocol for judging how stable a selection
//! method is. It is `no_std` and only needs an allocator; file formats,
//! threading and wall-clock timing live in the `rfsel` companion crate.
//!
//! All randomness is derived from explicit 64-bit seeds through named
//! sub-streams (see [`rng`]), so every result is a pure function of its
//! inputs and seed.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

/// Version of this crate.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod ferns;
pub mod forest;
pub mod importance;
pub mod rng;
pub mod selectors;
pub mod stats;
pub mod synth;

pub use dataset::{augment_with_shadows, bootstrap_resample, Dataset, Resample, ShadowedDataset};
pub use error::{Error, Result};
pub use evaluation::{
    compare_methods, post_selection_errors, run_bootstrap_experiment, scs_analysis, Clock,
    Comparison, ErrorReport, MethodConfig, NullClock, ScsReport, SelectionMatrix, SelectorConfig,
};
pub use ferns::{train_ferns, FernAveraging, FernsModel, FernsParams, ProbScale};
pub use forest::{forest_importance, train_forest, ForestMeasure, ForestModel, ForestParams, Mtry};
pub use importance::{ImportanceSource, ImportanceVector};
pub use selectors::{Decision, Selection};
pub use synth::{generate_synthetic, score_against_truth, GroundTruth, SignalModel, SyntheticSpec};
