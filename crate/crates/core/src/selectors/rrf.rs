use alloc::format;
use alloc::vec;

use rand_core::RngCore;

use super::Selection;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{train_regularized, ForestParams, Mtry, Penalty};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrfParams {
    /// Gain multiplier for features not yet used by the forest, in (0, 1].
    pub lambda: f64,
    pub forest: ForestParams,
}

/// Every feature is a split candidate by default so that used and unused
/// features compete at each node.
impl Default for RrfParams {
    fn default() -> Self {
        RrfParams {
            lambda: 0.8,
            forest: ForestParams {
                mtry: Mtry::All,
                ..ForestParams::default()
            },
        }
    }
}

/// Regularised random forest selection: grows a forest in which a split on
/// a feature outside the used set scores `lambda * gain`, and returns the
/// used set.
pub fn run_rrf<R: RngCore + ?Sized>(
    d: &Dataset,
    params: &RrfParams,
    rng: &mut R,
) -> Result<Selection> {
    if !(params.lambda > 0.0 && params.lambda <= 1.0) {
        return Err(Error::param(format!(
            "lambda {} not in (0, 1]",
            params.lambda
        )));
    }
    let mut penalty = Penalty {
        lambda: params.lambda,
        used: vec![false; d.n_features()],
    };
    train_regularized(d, &params.forest, &mut penalty, rng)?;
    let used: alloc::vec::Vec<usize> = (0..d.n_features()).filter(|&f| penalty.used[f]).collect();
    Ok(Selection::from_selected(
        d.n_features(),
        &used,
        params.forest.n_trees,
    ))
}
