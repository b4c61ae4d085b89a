//! Importance vectors and the pluggable importance sources the selectors use.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::ferns::{ferns_importance, train_ferns, FernsParams};
use crate::forest::{forest_importance, train_forest, ForestMeasure, ForestParams};

/// Which measure produced an [`ImportanceVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    Forest(ForestMeasure),
    Ferns { depth: usize },
}

/// One finite relevance score per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    scores: Vec<f64>,
    pub source: SourceTag,
}

impl ImportanceVector {
    pub fn new(scores: Vec<f64>, source: SourceTag) -> Self {
        debug_assert!(scores.iter().all(|s| s.is_finite()));
        ImportanceVector { scores, source }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Feature indices ordered by decreasing score, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }
}

/// Trains an ensemble on the given data and scores its features.
#[derive(Debug, Clone, PartialEq)]
pub enum ImportanceSource {
    Forest {
        measure: ForestMeasure,
        params: ForestParams,
    },
    Ferns(FernsParams),
}

impl ImportanceSource {
    pub fn forest(measure: ForestMeasure, n_trees: usize) -> Self {
        ImportanceSource::Forest {
            measure,
            params: ForestParams::with_trees(n_trees),
        }
    }

    pub fn ferns(depth: usize, n_ferns: usize) -> Self {
        ImportanceSource::Ferns(FernsParams::new(depth, n_ferns))
    }

    pub fn compute<R: RngCore + ?Sized>(
        &self,
        d: &Dataset,
        rng: &mut R,
    ) -> Result<ImportanceVector> {
        match self {
            ImportanceSource::Forest { measure, params } => {
                let model = train_forest(d, params, rng)?;
                forest_importance(&model, d, *measure, rng)
            }
            ImportanceSource::Ferns(params) => {
                let model = train_ferns(d, params, rng)?;
                ferns_importance(&model, d, rng)
            }
        }
    }
}
