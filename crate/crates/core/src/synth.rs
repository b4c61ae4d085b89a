//! Synthetic high-dimensional classification data with a known split into
//! relevant, redundant and noise features.
//!
//! Columns are laid out as `[relevant | redundant | noise]`. Relevant and
//! noise columns are standard normal; redundant column `j` is relevant
//! column `j mod n_relevant` plus Gaussian noise of scale `noise_scale`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::selectors::Selection;

/// How the label depends on the relevant features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalModel {
    /// Class from thresholding the sum of the relevant features: at 0 for two
    /// classes, at empirical quantiles for more.
    LinearThreshold,
    /// Relevant features form pairs; each pair contributes
    /// `sign(a) xor sign(b)` and the number of active pairs is binned into
    /// classes. Every relevant feature is marginally independent of the label.
    XorPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_objects: usize,
    pub n_relevant: usize,
    pub n_redundant: usize,
    pub n_noise: usize,
    pub n_classes: usize,
    pub model: SignalModel,
    pub noise_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn n_features(&self) -> usize {
        self.n_relevant + self.n_redundant + self.n_noise
    }
}

/// Index sets partitioning the features of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub relevant: Vec<usize>,
    pub redundant: Vec<usize>,
    pub noise: Vec<usize>,
}

impl GroundTruth {
    /// Relevant and redundant features: the all-relevant target.
    pub fn all_relevant(&self) -> Vec<usize> {
        let mut v = self.relevant.clone();
        v.extend_from_slice(&self.redundant);
        v
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, GroundTruth)> {
    let p = spec.n_features();
    if p == 0 {
        return Err(Error::param("synthetic spec has no features"));
    }
    if spec.n_relevant == 0 {
        return Err(Error::param("at least one relevant feature is needed"));
    }
    if spec.n_objects < 2 {
        return Err(Error::param("at least two objects are needed"));
    }
    if spec.n_classes < 2 {
        return Err(Error::param("at least two classes are needed"));
    }
    if !(spec.noise_scale.is_finite() && spec.noise_scale >= 0.0) {
        return Err(Error::param(format!(
            "noise scale {} must be finite and non-negative",
            spec.noise_scale
        )));
    }
    if spec.model == SignalModel::XorPairs && spec.n_relevant % 2 != 0 {
        return Err(Error::param(
            "xor-pairs needs an even number of relevant features",
        ));
    }
    let n = spec.n_objects;
    let normal = |index: u64| {
        let mut r = rng::stream(spec.seed, tag::SYNTH, index);
        (0..n)
            .map(|_| rng::standard_normal(&mut r))
            .collect::<Vec<f64>>()
    };
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..spec.n_relevant {
        columns.push(normal(j as u64));
    }
    for j in 0..spec.n_redundant {
        let src = j % spec.n_relevant;
        let jitter = normal((spec.n_relevant + j) as u64);
        let col = columns[src]
            .iter()
            .zip(&jitter)
            .map(|(x, e)| x + spec.noise_scale * e)
            .collect();
        columns.push(col);
    }
    for j in 0..spec.n_noise {
        columns.push(normal((spec.n_relevant + spec.n_redundant + j) as u64));
    }

    let labels = match spec.model {
        SignalModel::LinearThreshold => {
            let score: Vec<f64> = (0..n)
                .map(|i| (0..spec.n_relevant).map(|j| columns[j][i]).sum())
                .collect();
            if spec.n_classes == 2 {
                score.iter().map(|&s| usize::from(s > 0.0)).collect()
            } else {
                quantile_bins(&score, spec.n_classes)
            }
        }
        SignalModel::XorPairs => {
            let pairs = spec.n_relevant / 2;
            (0..n)
                .map(|i| {
                    let active = (0..pairs)
                        .filter(|&k| (columns[2 * k][i] > 0.0) != (columns[2 * k + 1][i] > 0.0))
                        .count();
                    (active * spec.n_classes / (pairs + 1)).min(spec.n_classes - 1)
                })
                .collect()
        }
    };

    let classes: Vec<String> = (0..spec.n_classes).map(|c| format!("c{c}")).collect();
    let names: Vec<String> = (0..p).map(|f| format!("x{f}")).collect();
    let dataset = Dataset::new(columns, labels, classes, names)?;
    let truth = GroundTruth {
        relevant: (0..spec.n_relevant).collect(),
        redundant: (spec.n_relevant..spec.n_relevant + spec.n_redundant).collect(),
        noise: (spec.n_relevant + spec.n_redundant..p).collect(),
    };
    Ok((dataset, truth))
}

/// Class by rank: the `i`-th smallest of `n` scores gets class `i * k / n`.
fn quantile_bins(score: &[f64], k: usize) -> Vec<usize> {
    let n = score.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * k / n;
    }
    labels
}

/// Agreement of a selection with the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthScore {
    /// Fraction of selected features that are relevant or redundant (1 when nothing is selected).
    pub precision: f64,
    /// Fraction of relevant and redundant features selected.
    pub recall: f64,
    /// Fraction of the relevant features selected.
    pub relevant_recall: f64,
    pub noise_hits: usize,
}

pub fn score_against_truth(s: &Selection, t: &GroundTruth) -> TruthScore {
    let in_set = |set: &[usize]| s.selected.iter().filter(|f| set.contains(f)).count();
    let truth = t.all_relevant();
    let hits = in_set(&truth);
    let precision = if s.selected.is_empty() {
        log::debug!("empty selection scored with precision 1");
        1.0
    } else {
        hits as f64 / s.selected.len() as f64
    };
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    TruthScore {
        precision,
        recall: ratio(hits, truth.len()),
        relevant_recall: ratio(in_set(&t.relevant), t.relevant.len()),
        noise_hits: in_set(&t.noise),
    }
}
