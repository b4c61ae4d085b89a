//! Column-major feature matrix with categorical labels, bootstrap
//! resampling and shadow-feature augmentation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::rng;

/// Minimum number of shadow columns added by [`augment_with_shadows`].
pub const MIN_SHADOWS: usize = 5;

/// Dense numeric features (stored per column) plus one class label per object.
///
/// Labels are indices into `classes`; the order of `classes` is the fixed
/// class ordering used for every tie-break. Datasets derived by row
/// selection keep the full class table, so a class may have no rows there.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: Vec<String>,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from columns, label indices, class names and feature names.
    pub fn new(
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 objects, got {n}"
            )));
        }
        if columns.is_empty() {
            return Err(Error::InvalidDataset("need at least 1 feature".into()));
        }
        if classes.is_empty() {
            return Err(Error::InvalidDataset("empty class table".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        for (col, name) in columns.iter().zip(&names) {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "column `{name}` has {} values, expected {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    feature: name.clone(),
                    row,
                });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::InvalidDataset(format!(
                "label index {bad} outside class table of size {}",
                classes.len()
            )));
        }
        Ok(Dataset {
            columns,
            labels,
            classes,
            names,
        })
    }

    /// Builds a dataset from textual labels; the class table is the sorted set
    /// of distinct labels.
    pub fn from_labels<S: AsRef<str>>(
        columns: Vec<Vec<f64>>,
        labels: &[S],
        names: Vec<String>,
    ) -> Result<Self> {
        let classes: Vec<String> = labels
            .iter()
            .map(|l| l.as_ref())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(ToString::to_string)
            .collect();
        let idx = labels
            .iter()
            .map(|l| {
                classes
                    .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                    .unwrap_or(0)
            })
            .collect();
        Self::new(columns, idx, classes, names)
    }

    /// Derived dataset whose invariants follow from an already valid parent.
    fn derived(&self, columns: Vec<Vec<f64>>, labels: Vec<usize>, names: Vec<String>) -> Self {
        Dataset {
            columns,
            labels,
            classes: self.classes.clone(),
            names,
        }
    }

    pub fn n_objects(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    /// Copy of one object's feature vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Number of objects of each class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Dataset made of the given rows, in order; duplicates are kept.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 rows, got {}",
                rows.len()
            )));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= self.n_objects()) {
            return Err(Error::InvalidDataset(format!("row {r} out of range")));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Ok(self.derived(columns, labels, self.names.clone()))
    }

    /// Dataset restricted to the given features, in order.
    pub fn select_features(&self, features: &[usize]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidDataset("empty feature subset".into()));
        }
        if let Some(&f) = features.iter().find(|&&f| f >= self.n_features()) {
            return Err(Error::InvalidDataset(format!("feature {f} out of range")));
        }
        let mut seen = BTreeSet::new();
        if let Some(&f) = features.iter().find(|&&f| !seen.insert(f)) {
            return Err(Error::InvalidDataset(format!("feature {f} selected twice")));
        }
        let columns = features.iter().map(|&f| self.columns[f].clone()).collect();
        let names = features.iter().map(|&f| self.names[f].clone()).collect();
        Ok(self.derived(columns, self.labels.clone(), names))
    }

    /// Groups rows that are identical in every feature and the label.
    /// Returns the group of each row and the first row of each group;
    /// groups are numbered in order of first appearance.
    pub fn duplicate_groups(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.n_objects();
        let same = |a: usize, b: usize| {
            self.labels[a] == self.labels[b]
                && self
                    .columns
                    .iter()
                    .all(|c| c[a].to_bits() == c[b].to_bits())
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.labels[a]
                .cmp(&self.labels[b])
                .then_with(|| {
                    self.columns
                        .iter()
                        .map(|c| c[a].total_cmp(&c[b]))
                        .find(|o| o.is_ne())
                        .unwrap_or(core::cmp::Ordering::Equal)
                })
                .then(a.cmp(&b))
        });
        let mut first = vec![0usize; n];
        for (k, &i) in order.iter().enumerate() {
            first[i] = if k > 0 && same(order[k - 1], i) {
                first[order[k - 1]]
            } else {
                i
            };
        }
        let mut group = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for i in 0..n {
            if first[i] == i {
                group[i] = reps.len();
                reps.push(i);
            }
        }
        for i in 0..n {
            group[i] = group[first[i]];
        }
        (group, reps)
    }
}

/// One bootstrap draw: `n` row indices sampled with replacement and the
/// rows that were never drawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resample {
    pub train: Vec<usize>,
    pub oob: Vec<usize>,
}

impl Resample {
    /// Resample determined by an explicit sequence of draws over `0..n`.
    pub fn from_draws(n: usize, draws: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("bootstrap needs n >= 2, got {n}")));
        }
        if draws.len() != n {
            return Err(Error::param(format!("{} draws for n = {n}", draws.len())));
        }
        let mut drawn = vec![false; n];
        for &d in &draws {
            if d >= n {
                return Err(Error::param(format!("draw {d} outside 0..{n}")));
            }
            drawn[d] = true;
        }
        let mut train = draws;
        train.sort_unstable();
        let oob = (0..n).filter(|&i| !drawn[i]).collect();
        Ok(Resample { train, oob })
    }

    pub fn n(&self) -> usize {
        self.train.len()
    }

    /// Membership mask of the out-of-bag rows.
    pub fn oob_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.train.len()];
        for &i in &self.oob {
            mask[i] = true;
        }
        mask
    }
}

/// Draws `n` of `n` objects with replacement.
pub fn bootstrap_resample<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<Resample> {
    if n < 2 {
        return Err(Error::param(format!("bootstrap needs n >= 2, got {n}")));
    }
    let draws = (0..n).map(|_| rng::below(rng, n)).collect();
    Resample::from_draws(n, draws)
}

/// A dataset extended with permuted copies of its columns.
#[derive(Debug, Clone)]
pub struct ShadowedDataset {
    pub base: Dataset,
    pub shadows: Vec<Vec<f64>>,
    /// `origin[s]` is the base column shadow `s` was permuted from.
    pub origin: Vec<usize>,
}

impl ShadowedDataset {
    pub fn n_shadows(&self) -> usize {
        self.shadows.len()
    }

    /// Single dataset with the base columns first and shadows after them.
    pub fn combined(&self) -> Dataset {
        let mut columns = self.base.columns.clone();
        columns.extend(self.shadows.iter().cloned());
        let mut names = self.base.names.clone();
        names.extend((0..self.shadows.len()).map(|s| format!("shadow#{s}")));
        self.base.derived(columns, self.base.labels.clone(), names)
    }
}

/// Adds `max(P, 5)` shadows; shadow `s` is an independent permutation of
/// base column `s mod P`.
///
/// Rows that are exact duplicates (all features and the label, as produced
/// by bootstrap resampling) form one object and are moved as a block, and
/// blocks only trade places with blocks of the same size. Shadows thus keep
/// both the multiset of values and the duplicate structure of their source.
pub fn augment_with_shadows<R: RngCore + ?Sized>(d: &Dataset, rng: &mut R) -> ShadowedDataset {
    let p = d.n_features();
    let count = p.max(MIN_SHADOWS);
    let (group, reps) = d.duplicate_groups();
    let mut size = vec![0usize; reps.len()];
    for &g in &group {
        size[g] += 1;
    }
    let mut strata: Vec<Vec<usize>> = Vec::new();
    for (g, &s) in size.iter().enumerate() {
        if strata.len() < s {
            strata.resize(s, Vec::new());
        }
        strata[s - 1].push(g);
    }
    let mut partner: Vec<usize> = (0..reps.len()).collect();
    let mut shadows = Vec::with_capacity(count);
    let mut origin = Vec::with_capacity(count);
    for s in 0..count {
        let src = s % p;
        for stratum in &strata {
            let mut shuffled = stratum.clone();
            rng::shuffle(rng, &mut shuffled);
            for (&g, &h) in stratum.iter().zip(&shuffled) {
                partner[g] = h;
            }
        }
        let col = &d.columns[src];
        shadows.push(group.iter().map(|&g| col[reps[partner[g]]]).collect());
        origin.push(src);
    }
    ShadowedDataset {
        base: d.clone(),
        shadows,
        origin,
    }
}
