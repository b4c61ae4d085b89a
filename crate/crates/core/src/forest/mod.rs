//! Random Forest classifier: bagged CART trees with random feature
//! subsets, plus the Gini and out-of-bag permutation importances.

mod tree;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dataset::{bootstrap_resample, Dataset, Resample};
use crate::error::{Error, Result};
use crate::importance::ImportanceVector;
use crate::rng::{self, tag};

pub(crate) use tree::argmax_first;
use tree::{GrowOptions, Grower};
pub use tree::{Node, Penalty, Tree};

/// Number of features tried at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mtry {
    /// `max(1, floor(sqrt(P)))`.
    #[default]
    Sqrt,
    /// Every feature.
    All,
    Fixed(usize),
}

impl Mtry {
    pub fn resolve(self, p: usize) -> Result<usize> {
        match self {
            Mtry::Sqrt => Ok((libm::sqrt(p as f64) as usize).clamp(1, p.max(1))),
            Mtry::All => Ok(p),
            Mtry::Fixed(m) if m >= 1 && m <= p => Ok(m),
            Mtry::Fixed(m) => Err(Error::param(format!("mtry {m} not in 1..={p}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: Mtry,
    /// Nodes with fewer rows than this are not split.
    pub min_node: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: Mtry::Sqrt,
            min_node: 1,
            max_depth: None,
        }
    }
}

impl ForestParams {
    pub fn with_trees(n_trees: usize) -> Self {
        ForestParams {
            n_trees,
            ..Self::default()
        }
    }

    fn grow_options(&self, p: usize) -> Result<GrowOptions> {
        if self.n_trees == 0 {
            return Err(Error::param("n_trees must be positive"));
        }
        if self.min_node == 0 {
            return Err(Error::param("min_node must be positive"));
        }
        Ok(GrowOptions {
            mtry: self.mtry.resolve(p)?,
            min_node: self.min_node,
            max_depth: self.max_depth.unwrap_or(usize::MAX),
        })
    }
}

/// Importance measures derived from a trained forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ForestMeasure {
    /// Total weighted Gini decrease of splits on the feature.
    Gini,
    /// Mean per-tree OOB accuracy drop after permuting the feature.
    Raw,
    /// Raw importance divided by the standard deviation of the per-tree drops.
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub bags: Vec<Resample>,
    /// Misclassification rate of each tree on its own OOB rows (`None` when empty).
    pub tree_oob_errors: Vec<Option<f64>>,
    n_features: usize,
    n_classes: usize,
}

/// Trains `p.n_trees` trees, each on its own bootstrap bag.
pub fn train_forest<R: RngCore + ?Sized>(
    d: &Dataset,
    p: &ForestParams,
    rng: &mut R,
) -> Result<ForestModel> {
    train_inner(d, p, rng, None)
}

/// Trains a forest whose split gains are regularised by `penalty`; the
/// penalty's used-feature set accumulates across trees.
pub fn train_regularized<R: RngCore + ?Sized>(
    d: &Dataset,
    p: &ForestParams,
    penalty: &mut Penalty,
    rng: &mut R,
) -> Result<ForestModel> {
    if penalty.used.len() != d.n_features() {
        return Err(Error::param("penalty state does not match feature count"));
    }
    train_inner(d, p, rng, Some(penalty))
}

fn train_inner<R: RngCore + ?Sized>(
    d: &Dataset,
    p: &ForestParams,
    rng: &mut R,
    mut penalty: Option<&mut Penalty>,
) -> Result<ForestModel> {
    let opts = p.grow_options(d.n_features())?;
    let seed = rng.next_u64();
    let mut grower = Grower::new(d, opts);
    let mut trees = Vec::with_capacity(p.n_trees);
    let mut bags = Vec::with_capacity(p.n_trees);
    let mut tree_oob_errors = Vec::with_capacity(p.n_trees);
    for t in 0..p.n_trees {
        let mut tree_rng = rng::stream(seed, tag::TREE, t as u64);
        let bag = bootstrap_resample(d.n_objects(), &mut tree_rng)?;
        let tree = grower.grow(bag.train.clone(), &mut tree_rng, penalty.as_deref_mut());
        tree_oob_errors.push(tree_error(&tree, d, &bag.oob));
        trees.push(tree);
        bags.push(bag);
    }
    Ok(ForestModel {
        trees,
        bags,
        tree_oob_errors,
        n_features: d.n_features(),
        n_classes: d.n_classes(),
    })
}

fn tree_error(tree: &Tree, d: &Dataset, rows: &[usize]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let wrong = rows
        .iter()
        .filter(|&&i| tree.predict_with(|f| d.column(f)[i]) != d.labels()[i])
        .count();
    Some(wrong as f64 / rows.len() as f64)
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn vote(
        &self,
        trees: impl Iterator<Item = usize>,
        value: impl Fn(usize) -> f64 + Copy,
    ) -> Vec<u32> {
        let mut votes = vec![0u32; self.n_classes];
        for t in trees {
            votes[self.trees[t].predict_with(value)] += 1;
        }
        votes
    }

    /// Plurality vote for one feature vector; ties go to the lowest class index.
    pub fn predict_row(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::WidthMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(argmax_first(&self.vote(0..self.trees.len(), |f| row[f])))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Predictions for every object of a dataset with matching width.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<usize>> {
        self.check_shape(d)?;
        Ok((0..d.n_objects())
            .map(|i| argmax_first(&self.vote(0..self.trees.len(), |f| d.column(f)[i])))
            .collect())
    }

    fn check_shape(&self, d: &Dataset) -> Result<()> {
        if d.n_features() != self.n_features {
            return Err(Error::WidthMismatch {
                expected: self.n_features,
                got: d.n_features(),
            });
        }
        Ok(())
    }

    /// Ensemble OOB error: each object is voted on by the trees that did not
    /// see it; objects in every bag are skipped. `None` if no object is OOB.
    pub fn oob_error(&self, d: &Dataset) -> Result<Option<f64>> {
        self.check_shape(d)?;
        let masks: Vec<Vec<bool>> = self.bags.iter().map(Resample::oob_mask).collect();
        let (mut seen, mut wrong) = (0usize, 0usize);
        for i in 0..d.n_objects() {
            let trees = (0..self.trees.len()).filter(|&t| masks[t][i]);
            let votes = self.vote(trees, |f| d.column(f)[i]);
            if votes.iter().all(|&v| v == 0) {
                continue;
            }
            seen += 1;
            if argmax_first(&votes) != d.labels()[i] {
                wrong += 1;
            }
        }
        Ok((seen > 0).then(|| wrong as f64 / seen as f64))
    }

    /// Per-feature sum of the Gini decreases of all splits.
    pub fn gini_importance(&self) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_features];
        for tree in &self.trees {
            for (f, dec) in tree.splits() {
                scores[f] += dec;
            }
        }
        scores
    }

    /// Raw and normalised permutation importance.
    ///
    /// For each tree with a non-empty OOB set, every feature the tree splits
    /// on is permuted once among the OOB rows and the drop in correctly
    /// classified OOB rows (as a fraction) is recorded. Features a tree does
    /// not use contribute an exact zero for that tree.
    pub fn permutation_importance<R: RngCore + ?Sized>(
        &self,
        d: &Dataset,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_shape(d)?;
        let seed = rng.next_u64();
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); self.n_features];
        let mut counted = 0usize;
        let mut perm = Vec::new();
        for (t, tree) in self.trees.iter().enumerate() {
            let oob = &self.bags[t].oob;
            if oob.is_empty() {
                continue;
            }
            counted += 1;
            let base = correct_count(tree, d, oob, None);
            let mut prng = rng::stream(seed, tag::PERMUTE, t as u64);
            for f in tree.used_features() {
                perm.clear();
                perm.extend_from_slice(oob);
                rng::shuffle(&mut prng, &mut perm);
                let permuted = correct_count(tree, d, oob, Some((f, &perm)));
                let delta = (base as f64 - permuted as f64) / oob.len() as f64;
                deltas[f].push(delta);
            }
        }
        let mut raw = vec![0.0; self.n_features];
        let mut norm = vec![0.0; self.n_features];
        if counted == 0 {
            return Ok((raw, norm));
        }
        let total = counted as f64;
        for f in 0..self.n_features {
            let mean = deltas[f].iter().sum::<f64>() / total;
            let zeros = (counted - deltas[f].len()) as f64;
            let ss = deltas[f]
                .iter()
                .map(|x| (x - mean) * (x - mean))
                .sum::<f64>()
                + zeros * mean * mean;
            let sd = libm::sqrt(ss / total);
            raw[f] = mean;
            norm[f] = if sd > 0.0 { mean / sd } else { 0.0 };
        }
        Ok((raw, norm))
    }
}

/// Correct predictions of `tree` over `rows`, optionally reading feature
/// `f` of `rows[i]` from object `perm[i]` instead.
pub(crate) fn correct_count(
    tree: &Tree,
    d: &Dataset,
    rows: &[usize],
    permuted: Option<(usize, &[usize])>,
) -> usize {
    let labels = d.labels();
    rows.iter()
        .enumerate()
        .filter(|&(k, &i)| {
            let pred = match permuted {
                None => tree.predict_with(|g| d.column(g)[i]),
                Some((f, perm)) => tree.predict_with(|g| {
                    if g == f {
                        d.column(g)[perm[k]]
                    } else {
                        d.column(g)[i]
                    }
                }),
            };
            pred == labels[i]
        })
        .count()
}

/// One importance measure of `m`, computed on its training data `d`.
pub fn forest_importance<R: RngCore + ?Sized>(
    m: &ForestModel,
    d: &Dataset,
    measure: ForestMeasure,
    rng: &mut R,
) -> Result<ImportanceVector> {
    m.check_shape(d)?;
    let scores = match measure {
        ForestMeasure::Gini => m.gini_importance(),
        ForestMeasure::Raw => m.permutation_importance(d, rng)?.0,
        ForestMeasure::Normalized => m.permutation_importance(d, rng)?.1,
    };
    Ok(ImportanceVector::new(
        scores,
        crate::importance::SourceTag::Forest(measure),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use alloc::string::{String, ToString};

    pub(crate) fn xor_data(n: usize, seed: u64) -> Dataset {
        let mut r = stream(seed, 0, 0);
        let a: Vec<f64> = (0..n).map(|_| rng::unit(&mut r) * 2.0 - 1.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng::unit(&mut r) * 2.0 - 1.0).collect();
        let y: Vec<usize> = (0..n)
            .map(|i| usize::from((a[i] > 0.0) != (b[i] > 0.0)))
            .collect();
        Dataset::new(
            vec![a, b],
            y,
            vec!["0".into(), "1".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    fn label_copy_in_noise(n: usize, p_noise: usize, seed: u64) -> Dataset {
        let mut r = stream(seed, 0, 0);
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut cols = vec![y.iter().map(|&c| c as f64).collect::<Vec<_>>()];
        for _ in 0..p_noise {
            cols.push((0..n).map(|_| rng::standard_normal(&mut r)).collect());
        }
        let names = (0..=p_noise).map(|i| alloc::format!("f{i}")).collect();
        Dataset::new(cols, y, vec!["a".into(), "b".into()], names).unwrap()
    }

    #[test]
    fn single_class_forest_is_trivial() {
        let d = Dataset::new(
            vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]],
            vec![0; 5],
            vec!["only".to_string()],
            vec!["x".to_string()],
        )
        .unwrap();
        let m = train_forest(&d, &ForestParams::with_trees(20), &mut stream(1, 0, 0)).unwrap();
        for t in &m.trees {
            assert_eq!(t.nodes, vec![Node::Leaf { class: 0 }]);
        }
        assert_eq!(m.oob_error(&d).unwrap(), Some(0.0));
    }

    #[test]
    fn xor_is_learned() {
        let d = xor_data(200, 4);
        let m = train_forest(&d, &ForestParams::with_trees(200), &mut stream(2, 0, 0)).unwrap();
        let err = m.oob_error(&d).unwrap().unwrap();
        assert!(err < 0.1, "oob error {err}");
    }

    #[test]
    fn same_seed_same_trees() {
        let d = xor_data(60, 5);
        let p = ForestParams::with_trees(10);
        let a = train_forest(&d, &p, &mut stream(3, 0, 0)).unwrap();
        let b = train_forest(&d, &p, &mut stream(3, 0, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mtry_out_of_range_is_rejected() {
        let d = xor_data(20, 5);
        let p = ForestParams {
            mtry: Mtry::Fixed(3),
            ..ForestParams::with_trees(2)
        };
        assert!(train_forest(&d, &p, &mut stream(3, 0, 0)).is_err());
    }

    #[test]
    fn prediction_rules() {
        let stump = |class| Tree {
            nodes: vec![Node::Leaf { class }],
        };
        let mut m = ForestModel {
            trees: vec![stump(1), stump(1)],
            bags: vec![],
            tree_oob_errors: vec![],
            n_features: 2,
            n_classes: 2,
        };
        assert_eq!(m.predict_row(&[0.0, 0.0]).unwrap(), 1);
        m.trees = vec![stump(1), stump(0)];
        assert_eq!(m.predict_row(&[0.0, 0.0]).unwrap(), 0);
        assert_eq!(
            m.predict_row(&[0.0]),
            Err(Error::WidthMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn deep_forest_fits_training_rows() {
        let d = xor_data(100, 8);
        let m = train_forest(&d, &ForestParams::with_trees(100), &mut stream(2, 0, 0)).unwrap();
        let pred = m.predict_dataset(&d).unwrap();
        let wrong = pred.iter().zip(d.labels()).filter(|(a, b)| a != b).count();
        assert!(wrong <= 2, "{wrong} resubstitution errors");
    }

    #[test]
    fn split_decreases_are_non_negative_and_sum_up() {
        let d = label_copy_in_noise(40, 30, 1);
        let m = train_forest(&d, &ForestParams::with_trees(50), &mut stream(6, 0, 0)).unwrap();
        let total: f64 = m
            .trees
            .iter()
            .flat_map(|t| t.splits())
            .map(|(_, dec)| dec)
            .sum();
        assert!(m
            .trees
            .iter()
            .flat_map(|t| t.splits())
            .all(|(_, dec)| dec >= 0.0));
        let gini = m.gini_importance();
        assert!((gini.iter().sum::<f64>() - total).abs() <= 1e-9 * total);
    }

    #[test]
    fn unused_features_score_zero() {
        let d = label_copy_in_noise(40, 30, 2);
        let m = train_forest(&d, &ForestParams::with_trees(30), &mut stream(7, 0, 0)).unwrap();
        let used: Vec<bool> = (0..d.n_features())
            .map(|f| m.trees.iter().any(|t| t.used_features().contains(&f)))
            .collect();
        let gini = m.gini_importance();
        let (raw, norm) = m.permutation_importance(&d, &mut stream(8, 0, 0)).unwrap();
        assert!(used.iter().any(|u| !u));
        for f in 0..d.n_features() {
            if !used[f] {
                assert_eq!((gini[f], raw[f], norm[f]), (0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn label_copy_dominates_every_measure() {
        let d = label_copy_in_noise(60, 50, 3);
        let m = train_forest(&d, &ForestParams::with_trees(300), &mut stream(9, 0, 0)).unwrap();
        for measure in [
            ForestMeasure::Gini,
            ForestMeasure::Raw,
            ForestMeasure::Normalized,
        ] {
            let imp = forest_importance(&m, &d, measure, &mut stream(10, 0, 0)).unwrap();
            let s = imp.scores();
            assert!(s[1..].iter().all(|&v| v < s[0]), "{measure:?}");
        }
    }

    #[test]
    fn identity_permutation_changes_nothing() {
        let d = label_copy_in_noise(40, 10, 4);
        let m = train_forest(&d, &ForestParams::with_trees(10), &mut stream(11, 0, 0)).unwrap();
        for (t, tree) in m.trees.iter().enumerate() {
            let oob = &m.bags[t].oob;
            let base = correct_count(tree, &d, oob, None);
            for f in tree.used_features() {
                assert_eq!(correct_count(tree, &d, oob, Some((f, oob))), base);
            }
        }
    }

    #[test]
    fn degenerate_deviation_gives_zero_normalized() {
        // Constant features cannot be split on, so every tree is a single leaf.
        let d = Dataset::new(
            vec![vec![1.0; 8], vec![2.0; 8]],
            vec![0, 1, 0, 1, 0, 1, 0, 1],
            vec!["a".into(), "b".into()],
            vec![String::from("x"), String::from("y")],
        )
        .unwrap();
        let m = train_forest(&d, &ForestParams::with_trees(10), &mut stream(1, 0, 0)).unwrap();
        let (raw, norm) = m.permutation_importance(&d, &mut stream(2, 0, 0)).unwrap();
        assert_eq!(raw, vec![0.0, 0.0]);
        assert_eq!(norm, vec![0.0, 0.0]);
    }

    #[test]
    fn stored_tree_oob_errors_match_prediction() {
        let d = xor_data(80, 12);
        let m = train_forest(&d, &ForestParams::with_trees(25), &mut stream(13, 0, 0)).unwrap();
        for (t, tree) in m.trees.iter().enumerate() {
            let oob = &m.bags[t].oob;
            let rows: Vec<Vec<f64>> = oob.iter().map(|&i| d.row(i)).collect();
            let single = ForestModel {
                trees: vec![tree.clone()],
                bags: vec![],
                tree_oob_errors: vec![],
                n_features: 2,
                n_classes: 2,
            };
            let pred = single.predict(&rows).unwrap();
            let wrong = pred
                .iter()
                .zip(oob)
                .filter(|(p, &i)| **p != d.labels()[i])
                .count();
            let expected = (!oob.is_empty()).then(|| wrong as f64 / oob.len() as f64);
            assert_eq!(m.tree_oob_errors[t], expected);
        }
    }
}
