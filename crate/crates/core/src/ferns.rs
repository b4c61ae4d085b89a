//! Random Ferns: bagged fixed-depth ferns with random tests, posterior
//! leaves and maximum a-posteriori voting, plus an OOB importance based on
//! the probability assigned to the correct class.
//!
//! A fern of depth `D` applies `D` tests `x[feature] >= threshold`; the
//! test outcomes form the bits of a leaf index in `0..2^D`. Each test draws
//! its feature uniformly (repeats allowed) and its threshold as the value of
//! that feature at a uniformly drawn bag object. Leaves hold add-one
//! smoothed class distributions of the bag objects that reach them, stored
//! as natural logarithms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dataset::{bootstrap_resample, Dataset, Resample};
use crate::error::{Error, Result};
use crate::forest::argmax_first;
use crate::importance::{ImportanceVector, SourceTag};
use crate::rng::{self, tag};

pub const MAX_DEPTH: usize = 16;

/// Scale on which correct-class probabilities are compared for importance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbScale {
    #[default]
    Log,
    Linear,
}

/// Denominator of the per-feature importance average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FernAveraging {
    /// Mean over the ferns that test the feature.
    #[default]
    UsingFerns,
    /// Mean over all ferns with a non-empty OOB set.
    AllFerns,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FernsParams {
    pub depth: usize,
    pub n_ferns: usize,
    pub scale: ProbScale,
    pub averaging: FernAveraging,
}

impl FernsParams {
    pub fn new(depth: usize, n_ferns: usize) -> Self {
        FernsParams {
            depth,
            n_ferns,
            scale: ProbScale::Log,
            averaging: FernAveraging::UsingFerns,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return Err(Error::param(format!(
                "fern depth {} not in 1..={MAX_DEPTH}",
                self.depth
            )));
        }
        if self.n_ferns == 0 {
            return Err(Error::param("n_ferns must be positive"));
        }
        Ok(())
    }
}

impl Default for FernsParams {
    fn default() -> Self {
        FernsParams::new(5, 1000)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fern {
    /// `(feature, threshold)` per level; bit `i` of the leaf index is `x[f_i] >= t_i`.
    pub tests: Vec<(u32, f64)>,
    /// Row-major `2^D x K` table of log class probabilities.
    pub leaves: Vec<f64>,
    pub bag: Resample,
}

impl Fern {
    #[inline]
    fn leaf_with(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut idx = 0;
        for (bit, &(f, t)) in self.tests.iter().enumerate() {
            if value(f as usize) >= t {
                idx |= 1 << bit;
            }
        }
        idx
    }

    /// Log class probabilities of one leaf.
    pub fn leaf(&self, leaf: usize, n_classes: usize) -> &[f64] {
        &self.leaves[leaf * n_classes..(leaf + 1) * n_classes]
    }

    /// Sorted distinct features tested by the fern.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.tests.iter().map(|&(f, _)| f as usize).collect();
        used.sort_unstable();
        used.dedup();
        used
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FernsModel {
    pub ferns: Vec<Fern>,
    pub params: FernsParams,
    n_features: usize,
    n_classes: usize,
}

/// Trains `p.n_ferns` ferns, each on its own bootstrap bag.
pub fn train_ferns<R: RngCore + ?Sized>(
    d: &Dataset,
    p: &FernsParams,
    rng: &mut R,
) -> Result<FernsModel> {
    p.validate()?;
    let seed = rng.next_u64();
    let (n, k) = (d.n_objects(), d.n_classes());
    let leaves = 1usize << p.depth;
    let labels = d.labels();
    let mut ferns = Vec::with_capacity(p.n_ferns);
    let mut counts = vec![0u32; leaves * k];
    for i in 0..p.n_ferns {
        let mut frng = rng::stream(seed, tag::FERN, i as u64);
        let bag = bootstrap_resample(n, &mut frng)?;
        let tests = (0..p.depth)
            .map(|_| {
                let f = rng::below(&mut frng, d.n_features());
                let at = bag.train[rng::below(&mut frng, n)];
                (f as u32, d.column(f)[at])
            })
            .collect();
        let mut fern = Fern {
            tests,
            leaves: Vec::new(),
            bag,
        };
        counts.iter_mut().for_each(|c| *c = 0);
        for &r in &fern.bag.train {
            let leaf = fern.leaf_with(|f| d.column(f)[r]);
            counts[leaf * k + labels[r]] += 1;
        }
        fern.leaves = counts
            .chunks(k)
            .flat_map(|c| {
                let total = c.iter().sum::<u32>() as f64 + k as f64;
                c.iter().map(move |&x| libm::log((x as f64 + 1.0) / total))
            })
            .collect();
        ferns.push(fern);
    }
    Ok(FernsModel {
        ferns,
        params: *p,
        n_features: d.n_features(),
        n_classes: k,
    })
}

impl FernsModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn scores_with(&self, value: impl Fn(usize) -> f64 + Copy) -> Vec<f64> {
        let k = self.n_classes;
        let mut total = vec![0.0; k];
        for fern in &self.ferns {
            let leaf = fern.leaf(fern.leaf_with(value), k);
            for (t, v) in total.iter_mut().zip(leaf) {
                *t += v;
            }
        }
        total
    }

    /// Summed log-posterior per class for one feature vector.
    pub fn class_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::WidthMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(self.scores_with(|f| row[f]))
    }

    /// Maximum a-posteriori class; ties go to the lowest class index.
    pub fn predict_row(&self, row: &[f64]) -> Result<usize> {
        Ok(argmax_first(&self.class_scores(row)?))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Ensemble OOB error, voting each object only with ferns that did not
    /// see it. `None` if no object is OOB anywhere.
    pub fn oob_error(&self, d: &Dataset) -> Result<Option<f64>> {
        self.check_shape(d)?;
        let k = self.n_classes;
        let mut sums = vec![0.0; d.n_objects() * k];
        let mut seen = vec![false; d.n_objects()];
        for fern in &self.ferns {
            for &i in &fern.bag.oob {
                seen[i] = true;
                let leaf = fern.leaf(fern.leaf_with(|f| d.column(f)[i]), k);
                for (s, v) in sums[i * k..(i + 1) * k].iter_mut().zip(leaf) {
                    *s += v;
                }
            }
        }
        let (mut n, mut wrong) = (0usize, 0usize);
        for i in (0..d.n_objects()).filter(|&i| seen[i]) {
            n += 1;
            if argmax_first(&sums[i * k..(i + 1) * k]) != d.labels()[i] {
                wrong += 1;
            }
        }
        Ok((n > 0).then(|| wrong as f64 / n as f64))
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
}

/// Mean over `rows` of the drop in correct-class (log-)probability when the
/// values of `feature` are taken from `perm[i]` instead of `rows[i]`.
pub(crate) fn fern_feature_delta(
    fern: &Fern,
    d: &Dataset,
    rows: &[usize],
    feature: usize,
    perm: &[usize],
    n_classes: usize,
    scale: ProbScale,
) -> f64 {
    let labels = d.labels();
    let read = |v: f64| match scale {
        ProbScale::Log => v,
        ProbScale::Linear => libm::exp(v),
    };
    let mut sum = 0.0;
    for (k, &i) in rows.iter().enumerate() {
        let y = labels[i];
        let base = fern.leaf_with(|f| d.column(f)[i]);
        let moved = fern.leaf_with(|f| {
            if f == feature {
                d.column(f)[perm[k]]
            } else {
                d.column(f)[i]
            }
        });
        sum += read(fern.leaf(base, n_classes)[y]) - read(fern.leaf(moved, n_classes)[y]);
    }
    sum / rows.len() as f64
}

/// OOB importance of a ferns model on its training data: per fern and per
/// distinct feature it tests, the mean drop in correct-class probability
/// after permuting that feature among the fern's OOB objects.
pub fn ferns_importance<R: RngCore + ?Sized>(
    m: &FernsModel,
    d: &Dataset,
    rng: &mut R,
) -> Result<ImportanceVector> {
    m.check_shape(d)?;
    let seed = rng.next_u64();
    let mut sums = vec![0.0; m.n_features];
    let mut uses = vec![0usize; m.n_features];
    let mut with_oob = 0usize;
    let mut perm = Vec::new();
    for (i, fern) in m.ferns.iter().enumerate() {
        let oob = &fern.bag.oob;
        if oob.is_empty() {
            continue;
        }
        with_oob += 1;
        let mut prng = rng::stream(seed, tag::PERMUTE, i as u64);
        for f in fern.used_features() {
            perm.clear();
            perm.extend_from_slice(oob);
            rng::shuffle(&mut prng, &mut perm);
            sums[f] += fern_feature_delta(fern, d, oob, f, &perm, m.n_classes, m.params.scale);
            uses[f] += 1;
        }
    }
    let scores = sums
        .iter()
        .zip(&uses)
        .map(|(&s, &u)| {
            let denom = match m.params.averaging {
                FernAveraging::UsingFerns => u,
                FernAveraging::AllFerns => with_oob,
            };
            if u == 0 || denom == 0 {
                0.0
            } else {
                s / denom as f64
            }
        })
        .collect();
    Ok(ImportanceVector::new(
        scores,
        SourceTag::Ferns {
            depth: m.params.depth,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use alloc::string::String;

    fn xor_data(n: usize, seed: u64) -> Dataset {
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
        let names = (0..=p_noise).map(|i| format!("f{i}")).collect();
        Dataset::new(cols, y, vec!["a".into(), "b".into()], names).unwrap()
    }

    #[test]
    fn constant_feature_depth_one() {
        let d = Dataset::new(
            vec![vec![3.0; 6]],
            vec![0, 0, 0, 1, 1, 0],
            vec!["a".into(), "b".into()],
            vec![String::from("c")],
        )
        .unwrap();
        let m = train_ferns(&d, &FernsParams::new(1, 1), &mut stream(1, 0, 0)).unwrap();
        let fern = &m.ferns[0];
        // x >= t holds for every row, so the whole bag lands in leaf 1.
        let bag_b = fern
            .bag
            .train
            .iter()
            .filter(|&&r| d.labels()[r] == 1)
            .count() as f64;
        let expect = [
            libm::log((6.0 - bag_b + 1.0) / 8.0),
            libm::log((bag_b + 1.0) / 8.0),
        ];
        assert_eq!(fern.leaf(1, 2), &expect);
        assert_eq!(fern.leaf(0, 2), &[libm::log(0.5), libm::log(0.5)]);
    }

    #[test]
    fn leaves_are_proper_distributions() {
        let d = xor_data(50, 1);
        let m = train_ferns(&d, &FernsParams::new(3, 40), &mut stream(2, 0, 0)).unwrap();
        for fern in &m.ferns {
            assert_eq!(fern.tests.len(), 3);
            for leaf in 0..8 {
                let probs = fern.leaf(leaf, 2);
                assert!(probs.iter().all(|p| p.is_finite()));
                let s: f64 = probs.iter().map(|&l| libm::exp(l)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_class_leaves_favor_it() {
        let d = Dataset::new(
            vec![vec![1.0, 2.0, 3.0, 4.0]],
            vec![0; 4],
            vec!["z".into()],
            vec!["x".into()],
        )
        .unwrap();
        let m = train_ferns(&d, &FernsParams::new(2, 5), &mut stream(3, 0, 0)).unwrap();
        assert_eq!(m.predict_row(&[2.5]).unwrap(), 0);
    }

    #[test]
    fn deterministic_training() {
        let d = xor_data(40, 2);
        let p = FernsParams::new(4, 20);
        assert_eq!(
            train_ferns(&d, &p, &mut stream(5, 0, 0)).unwrap(),
            train_ferns(&d, &p, &mut stream(5, 0, 0)).unwrap()
        );
    }

    #[test]
    fn invalid_depth_rejected() {
        let d = xor_data(10, 2);
        assert!(train_ferns(&d, &FernsParams::new(0, 1), &mut stream(5, 0, 0)).is_err());
        assert!(train_ferns(&d, &FernsParams::new(17, 1), &mut stream(5, 0, 0)).is_err());
    }

    #[test]
    fn map_tie_goes_to_first_class() {
        let fern = |a: f64, b: f64| Fern {
            tests: vec![(0, 0.0)],
            leaves: vec![a, b, a, b],
            bag: Resample {
                train: vec![],
                oob: vec![],
            },
        };
        let m = FernsModel {
            ferns: vec![fern(-0.1, -2.0), fern(-2.0, -0.1)],
            params: FernsParams::new(1, 2),
            n_features: 1,
            n_classes: 2,
        };
        assert_eq!(m.predict_row(&[1.0]).unwrap(), 0);
        let one = FernsModel {
            ferns: vec![fern(-2.0, -0.1)],
            ..m.clone()
        };
        assert_eq!(one.predict_row(&[1.0]).unwrap(), 1);
        assert!(m.predict_row(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn xor_learned_at_depth_two() {
        let d = xor_data(200, 7);
        let m = train_ferns(&d, &FernsParams::new(2, 1000), &mut stream(8, 0, 0)).unwrap();
        let err = m.oob_error(&d).unwrap().unwrap();
        assert!(err < 0.2, "oob error {err}");
    }

    #[test]
    fn unused_feature_scores_zero_and_label_copy_wins() {
        let d = label_copy_in_noise(60, 50, 9);
        let m = train_ferns(&d, &FernsParams::new(1, 40), &mut stream(10, 0, 0)).unwrap();
        let imp = ferns_importance(&m, &d, &mut stream(11, 0, 0)).unwrap();
        let used: Vec<usize> = m.ferns.iter().flat_map(|f| f.used_features()).collect();
        for f in 0..d.n_features() {
            if !used.contains(&f) {
                assert_eq!(imp.scores()[f], 0.0);
            }
        }
        let m = train_ferns(&d, &FernsParams::new(1, 2000), &mut stream(12, 0, 0)).unwrap();
        let s = ferns_importance(&m, &d, &mut stream(13, 0, 0)).unwrap();
        assert!(s.scores()[1..].iter().all(|&v| v < s.scores()[0]));
    }

    #[test]
    fn identity_permutation_gives_zero() {
        let d = label_copy_in_noise(30, 5, 3);
        let m = train_ferns(&d, &FernsParams::new(3, 20), &mut stream(4, 0, 0)).unwrap();
        for fern in &m.ferns {
            for f in fern.used_features() {
                let oob = &fern.bag.oob;
                if !oob.is_empty() {
                    assert_eq!(
                        fern_feature_delta(fern, &d, oob, f, oob, 2, ProbScale::Log),
                        0.0
                    );
                }
            }
        }
    }
}
