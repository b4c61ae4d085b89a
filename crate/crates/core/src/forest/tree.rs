use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dataset::Dataset;
use crate::rng;

/// Splits whose weighted Gini decrease does not exceed this (per row) are
/// treated as no improvement.
const MIN_DECREASE_PER_ROW: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        decrease: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        class: u32,
    },
}

/// Binary classification tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Class of the leaf reached by an object whose feature `f` reads `value(f)`.
    #[inline]
    pub fn predict_with(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if value(feature as usize) <= threshold {
                        left
                    } else {
                        right
                    } as usize;
                }
                Node::Leaf { class } => return class as usize,
            }
        }
    }

    /// `(feature, decrease)` for every split.
    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Split {
                feature, decrease, ..
            } => Some((feature as usize, decrease)),
            Node::Leaf { .. } => None,
        })
    }

    /// Sorted distinct features tested anywhere in the tree.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.splits().map(|(f, _)| f).collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Split { left, right, .. } => {
                    1 + walk(t, left as usize).max(walk(t, right as usize))
                }
                Node::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }
}

/// Regularisation state shared by all trees of a regularised forest: a
/// split on a feature outside `used` has its gain multiplied by `lambda`.
#[derive(Debug, Clone)]
pub struct Penalty {
    pub lambda: f64,
    pub used: Vec<bool>,
}

pub(crate) struct GrowOptions {
    pub mtry: usize,
    pub min_node: usize,
    pub max_depth: usize,
}

struct Candidate {
    score: f64,
    decrease: f64,
    feature: usize,
    threshold: f64,
}

pub(crate) struct Grower<'a> {
    d: &'a Dataset,
    opts: GrowOptions,
    order: Vec<usize>,
    pairs: Vec<(f64, u32)>,
    left_counts: Vec<u64>,
}

impl<'a> Grower<'a> {
    pub fn new(d: &'a Dataset, opts: GrowOptions) -> Self {
        Grower {
            d,
            opts,
            order: (0..d.n_features()).collect(),
            pairs: Vec::with_capacity(d.n_objects()),
            left_counts: vec![0; d.n_classes()],
        }
    }

    /// Grows one tree on `rows` (duplicates allowed).
    pub fn grow<R: RngCore + ?Sized>(
        &mut self,
        rows: Vec<usize>,
        rng: &mut R,
        mut penalty: Option<&mut Penalty>,
    ) -> Tree {
        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((at, rows, depth)) = stack.pop() {
            let counts = self.class_counts(&rows);
            let majority = argmax_first(&counts);
            let impure = counts.iter().filter(|&&c| c > 0).count() > 1;
            let splittable =
                impure && rows.len() >= self.opts.min_node.max(2) && depth < self.opts.max_depth;
            let best = if splittable {
                self.best_split(&rows, &counts, rng, penalty.as_deref())
            } else {
                None
            };
            let Some(best) = best else {
                nodes[at] = Node::Leaf {
                    class: majority as u32,
                };
                continue;
            };
            if let Some(p) = penalty.as_deref_mut() {
                p.used[best.feature] = true;
            }
            let col = self.d.column(best.feature);
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&r| col[r] <= best.threshold);
            let l = nodes.len();
            nodes.push(Node::Leaf { class: 0 });
            nodes.push(Node::Leaf { class: 0 });
            nodes[at] = Node::Split {
                feature: best.feature as u32,
                threshold: best.threshold,
                decrease: best.decrease,
                left: l as u32,
                right: (l + 1) as u32,
            };
            stack.push((l + 1, right, depth + 1));
            stack.push((l, left, depth + 1));
        }
        Tree { nodes }
    }

    fn class_counts(&self, rows: &[usize]) -> Vec<u64> {
        let labels = self.d.labels();
        let mut counts = vec![0u64; self.d.n_classes()];
        for &r in rows {
            counts[labels[r]] += 1;
        }
        counts
    }

    /// Tries features in random order until `mtry` non-constant ones have
    /// been evaluated (or all features are exhausted).
    fn best_split<R: RngCore + ?Sized>(
        &mut self,
        rows: &[usize],
        counts: &[u64],
        rng: &mut R,
        penalty: Option<&Penalty>,
    ) -> Option<Candidate> {
        let p = self.order.len();
        let n = rows.len() as f64;
        let parent_sumsq: u64 = counts.iter().map(|c| c * c).sum();
        let parent = parent_sumsq as f64 / n;
        let min_decrease = MIN_DECREASE_PER_ROW * n;
        let labels = self.d.labels();
        let mut best: Option<Candidate> = None;
        let mut evaluated = 0;
        let mut i = 0;
        while i < p && evaluated < self.opts.mtry {
            let j = i + rng::below(rng, p - i);
            self.order.swap(i, j);
            let feature = self.order[i];
            i += 1;

            let col = self.d.column(feature);
            self.pairs.clear();
            self.pairs
                .extend(rows.iter().map(|&r| (col[r], labels[r] as u32)));
            self.pairs
                .sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
            let m = self.pairs.len();
            if self.pairs[0].0 == self.pairs[m - 1].0 {
                continue;
            }
            evaluated += 1;
            let weight = match penalty {
                Some(pen) if !pen.used[feature] => pen.lambda,
                _ => 1.0,
            };

            self.left_counts.iter_mut().for_each(|c| *c = 0);
            let mut sumsq_left = 0u64;
            let mut sumsq_right = parent_sumsq;
            for k in 0..m - 1 {
                let y = self.pairs[k].1 as usize;
                let cl = self.left_counts[y];
                let cr = counts[y] - cl;
                sumsq_left += 2 * cl + 1;
                sumsq_right -= 2 * cr - 1;
                self.left_counts[y] = cl + 1;
                let (lo, hi) = (self.pairs[k].0, self.pairs[k + 1].0);
                if lo == hi {
                    continue;
                }
                let nl = (k + 1) as f64;
                let decrease = sumsq_left as f64 / nl + sumsq_right as f64 / (n - nl) - parent;
                if decrease <= min_decrease {
                    continue;
                }
                let score = decrease * weight;
                let better = match &best {
                    None => true,
                    Some(b) => score > b.score || (score == b.score && feature < b.feature),
                };
                if better {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Candidate {
                        score,
                        decrease,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

/// Index of the largest count; ties go to the smallest index.
pub(crate) fn argmax_first<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
