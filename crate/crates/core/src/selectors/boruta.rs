use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::{Decision, Selection};
use crate::dataset::{augment_with_shadows, Dataset};
use crate::error::{Error, Result};
use crate::importance::ImportanceSource;
use crate::rng::{self, tag};
use crate::stats::{binomial_tail, bonferroni, holm};

/// Multiple-testing correction applied across the undecided features in
/// each Boruta round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correction {
    #[default]
    Holm,
    Bonferroni,
    None,
}

impl Correction {
    fn apply(self, pvalues: &[f64], alpha: f64) -> Vec<bool> {
        match self {
            Correction::Holm => holm(pvalues, alpha),
            Correction::Bonferroni => bonferroni(pvalues, alpha),
            Correction::None => pvalues.iter().map(|&p| p <= alpha).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorutaParams {
    pub alpha: f64,
    pub max_iter: usize,
    pub correction: Correction,
}

impl Default for BorutaParams {
    fn default() -> Self {
        BorutaParams {
            alpha: 0.01,
            max_iter: 100,
            correction: Correction::Holm,
        }
    }
}

/// Per-round record of a Boruta run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BorutaTrace {
    /// Undecided features at the end of each round.
    pub undecided: Vec<usize>,
    /// Final hit count per feature.
    pub hits: Vec<usize>,
}

/// Smallest hit count out of `n` rounds that is significant at `alpha / m`
/// against Binomial(n, 1/2), if any.
pub fn boruta_threshold(n: u64, m: usize, alpha: f64) -> Option<u64> {
    (0..=n).find(|&k| {
        binomial_tail(k, n, 0.5)
            .map(|p| p <= alpha / m as f64)
            .unwrap_or(false)
    })
}

/// All-relevant selection by repeated comparison against the best shadow.
///
/// Each round re-creates the shadows of the features still in the system,
/// scores everything with `src` and gives a hit to each undecided feature
/// scoring strictly above the best shadow. Hit counts are then tested
/// against Binomial(rounds, 1/2) in both directions: significantly many
/// hits confirm a feature, significantly few reject it and drop it (and
/// its shadow) from later rounds.
pub fn run_boruta<R: RngCore + ?Sized>(
    d: &Dataset,
    src: &ImportanceSource,
    params: &BorutaParams,
    rng: &mut R,
) -> Result<Selection> {
    run_boruta_traced(d, src, params, rng).map(|(s, _)| s)
}

pub fn run_boruta_traced<R: RngCore + ?Sized>(
    d: &Dataset,
    src: &ImportanceSource,
    params: &BorutaParams,
    rng: &mut R,
) -> Result<(Selection, BorutaTrace)> {
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(Error::param(format!(
            "alpha {} not in (0, 1)",
            params.alpha
        )));
    }
    if params.max_iter == 0 {
        return Err(Error::param("max_iter must be positive"));
    }
    let p = d.n_features();
    let seed = rng.next_u64();
    let mut status = vec![Decision::Undecided; p];
    let mut hits = vec![0usize; p];
    let mut trace = BorutaTrace::default();
    let mut rounds = 0;

    while rounds < params.max_iter && status.contains(&Decision::Undecided) {
        rounds += 1;
        let system: Vec<usize> = (0..p)
            .filter(|&f| status[f] != Decision::Rejected)
            .collect();
        let sub = d.select_features(&system)?;
        let shadowed =
            augment_with_shadows(&sub, &mut rng::stream(seed, tag::SHADOW, rounds as u64));
        let imp = src.compute(
            &shadowed.combined(),
            &mut rng::stream(seed, tag::IMPORTANCE, rounds as u64),
        )?;
        let scores = imp.scores();
        let best_shadow = scores[system.len()..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        for (k, &f) in system.iter().enumerate() {
            if status[f] == Decision::Undecided && scores[k] > best_shadow {
                hits[f] += 1;
            }
        }

        let undecided: Vec<usize> = (0..p)
            .filter(|&f| status[f] == Decision::Undecided)
            .collect();
        let n = rounds as u64;
        let mut p_high = Vec::with_capacity(undecided.len());
        let mut p_low = Vec::with_capacity(undecided.len());
        for &f in &undecided {
            let k = hits[f] as u64;
            p_high.push(binomial_tail(k, n, 0.5)?);
            p_low.push(binomial_tail(n - k, n, 0.5)?);
        }
        let confirm = params.correction.apply(&p_high, params.alpha);
        let reject = params.correction.apply(&p_low, params.alpha);
        for (i, &f) in undecided.iter().enumerate() {
            if confirm[i] {
                status[f] = Decision::Confirmed;
            } else if reject[i] {
                status[f] = Decision::Rejected;
            }
        }
        trace
            .undecided
            .push(status.iter().filter(|s| **s == Decision::Undecided).count());
        log::debug!(
            "boruta round {rounds}: {} undecided",
            trace.undecided[rounds - 1]
        );
    }
    trace.hits = hits;
    Ok((Selection::from_status(status, rounds), trace))
}
