use alloc::format;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::Selection;
use crate::dataset::{bootstrap_resample, Dataset, Resample};
use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestParams};
use crate::importance::ImportanceSource;
use crate::rng::{self, tag};

/// Smallest subset size evaluated by recursive feature elimination.
pub const RFE_MIN_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfeParams {
    /// Forest used to assess each candidate subset.
    pub assess: ForestParams,
    /// Bootstrap rounds per assessment.
    pub assess_boots: usize,
}

impl Default for RfeParams {
    fn default() -> Self {
        RfeParams {
            assess: ForestParams::with_trees(500),
            assess_boots: 10,
        }
    }
}

/// Subset sizes visited for `p` features: `p`, then repeatedly the largest
/// power of two strictly below the current size, ending at 4.
pub fn rfe_schedule(p: usize) -> Result<Vec<usize>> {
    if p < RFE_MIN_FEATURES {
        return Err(Error::param(format!(
            "RFE needs at least {RFE_MIN_FEATURES} features, got {p}"
        )));
    }
    let mut sizes = alloc::vec![p];
    let mut cur = p;
    while cur > RFE_MIN_FEATURES {
        cur = 1 << (usize::BITS - 1 - (cur - 1).leading_zeros());
        sizes.push(cur);
    }
    Ok(sizes)
}

/// Mean bootstrap-validation error of a forest on `d` over `resamples`.
fn assess(d: &Dataset, resamples: &[Resample], params: &RfeParams, seed: u64) -> Result<f64> {
    let (mut total, mut used) = (0.0, 0usize);
    for (b, resample) in resamples.iter().enumerate() {
        if resample.oob.is_empty() {
            continue;
        }
        let model = train_forest(
            &d.select_rows(&resample.train)?,
            &params.assess,
            &mut rng::stream(seed, tag::ASSESS, b as u64),
        )?;
        let wrong = resample
            .oob
            .iter()
            .filter(|&&i| {
                model
                    .predict_row(&d.row(i))
                    .map(|c| c != d.labels()[i])
                    .unwrap_or(true)
            })
            .count();
        total += wrong as f64 / resample.oob.len() as f64;
        used += 1;
    }
    Ok(if used == 0 { 1.0 } else { total / used as f64 })
}

/// Recursive feature elimination with power-of-two shrinking.
///
/// Every round assesses the current subset, then re-ranks it with `src` and
/// keeps the best-ranked features for the next size of [`rfe_schedule`].
/// Every round is assessed on the same bootstrap resamples. The subset with
/// the lowest assessed error wins; ties go to the later, smaller subset.
pub fn run_rfe<R: RngCore + ?Sized>(
    d: &Dataset,
    src: &ImportanceSource,
    params: &RfeParams,
    rng: &mut R,
) -> Result<Selection> {
    run_rfe_traced(d, src, params, rng).map(|(s, _)| s)
}

/// Like [`run_rfe`], also returning `(size, error)` for each round.
pub fn run_rfe_traced<R: RngCore + ?Sized>(
    d: &Dataset,
    src: &ImportanceSource,
    params: &RfeParams,
    rng: &mut R,
) -> Result<(Selection, Vec<(usize, f64)>)> {
    let schedule = rfe_schedule(d.n_features())?;
    if params.assess_boots == 0 {
        return Err(Error::param("assess_boots must be positive"));
    }
    let seed = rng.next_u64();
    let resamples = (0..params.assess_boots)
        .map(|b| {
            bootstrap_resample(
                d.n_objects(),
                &mut rng::stream(seed, tag::RESAMPLE, b as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut current: Vec<usize> = (0..d.n_features()).collect();
    let mut rounds = Vec::with_capacity(schedule.len());
    let mut best: Option<(f64, Vec<usize>)> = None;
    for (round, &size) in schedule.iter().enumerate() {
        if round > 0 {
            let sub = d.select_features(&current)?;
            let imp = sub_importance(&sub, src, seed, round)?;
            let mut keep: Vec<usize> = imp.into_iter().take(size).map(|k| current[k]).collect();
            keep.sort_unstable();
            current = keep;
        }
        let sub = d.select_features(&current)?;
        let err = assess(
            &sub,
            &resamples,
            params,
            rng::derive(seed, tag::VALIDATION, round as u64),
        )?;
        rounds.push((current.len(), err));
        if best.as_ref().is_none_or(|(b, _)| err <= *b) {
            best = Some((err, current.clone()));
        }
    }
    let (_, features) = best.expect("schedule is never empty");
    Ok((
        Selection::from_selected(d.n_features(), &features, schedule.len()),
        rounds,
    ))
}

fn sub_importance(
    sub: &Dataset,
    src: &ImportanceSource,
    seed: u64,
    round: usize,
) -> Result<Vec<usize>> {
    Ok(src
        .compute(sub, &mut rng::stream(seed, tag::IMPORTANCE, round as u64))?
        .ranking())
}
