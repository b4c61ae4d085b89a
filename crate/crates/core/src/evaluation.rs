//! Bootstrap assessment of selection methods: the replicate driver,
//! self-consistency (SCS) analysis, post-selection validation error and
//! paired comparison of methods.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dataset::{bootstrap_resample, Dataset, Resample};
use crate::error::{Error, Result};
use crate::forest::{argmax_first, train_forest, ForestParams};
use crate::importance::ImportanceSource;
use crate::rng::{self, tag};
use crate::selectors::{
    run_boruta, run_rface, run_rfe, run_rrf, BorutaParams, RfAceParams, RfeParams, RrfParams,
    Selection,
};
use crate::stats::{binomial_tail, holm, wilcoxon_signed_rank, Alternative};

pub const DEFAULT_REPLICATES: usize = 30;
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Monotonic time source in seconds.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// A selection algorithm together with its importance source and parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectorConfig {
    Boruta {
        source: ImportanceSource,
        params: BorutaParams,
    },
    RfAce {
        source: ImportanceSource,
        params: RfAceParams,
    },
    Rfe {
        source: ImportanceSource,
        params: RfeParams,
    },
    Rrf(RrfParams),
    /// Baseline that selects every feature.
    AllFeatures,
}

impl SelectorConfig {
    pub fn run<R: RngCore + ?Sized>(&self, d: &Dataset, rng: &mut R) -> Result<Selection> {
        match self {
            SelectorConfig::Boruta { source, params } => run_boruta(d, source, params, rng),
            SelectorConfig::RfAce { source, params } => run_rface(d, source, params, rng),
            SelectorConfig::Rfe { source, params } => run_rfe(d, source, params, rng),
            SelectorConfig::Rrf(params) => run_rrf(d, params, rng),
            SelectorConfig::AllFeatures => {
                let all: Vec<usize> = (0..d.n_features()).collect();
                Ok(Selection::from_selected(d.n_features(), &all, 0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub name: String,
    pub selector: SelectorConfig,
}

/// Selection made on one bootstrap replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub resample: Resample,
    pub selection: Selection,
}

/// Replicate-by-feature selection record of one method on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrix {
    n_features: usize,
    replicates: Vec<Replicate>,
}

impl SelectionMatrix {
    pub fn new(n_features: usize, replicates: Vec<Replicate>) -> Result<Self> {
        if replicates.len() < 2 {
            return Err(Error::param(format!(
                "need at least 2 replicates, got {}",
                replicates.len()
            )));
        }
        for (r, rep) in replicates.iter().enumerate() {
            if rep.selection.n_features() != n_features {
                return Err(Error::param(format!(
                    "replicate {r} covers {} features, expected {n_features}",
                    rep.selection.n_features()
                )));
            }
        }
        Ok(SelectionMatrix {
            n_features,
            replicates,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_replicates(&self) -> usize {
        self.replicates.len()
    }

    pub fn replicates(&self) -> &[Replicate] {
        &self.replicates
    }

    pub fn is_selected(&self, replicate: usize, feature: usize) -> bool {
        self.replicates[replicate]
            .selection
            .selected
            .binary_search(&feature)
            .is_ok()
    }

    /// Number of replicates selecting each feature.
    pub fn selection_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features];
        for rep in &self.replicates {
            for &f in &rep.selection.selected {
                counts[f] += 1;
            }
        }
        counts
    }

    pub fn total_seconds(&self) -> f64 {
        self.replicates.iter().map(|r| r.selection.wall_clock).sum()
    }

    pub fn mean_seconds(&self) -> f64 {
        self.total_seconds() / self.replicates.len() as f64
    }
}

/// Bootstrap draw of replicate `r`; identical for every method.
pub fn replicate_resample(n: usize, master_seed: u64, r: usize) -> Result<Resample> {
    bootstrap_resample(n, &mut rng::stream(master_seed, tag::RESAMPLE, r as u64))
}

/// Runs `selector` on replicate `r` and times it with `clock`.
pub fn run_replicate(
    d: &Dataset,
    selector: &SelectorConfig,
    master_seed: u64,
    r: usize,
    clock: &dyn Clock,
) -> Result<Replicate> {
    let wrap = |e: Error| Error::Replicate {
        index: r,
        source: alloc::boxed::Box::new(e),
    };
    let resample = replicate_resample(d.n_objects(), master_seed, r).map_err(wrap)?;
    let data = d.select_rows(&resample.train).map_err(wrap)?;
    let start = clock.now();
    let mut selection = selector
        .run(
            &data,
            &mut rng::stream(master_seed, tag::SELECTOR, r as u64),
        )
        .map_err(wrap)?;
    selection.wall_clock = clock.now() - start;
    Ok(Replicate {
        resample,
        selection,
    })
}

/// Runs `selector` on `b` bootstrap replicates of `d`, one after another.
pub fn run_bootstrap_experiment(
    d: &Dataset,
    selector: &SelectorConfig,
    b: usize,
    master_seed: u64,
    clock: &dyn Clock,
) -> Result<SelectionMatrix> {
    if b < 2 {
        return Err(Error::param(format!("need at least 2 replicates, got {b}")));
    }
    let replicates = (0..b)
        .map(|r| run_replicate(d, selector, master_seed, r, clock))
        .collect::<Result<Vec<_>>>()?;
    SelectionMatrix::new(d.n_features(), replicates)
}

/// Self-consistency summary of a selection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScsReport {
    /// Features selected significantly more often than chance allows.
    pub scs_set: Vec<usize>,
    /// Mean per-replicate number of selected features that are in `scs_set`.
    pub c: f64,
    /// Mean per-replicate number of selected features.
    pub f: f64,
    /// `c / f`, or 0 when nothing was selected.
    pub ratio: f64,
    /// Estimated per-feature selection probability under the null.
    pub p_hat: f64,
}

/// Finds significantly self-consistent selections.
///
/// The null selection probability is the mean selected fraction over all
/// replicates (zero-selection replicates included). Each feature's
/// selection count is tested against Binomial(B, p_hat) upper tail and the
/// p-values are Holm-corrected at `alpha`.
pub fn scs_analysis(m: &SelectionMatrix, alpha: f64) -> Result<ScsReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha {alpha} not in (0, 1)")));
    }
    let b = m.n_replicates();
    let p = m.n_features as f64;
    let sizes: Vec<usize> = m
        .replicates
        .iter()
        .map(|r| r.selection.selected.len())
        .collect();
    let f = sizes.iter().sum::<usize>() as f64 / b as f64;
    let p_hat = sizes.iter().map(|&s| s as f64 / p).sum::<f64>() / b as f64;
    if p_hat == 0.0 {
        return Ok(ScsReport {
            scs_set: Vec::new(),
            c: 0.0,
            f: 0.0,
            ratio: 0.0,
            p_hat,
        });
    }
    let counts = m.selection_counts();
    let pvalues = counts
        .iter()
        .map(|&s| binomial_tail(s as u64, b as u64, p_hat.min(1.0)))
        .collect::<Result<Vec<_>>>()?;
    let reject = holm(&pvalues, alpha);
    let scs_set: Vec<usize> = (0..m.n_features).filter(|&g| reject[g]).collect();
    let c = m
        .replicates
        .iter()
        .map(|r| {
            r.selection
                .selected
                .iter()
                .filter(|g| scs_set.binary_search(g).is_ok())
                .count()
        })
        .sum::<usize>() as f64
        / b as f64;
    let ratio = if f > 0.0 { c / f } else { 0.0 };
    Ok(ScsReport {
        scs_set,
        c,
        f,
        ratio,
        p_hat,
    })
}

/// Post-selection error of one replicate: a validation forest trained on
/// the replicate's bootstrap rows and selected features, scored on the
/// replicate's OOB rows. With no selected features the majority class of
/// the training rows is predicted. `None` when the OOB set is empty.
pub fn replicate_error(
    d: &Dataset,
    resample: &Resample,
    selected: &[usize],
    validation: &ForestParams,
    master_seed: u64,
    r: usize,
) -> Result<Option<f64>> {
    if resample.oob.is_empty() {
        log::warn!("replicate {r}: empty OOB set, error not computed");
        return Ok(None);
    }
    let labels = d.labels();
    let wrong = if selected.is_empty() {
        log::warn!("replicate {r}: no features selected, scoring the majority-class model");
        let mut counts = vec![0usize; d.n_classes()];
        for &i in &resample.train {
            counts[labels[i]] += 1;
        }
        let majority = argmax_first(&counts);
        resample
            .oob
            .iter()
            .filter(|&&i| labels[i] != majority)
            .count()
    } else {
        let reduced = d.select_features(selected)?;
        let train = reduced.select_rows(&resample.train)?;
        let model = train_forest(
            &train,
            validation,
            &mut rng::stream(master_seed, tag::VALIDATION, r as u64),
        )?;
        resample
            .oob
            .iter()
            .map(|&i| model.predict_row(&reduced.row(i)).map(|c| c != labels[i]))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&w| w)
            .count()
    };
    Ok(Some(wrong as f64 / resample.oob.len() as f64))
}

/// Post-selection errors for every replicate of `m`.
pub fn post_selection_errors(
    d: &Dataset,
    m: &SelectionMatrix,
    validation: &ForestParams,
    master_seed: u64,
) -> Result<Vec<Option<f64>>> {
    m.replicates
        .iter()
        .enumerate()
        .map(|(r, rep)| {
            replicate_error(
                d,
                &rep.resample,
                &rep.selection.selected,
                validation,
                master_seed,
                r,
            )
        })
        .collect()
}

/// Per-replicate post-selection errors of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub method: String,
    pub errors: Vec<Option<f64>>,
}

impl ErrorReport {
    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.errors.iter().flatten().copied()
    }

    pub fn mean(&self) -> f64 {
        let n = self.present().count();
        if n == 0 {
            return f64::NAN;
        }
        self.present().sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub method: String,
    pub mean_error: f64,
    /// One-sided signed-rank p-value for "worse than the best method";
    /// 1 for the best method itself.
    pub p_value: f64,
    /// Member of the group with the minimal mean error.
    pub best: bool,
    /// Significantly worse than the best method after Holm correction.
    pub significantly_worse: bool,
}

/// Compares every method's paired errors with those of the best (lowest
/// mean error) method using a one-sided Wilcoxon signed-rank test, Holm
/// corrected across the compared methods at `alpha`.
pub fn compare_methods(reports: &[ErrorReport], alpha: f64) -> Result<Vec<Comparison>> {
    if reports.is_empty() {
        return Ok(Vec::new());
    }
    let pattern: Vec<bool> = reports[0].errors.iter().map(Option::is_some).collect();
    for rep in reports {
        let other: Vec<bool> = rep.errors.iter().map(Option::is_some).collect();
        if other != pattern {
            return Err(Error::Unpaired(format!(
                "`{}` and `{}` were not evaluated on the same replicates",
                reports[0].method, rep.method
            )));
        }
    }
    if !pattern.iter().any(|&p| p) {
        return Err(Error::Unpaired("no replicate has an error value".into()));
    }
    let means: Vec<f64> = reports.iter().map(ErrorReport::mean).collect();
    let best = argmin_first(&means);
    let best_errors: Vec<f64> = reports[best].present().collect();

    let mut pvalues = vec![1.0; reports.len()];
    let mut tested = Vec::new();
    for (i, rep) in reports.iter().enumerate() {
        if means[i] == means[best] {
            continue;
        }
        let errs: Vec<f64> = rep.present().collect();
        pvalues[i] = wilcoxon_signed_rank(&errs, &best_errors, Alternative::Greater)?.p_value;
        tested.push(i);
    }
    let tested_p: Vec<f64> = tested.iter().map(|&i| pvalues[i]).collect();
    let reject = holm(&tested_p, alpha);
    let mut worse = vec![false; reports.len()];
    for (k, &i) in tested.iter().enumerate() {
        worse[i] = reject[k];
    }
    Ok(reports
        .iter()
        .enumerate()
        .map(|(i, rep)| Comparison {
            method: rep.method.clone(),
            mean_error: means[i],
            p_value: pvalues[i],
            best: means[i] == means[best],
            significantly_worse: worse[i],
        })
        .collect())
}

fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}
