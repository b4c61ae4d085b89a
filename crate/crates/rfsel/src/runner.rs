//! Parallel execution of a configured experiment. Each (method, replicate)
//! pair is one task on a fixed-size worker pool; results are assembled by
//! index, so the outcome does not depend on scheduling.

use std::time::Instant;

use rayon::prelude::*;
use rfsel_core::evaluation::{
    replicate_error, run_replicate, Clock, Comparison, ErrorReport, MethodConfig, Replicate, ScsReport,
    SelectionMatrix,
};
use rfsel_core::{compare_methods, generate_synthetic, scs_analysis, Dataset, Error, GroundTruth};

use crate::config::{DatasetSource, RunConfig};
use crate::data::read_csv;
use crate::error::CliError;

/// Wall-clock source for replicate timing.
#[derive(Debug, Clone, Copy)]
pub struct InstantClock(Instant);

impl Default for InstantClock {
    fn default() -> Self {
        InstantClock(Instant::now())
    }
}

impl Clock for InstantClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub name: String,
    pub matrix: SelectionMatrix,
    pub errors: Vec<Option<f64>>,
    pub scs: ScsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub feature_names: Vec<String>,
    pub methods: Vec<MethodResult>,
    /// One row per method, in method order.
    pub comparison: Vec<Comparison>,
}

/// Loads the configured dataset; synthetic sources also return their truth.
pub fn load_dataset(source: &DatasetSource) -> Result<(Dataset, Option<GroundTruth>), CliError> {
    match source {
        DatasetSource::Csv { .. } => {
            let (path, opts) = source.csv_options()?.expect("csv source");
            Ok((read_csv(&path, &opts)?, None))
        }
        DatasetSource::Synthetic(spec) => {
            let (d, truth) = generate_synthetic(&spec.to_spec()).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((d, Some(truth)))
        }
    }
}

/// Worker count: explicit value, else the `RFSEL_WORKERS` variable, else
/// the available parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var("RFSEL_WORKERS").ok().and_then(|v| v.parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn replicate_failure(method: &str, e: Error) -> CliError {
    match e {
        Error::Replicate { index, source } if matches!(*source, Error::InvalidParam(_)) => {
            CliError::Config(format!("method `{method}`, replicate {index}: {source}"))
        }
        other => CliError::Internal(format!("method `{method}`: {other}")),
    }
}

/// Runs every configured method on every replicate of `d` with `workers`
/// threads, then computes SCS reports, post-selection errors and the
/// method comparison.
pub fn run_experiment(d: &Dataset, cfg: &RunConfig, workers: usize) -> Result<ExperimentResult, CliError> {
    let methods = cfg.validate()?;
    run_methods(d, cfg, &methods, workers)
}

pub fn run_methods(
    d: &Dataset,
    cfg: &RunConfig,
    methods: &[MethodConfig],
    workers: usize,
) -> Result<ExperimentResult, CliError> {
    let validation = cfg.validation.to_params()?;
    let b = cfg.replicates;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let clock = InstantClock::default();
    let tasks: Vec<(usize, usize)> = (0..methods.len()).flat_map(|m| (0..b).map(move |r| (m, r))).collect();
    log::info!("running {} methods x {b} replicates on {workers} workers", methods.len());

    let outcomes: Vec<(Replicate, Option<f64>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(m, r)| {
                let method = &methods[m];
                let rep = run_replicate(d, &method.selector, cfg.seed, r, &clock)
                    .map_err(|e| replicate_failure(&method.name, e))?;
                let err = replicate_error(d, &rep.resample, &rep.selection.selected, &validation, cfg.seed, r)
                    .map_err(|e| replicate_failure(&method.name, Error::Replicate { index: r, source: Box::new(e) }))?;
                log::info!(
                    "{} replicate {r}: {} selected in {:.2}s",
                    method.name,
                    rep.selection.selected.len(),
                    rep.selection.wall_clock
                );
                Ok((rep, err))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    let mut outcomes = outcomes.into_iter();
    let mut results = Vec::with_capacity(methods.len());
    for method in methods {
        let (reps, errors): (Vec<Replicate>, Vec<Option<f64>>) = outcomes.by_ref().take(b).unzip();
        let matrix = SelectionMatrix::new(d.n_features(), reps)?;
        let scs = scs_analysis(&matrix, cfg.scs_alpha)?;
        results.push(MethodResult { name: method.name.clone(), matrix, errors, scs });
    }
    let comparison = if !results.is_empty() {
        let reports: Vec<ErrorReport> =
            results.iter().map(|r| ErrorReport { method: r.name.clone(), errors: r.errors.clone() }).collect();
        compare_methods(&reports, cfg.comparison_alpha)?
    } else {
        Vec::new()
    };
    Ok(ExperimentResult { feature_names: d.feature_names().to_vec(), methods: results, comparison })
}
