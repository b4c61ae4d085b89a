//! Report tables. Every table is written twice: a CSV for people (rounded
//! numbers, percentages) and a JSON file with the raw values. The JSON
//! payloads carry no timestamps, so identical runs produce identical bytes;
//! wall-clock times live only in the timing table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::runner::ExperimentResult;

pub const SCS_FILE: &str = "scs";
pub const ERRORS_FILE: &str = "errors";
pub const TIMING_FILE: &str = "timing";
pub const SELECTIONS_FILE: &str = "selections.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Files whose bytes depend only on configuration and seed.
pub const DETERMINISTIC_FILES: [&str; 6] =
    ["scs.json", "scs.csv", "errors.json", "errors.csv", "selections.json", "manifest.json"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScsRow {
    pub method: String,
    pub c: f64,
    pub f: f64,
    pub ratio: f64,
    pub p_hat: f64,
    pub scs_set: Vec<String>,
    pub selection_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: String,
    /// `None` when no replicate produced an error value.
    pub mean_error: Option<f64>,
    pub p_value: f64,
    pub best: bool,
    pub significantly_worse: bool,
    pub errors: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: String,
    pub mean_seconds: f64,
    pub total_seconds: f64,
    pub replicate_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSelection {
    pub selected: Vec<usize>,
    pub undecided: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSelections {
    pub method: String,
    pub replicates: Vec<ReplicateSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selections {
    pub features: Vec<String>,
    pub methods: Vec<MethodSelections>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub n_objects: usize,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Everything needed to repeat a run: feed the file back to `rfsel run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub seed: u64,
    pub methods: Vec<String>,
    pub dataset: DatasetInfo,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(cfg: &RunConfig, dataset: DatasetInfo, result: &ExperimentResult) -> Self {
        // The worker count only changes wall-clock time, so it is left out
        // to keep the manifest identical across machines.
        let config = RunConfig { workers: None, ..cfg.clone() };
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: rfsel_core::VERSION.into(),
            seed: cfg.seed,
            methods: result.methods.iter().map(|m| m.name.clone()).collect(),
            dataset,
            config,
        }
    }
}

/// Report rows built from an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReports {
    pub scs: Vec<ScsRow>,
    pub errors: Vec<ErrorRow>,
    pub timing: Vec<TimingRow>,
    pub selections: Selections,
}

impl RunReports {
    pub fn from_result(result: &ExperimentResult) -> Self {
        let names = &result.feature_names;
        let scs = result
            .methods
            .iter()
            .map(|m| ScsRow {
                method: m.name.clone(),
                c: m.scs.c,
                f: m.scs.f,
                ratio: m.scs.ratio,
                p_hat: m.scs.p_hat,
                scs_set: m.scs.scs_set.iter().map(|&g| names[g].clone()).collect(),
                selection_counts: m.matrix.selection_counts(),
            })
            .collect();
        let errors = result
            .methods
            .iter()
            .zip(&result.comparison)
            .map(|(m, c)| ErrorRow {
                method: m.name.clone(),
                mean_error: c.mean_error.is_finite().then_some(c.mean_error),
                p_value: c.p_value,
                best: c.best,
                significantly_worse: c.significantly_worse,
                errors: m.errors.clone(),
            })
            .collect();
        let timing = result
            .methods
            .iter()
            .map(|m| TimingRow {
                method: m.name.clone(),
                mean_seconds: m.matrix.mean_seconds(),
                total_seconds: m.matrix.total_seconds(),
                replicate_seconds: m.matrix.replicates().iter().map(|r| r.selection.wall_clock).collect(),
            })
            .collect();
        let selections = Selections {
            features: names.clone(),
            methods: result
                .methods
                .iter()
                .map(|m| MethodSelections {
                    method: m.name.clone(),
                    replicates: m
                        .matrix
                        .replicates()
                        .iter()
                        .map(|r| ReplicateSelection {
                            selected: r.selection.selected.clone(),
                            undecided: r.selection.count(rfsel_core::Decision::Undecided),
                            iterations: r.selection.iterations_used,
                        })
                        .collect(),
                })
                .collect(),
        };
        RunReports { scs, errors, timing, selections }
    }

    pub fn empty() -> Self {
        RunReports {
            scs: Vec::new(),
            errors: Vec::new(),
            timing: Vec::new(),
            selections: Selections { features: Vec::new(), methods: Vec::new() },
        }
    }
}

/// Integer percentage as printed in summary tables, e.g. `0.5612 -> "56%"`.
pub fn percent(ratio: f64) -> String {
    format!("{:.0}%", ratio * 100.0)
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "NA".into())
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}

pub fn scs_csv(rows: &[ScsRow]) -> String {
    csv_string(
        &["method", "c", "f", "c/f"],
        rows.iter().map(|r| vec![r.method.clone(), format!("{:.1}", r.c), format!("{:.1}", r.f), percent(r.ratio)]).collect(),
    )
}

pub fn errors_csv(rows: &[ErrorRow]) -> String {
    csv_string(
        &["method", "mean_error", "p_value", "best", "significantly_worse"],
        rows.iter()
            .map(|r| {
                vec![
                    r.method.clone(),
                    fmt_opt(r.mean_error, 4),
                    format!("{:.3e}", r.p_value),
                    yes_no(r.best),
                    yes_no(r.significantly_worse),
                ]
            })
            .collect(),
    )
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    csv_string(
        &["method", "mean_seconds", "total_seconds"],
        rows.iter()
            .map(|r| vec![r.method.clone(), format!("{:.3}", r.mean_seconds), format!("{:.3}", r.total_seconds)])
            .collect(),
    )
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

/// File name and contents of every report, in a fixed order.
pub fn render(reports: &RunReports) -> Vec<(String, String)> {
    vec![
        (format!("{SCS_FILE}.csv"), scs_csv(&reports.scs)),
        (format!("{SCS_FILE}.json"), json(&reports.scs)),
        (format!("{ERRORS_FILE}.csv"), errors_csv(&reports.errors)),
        (format!("{ERRORS_FILE}.json"), json(&reports.errors)),
        (format!("{TIMING_FILE}.csv"), timing_csv(&reports.timing)),
        (format!("{TIMING_FILE}.json"), json(&reports.timing)),
        (SELECTIONS_FILE.into(), json(&reports.selections)),
    ]
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|source| CliError::Output { path: path.clone(), source })?;
    Ok(path)
}

/// Writes all reports and the manifest into `dir`, creating it if needed.
pub fn write_reports(dir: &Path, reports: &RunReports, manifest: Option<&Manifest>) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_owned(), source })?;
    let mut written = Vec::new();
    for (name, body) in render(reports) {
        written.push(write_file(dir, &name, &body)?);
    }
    if let Some(m) = manifest {
        written.push(write_file(dir, MANIFEST_FILE, &json(m))?);
    }
    Ok(written)
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T, CliError> {
    let path = dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn aligned(table: &str) -> String {
    let rows: Vec<Vec<String>> = csv::Reader::from_reader(table.as_bytes())
        .into_records()
        .flatten()
        .map(|r| r.iter().map(str::to_owned).collect())
        .collect();
    let header: Vec<String> = csv::Reader::from_reader(table.as_bytes())
        .headers()
        .map(|h| h.iter().map(str::to_owned).collect())
        .unwrap_or_default();
    let mut width: Vec<usize> = header.iter().map(String::len).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            width[i] = width[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = row.iter().enumerate().map(|(i, c)| format!("{c:<w$}", w = width[i])).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// Human-readable tables of a finished run, rebuilt from its JSON reports.
pub fn summarize(dir: &Path) -> Result<String, CliError> {
    let scs: Vec<ScsRow> = read_json(dir, &format!("{SCS_FILE}.json"))?;
    let errors: Vec<ErrorRow> = read_json(dir, &format!("{ERRORS_FILE}.json"))?;
    let timing: Vec<TimingRow> = read_json(dir, &format!("{TIMING_FILE}.json"))?;
    let mut out = String::new();
    let _ = writeln!(out, "Self-consistency\n{}", aligned(&scs_csv(&scs)));
    let _ = writeln!(out, "Post-selection error\n{}", aligned(&errors_csv(&errors)));
    let _ = write!(out, "Time per replicate\n{}", aligned(&timing_csv(&timing)));
    Ok(out)
}
