//! CSV ingestion and export. Rows are objects; one column holds the class
//! label, every other column is a numeric feature.

use std::fs::File;
use std::path::Path;

use rfsel_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Label column, by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("class".into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub label: LabelColumn,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { label: LabelColumn::default(), delimiter: b',' }
    }
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

/// Reads a headed CSV file into a [`Dataset`]. Class identifiers are the
/// label cells verbatim, sorted.
pub fn read_csv(path: &Path, opts: &CsvOptions) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_path(path)
        .map_err(|e| data_err(path, e))?;
    let header: Vec<String> = reader.headers().map_err(|e| data_err(path, e))?.iter().map(str::to_owned).collect();
    let label_at = match &opts.label {
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(data_err(path, format!("label column {i} out of range"))),
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(path, format!("no label column named `{name}`")))?,
    };
    let names: Vec<String> = header.iter().enumerate().filter(|(i, _)| *i != label_at).map(|(_, h)| h.clone()).collect();
    if names.is_empty() {
        return Err(data_err(path, "no feature columns"));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(path, e))?;
        // Data rows are numbered from 1, as in a spreadsheet below the header.
        let line = row + 1;
        let mut f = 0;
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if col == label_at {
                if cell.is_empty() {
                    return Err(data_err(path, format!("row {line}: missing label")));
                }
                labels.push(cell.to_owned());
                continue;
            }
            if cell.is_empty() {
                return Err(data_err(path, format!("row {line}, column `{}`: missing value", names[f])));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| data_err(path, format!("row {line}, column `{}`: cannot parse `{cell}`", names[f])))?;
            if !v.is_finite() {
                return Err(data_err(path, format!("row {line}, column `{}`: non-finite value `{cell}`", names[f])));
            }
            columns[f].push(v);
            f += 1;
        }
    }
    let distinct: std::collections::BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    if distinct.len() < 2 {
        return Err(data_err(path, "label column has fewer than two classes"));
    }
    Dataset::from_labels(columns, &labels, names).map_err(|e| data_err(path, e))
}

/// Writes `d` as CSV with the label in the last column, named `label`.
pub fn write_csv(d: &Dataset, path: &Path, label: &str) -> Result<(), CliError> {
    let out = |source| CliError::Output { path: path.to_owned(), source };
    let file = File::create(path).map_err(out)?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    header.push(label);
    let io = |e: csv::Error| out(std::io::Error::other(e));
    w.write_record(&header).map_err(io)?;
    for i in 0..d.n_objects() {
        let mut record: Vec<String> = d.row(i).iter().map(|v| format!("{v:?}")).collect();
        record.push(d.classes()[d.labels()[i]].clone());
        w.write_record(&record).map_err(io)?;
    }
    w.flush().map_err(out)?;
    Ok(())
}
