//! CSV and JSON emission with fixed formatting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::SweepResult;
use crate::error::{Error, Result};

/// Columns following the axis columns.
pub const VALUE_COLUMNS: [&str; 8] = [
    "phase",
    "n_b_analytic",
    "n_b_numeric",
    "n_a_numeric",
    "energy",
    "gap01",
    "converged",
    "error",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Seventeen significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Writes rows of already formatted cells.
pub fn write_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
}

pub fn to_csv(result: &SweepResult) -> Result<String> {
    let mut header: Vec<&str> = result.spec.axes.iter().map(|a| a.name.as_str()).collect();
    header.extend(VALUE_COLUMNS);
    let rows = result.records.iter().map(|r| {
        let o = &r.outcome;
        let mut row: Vec<String> = r.coords.iter().map(|&c| format_float(c)).collect();
        row.push(o.phase.map(|p| p.as_str().to_string()).unwrap_or_default());
        row.push(opt(o.n_b_analytic));
        row.push(opt(o.n_b_numeric));
        row.push(opt(o.n_a_numeric));
        row.push(opt(o.energy));
        row.push(opt(o.gap01));
        row.push(o.converged.map(|c| c.to_string()).unwrap_or_default());
        row.push(o.error.clone().unwrap_or_default());
        row
    });
    write_table(&header, rows)
}

pub fn to_json(result: &SweepResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result)?;
    s.push('\n');
    Ok(s)
}

pub fn render(result: &SweepResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(result),
        Format::Json => to_json(result),
    }
}

pub fn write(result: &SweepResult, format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render(result, format)?)?;
    Ok(())
}
