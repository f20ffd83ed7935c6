//! CSV output of a sweep.
//!
//! Columns: `kind,snr_db,trial,mae_deg,rmse_lambda,cpu_ms,offdiag_residual,failed`.
//! Per-trial rows have `kind=trial` and `failed` 0 or 1. Aggregate rows have
//! `kind=agg`, `trial=-1`, and the failure rate in `failed`. Numbers use
//! Rust's shortest round-trip formatting (`inf`, `NaN` included).

use std::path::Path;

use crate::bench::trial::{AggregateRow, TrialRecord};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "kind",
    "snr_db",
    "trial",
    "mae_deg",
    "rmse_lambda",
    "cpu_ms",
    "offdiag_residual",
    "failed",
];

/// One parsed CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub kind: String,
    pub snr_db: f64,
    pub trial: i64,
    pub mae_deg: f64,
    pub rmse_lambda: f64,
    pub cpu_ms: f64,
    pub offdiag_residual: f64,
    pub failed: f64,
}

impl From<&TrialRecord> for CsvRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            kind: "trial".into(),
            snr_db: r.snr_db,
            trial: r.trial as i64,
            mae_deg: r.mae_deg,
            rmse_lambda: r.rmse_lambda,
            cpu_ms: r.cpu_ms,
            offdiag_residual: r.offdiag_residual,
            failed: if r.failed { 1.0 } else { 0.0 },
        }
    }
}

impl From<&AggregateRow> for CsvRow {
    fn from(a: &AggregateRow) -> Self {
        Self {
            kind: "agg".into(),
            snr_db: a.snr_db,
            trial: -1,
            mae_deg: a.mae_deg,
            rmse_lambda: a.rmse_lambda,
            cpu_ms: a.cpu_ms,
            offdiag_residual: a.offdiag_residual,
            failed: a.failure_rate,
        }
    }
}

impl CsvRow {
    fn fields(&self) -> [String; 8] {
        [
            self.kind.clone(),
            self.snr_db.to_string(),
            self.trial.to_string(),
            self.mae_deg.to_string(),
            self.rmse_lambda.to_string(),
            self.cpu_ms.to_string(),
            self.offdiag_residual.to_string(),
            self.failed.to_string(),
        ]
    }
}

pub fn write_csv(records: &[TrialRecord], aggregates: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for row in records.iter().map(CsvRow::from).chain(aggregates.iter().map(CsvRow::from)) {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("line {line}: bad `{}` field", CSV_HEADER[i])))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push(CsvRow {
            kind: rec.get(0).unwrap_or_default().to_string(),
            snr_db: parse_field(&rec, 1, line)?,
            trial: parse_field(&rec, 2, line)?,
            mae_deg: parse_field(&rec, 3, line)?,
            rmse_lambda: parse_field(&rec, 4, line)?,
            cpu_ms: parse_field(&rec, 5, line)?,
            offdiag_residual: parse_field(&rec, 6, line)?,
            failed: parse_field(&rec, 7, line)?,
        });
    }
    Ok(rows)
}
