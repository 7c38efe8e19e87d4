//! CSV ingestion and the log / difference / standardise pipeline.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statvar::Trajectory;

use crate::config::DataSection;
use crate::error::{CliError, CliResult};

/// A numeric table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(bytes: &[u8], path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::bad_csv(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if columns.is_empty() || columns.iter().any(String::is_empty) {
            return Err(CliError::bad_csv(path, "missing or empty header"));
        }
        if columns.iter().any(|c| c.parse::<f64>().is_ok()) {
            return Err(CliError::bad_csv(path, "the first row must be a header of column names"));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::bad_csv(path, e.to_string()))?;
            let row = record
                .iter()
                .enumerate()
                .map(|(j, s)| match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(CliError::bad_csv(
                        path,
                        format!("line {}, column {:?}: {s:?} is not a finite number", i + 2, columns[j]),
                    )),
                })
                .collect::<CliResult<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::bad_csv(path, "no data rows"));
        }
        Ok(Self { columns, rows })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&bytes, path)
    }

    pub fn trajectory(&self) -> CliResult<Trajectory> {
        Ok(Trajectory::from_rows(&self.rows)?)
    }
}

/// Writes `y` with header `y1..ym`.
pub fn write_trajectory<W: Write>(y: &Trajectory, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=y.dim()).map(|j| format!("y{j}")))?;
    for row in y.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()
}

/// What was done to the raw series, enough to undo it.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct PreprocessMeta {
    pub columns: Vec<String>,
    pub log: Vec<bool>,
    pub difference: usize,
    /// `heads[k]` is the first row of the `k`-times differenced series.
    pub heads: Vec<Vec<f64>>,
    /// Identity when not standardising.
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

fn diff(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect())
        .collect()
}

pub fn preprocess(table: &Table, cfg: &DataSection) -> CliResult<(Trajectory, PreprocessMeta)> {
    let m = table.columns.len();
    let mut log = vec![false; m];
    for name in &cfg.log {
        let j = table
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::ConfigInvalid(format!("data.log: no column named {name:?}")))?;
        log[j] = true;
    }
    let mut rows = table.rows.clone();
    for (t, row) in rows.iter_mut().enumerate() {
        for j in (0..m).filter(|&j| log[j]) {
            if row[j] <= 0.0 {
                return Err(CliError::Usage(format!(
                    "cannot log column {:?}: row {} is {}",
                    table.columns[j],
                    t + 1,
                    row[j]
                )));
            }
            row[j] = row[j].ln();
        }
    }
    let mut heads = Vec::with_capacity(cfg.difference);
    for _ in 0..cfg.difference {
        if rows.len() < 2 {
            return Err(CliError::Usage("too few rows to difference".into()));
        }
        heads.push(rows[0].clone());
        rows = diff(&rows);
    }
    let n = rows.len() as f64;
    let (mut mean, mut sd) = (vec![0.0; m], vec![1.0; m]);
    if cfg.standardise {
        if rows.len() < 2 {
            return Err(CliError::Usage("too few rows to standardise".into()));
        }
        for j in 0..m {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let ss: f64 = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum();
            sd[j] = (ss / (n - 1.0)).sqrt();
            if !(sd[j] > 0.0) {
                return Err(CliError::Usage(format!("column {:?} is constant", table.columns[j])));
            }
        }
        for r in &mut rows {
            for j in 0..m {
                r[j] = (r[j] - mean[j]) / sd[j];
            }
        }
    }
    let meta = PreprocessMeta {
        columns: table.columns.clone(),
        log,
        difference: cfg.difference,
        heads,
        mean,
        sd,
    };
    Ok((Trajectory::from_rows(&rows)?, meta))
}

impl PreprocessMeta {
    /// Maps a transformed series back to the original scale; the result has
    /// `difference` more rows than `z`.
    pub fn invert(&self, z: &Trajectory) -> CliResult<Vec<Vec<f64>>> {
        let m = self.columns.len();
        if z.dim() != m {
            return Err(statvar::Error::DimensionMismatch(format!("{} series, expected {m}", z.dim())).into());
        }
        let mut rows: Vec<Vec<f64>> = z
            .rows()
            .map(|r| (0..m).map(|j| r[j] * self.sd[j] + self.mean[j]).collect())
            .collect();
        for head in self.heads.iter().rev() {
            let mut level = Vec::with_capacity(rows.len() + 1);
            level.push(head.clone());
            for d in &rows {
                let prev: &Vec<f64> = level.last().expect("non-empty");
                level.push(prev.iter().zip(d).map(|(a, b)| a + b).collect());
            }
            rows = level;
        }
        for row in &mut rows {
            for j in (0..m).filter(|&j| self.log[j]) {
                row[j] = row[j].exp();
            }
        }
        Ok(rows)
    }
}
