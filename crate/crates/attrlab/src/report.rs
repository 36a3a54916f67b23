//! Metric reports: `{"metric","config","per_example","aggregate"}` as JSON,
//! plus flat CSV tables.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AppError, Result};
use crate::fsutil::{read_to_string, to_json_pretty, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub config: Value,
    pub per_example: Vec<Value>,
    pub aggregate: Value,
}

impl MetricReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, &to_json_pretty(self)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_to_string(path)?).map_err(|e| AppError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// A header plus rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| AppError::config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| AppError::config(format!("csv: {e}")))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

/// Fixed-precision formatting for CSV cells.
pub fn cell(x: f64) -> String {
    format!("{x:.6}")
}

/// One CSV row per report: metric name plus every scalar in `aggregate`,
/// keyed by the union of aggregate keys in first-seen order.
pub fn aggregate_table(reports: &[MetricReport]) -> Table {
    let mut keys: Vec<String> = Vec::new();
    for r in reports {
        if let Value::Object(m) = &r.aggregate {
            for (k, v) in m {
                if !(v.is_object() || v.is_array()) && !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
    }
    let mut table = Table::new(std::iter::once("metric".to_string()).chain(keys.iter().cloned()));
    for r in reports {
        let mut row = vec![r.metric.clone()];
        for k in &keys {
            row.push(match r.aggregate.get(k) {
                Some(Value::Number(n)) if n.is_f64() => n.as_f64().map(cell).unwrap_or_default(),
                Some(Value::Number(n)) => n.to_string(),
                Some(Value::String(s)) => s.clone(),
                Some(Value::Bool(b)) => b.to_string(),
                _ => String::new(),
            });
        }
        table.push(row);
    }
    table
}
