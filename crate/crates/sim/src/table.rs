//! CSV output and the matching reader.
//!
//! Every result file starts with optional context columns (such as `d` or
//! `alpha`), followed by [`POINT_COLUMNS`]. Floats are written in Rust's
//! shortest round-trip form, so parsing a file gives back the exact values.

use std::collections::HashMap;
use std::path::Path;

use nbrecon::protocol::Efficiency;

use crate::engine::{PointResult, Threshold, ThresholdStatus};
use crate::SimError;

/// Columns describing one simulated point, in file order.
pub const POINT_COLUMNS: [&str; 13] = [
    "snr_db",
    "rho",
    "fer",
    "ci_lo",
    "ci_hi",
    "beta",
    "frames",
    "iters_mean",
    "errors",
    "undetected",
    "beta_q",
    "beta_code",
    "beta_approx",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Table with `context` columns followed by the point columns.
    pub fn for_points(context: &[&str]) -> Self {
        Self::new(context.iter().chain(POINT_COLUMNS.iter()).copied())
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn push_point(&mut self, context: Vec<String>, p: &PointResult) {
        let mut row = context;
        row.extend(point_fields(p));
        self.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Rows as `column -> value` maps.
    pub fn records(&self) -> impl Iterator<Item = HashMap<&str, &str>> + '_ {
        self.rows.iter().map(|r| self.header.iter().map(String::as_str).zip(r.iter().map(String::as_str)).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, SimError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| SimError::Csv(e.to_string()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self, SimError> {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers()?.iter().map(String::from).collect();
        let rows =
            r.records().map(|rec| rec.map(|rec| rec.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<(), SimError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        }
        std::fs::write(path, self.to_csv()?).map_err(|e| SimError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, SimError> {
        let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
        Self::from_csv(&bytes).map_err(|e| SimError::Csv(format!("{}: {e}", path.display())))
    }

    /// Parses the point columns of every row.
    pub fn points(&self) -> Result<Vec<PointResult>, SimError> {
        self.records().map(|r| parse_point(&r)).collect()
    }
}

pub fn point_fields(p: &PointResult) -> Vec<String> {
    vec![
        p.snr_db.to_string(),
        p.rho.to_string(),
        p.fer.to_string(),
        p.ci_lo.to_string(),
        p.ci_hi.to_string(),
        p.efficiency.beta.to_string(),
        p.frames.to_string(),
        p.iters_mean.to_string(),
        p.errors.to_string(),
        p.undetected.to_string(),
        p.efficiency.beta_q.to_string(),
        p.efficiency.beta_code.to_string(),
        p.efficiency.beta_approx.to_string(),
    ]
}

fn field<T: std::str::FromStr>(r: &HashMap<&str, &str>, key: &str) -> Result<T, SimError> {
    let v = r.get(key).ok_or_else(|| SimError::Csv(format!("missing column {key}")))?;
    v.parse().map_err(|_| SimError::Csv(format!("column {key}: cannot parse {v:?}")))
}

pub fn parse_point(r: &HashMap<&str, &str>) -> Result<PointResult, SimError> {
    Ok(PointResult {
        snr_db: field(r, "snr_db")?,
        rho: field(r, "rho")?,
        frames: field(r, "frames")?,
        errors: field(r, "errors")?,
        undetected: field(r, "undetected")?,
        fer: field(r, "fer")?,
        ci_lo: field(r, "ci_lo")?,
        ci_hi: field(r, "ci_hi")?,
        iters_mean: field(r, "iters_mean")?,
        efficiency: Efficiency {
            beta: field(r, "beta")?,
            beta_q: field(r, "beta_q")?,
            beta_code: field(r, "beta_code")?,
            beta_approx: field(r, "beta_approx")?,
        },
    })
}

/// Threshold rows: `context..., status, point columns`.
pub fn threshold_table(context: &[&str]) -> Table {
    let mut cols: Vec<&str> = context.to_vec();
    cols.push("status");
    Table::for_points(&cols)
}

pub fn push_threshold(table: &mut Table, mut context: Vec<String>, t: &Threshold) {
    context.push(t.status.as_str().to_string());
    table.push_point(context, &t.point);
}

pub fn parse_status(r: &HashMap<&str, &str>) -> Result<ThresholdStatus, SimError> {
    let v = r.get("status").ok_or_else(|| SimError::Csv("missing column status".into()))?;
    ThresholdStatus::parse(v).ok_or_else(|| SimError::Csv(format!("unknown status {v:?}")))
}
