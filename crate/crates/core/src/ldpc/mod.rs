//! Sparse parity-check matrices over GF(2^q).
//!
//! A code is built in two steps: [`peg_construct`] grows a binary Tanner
//! graph edge by edge, then [`assign_labels`] replaces each nonzero entry
//! by a uniformly drawn nonzero field element.

mod degree;
mod io;
mod peg;

pub use degree::{named_profile, node_degrees_from_lambda, DegreeDistribution, NAMED_PROFILES};
pub use io::{read_code, write_code, ParseError};
pub use peg::{peg_construct, PegConfig, Skeleton};

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf::{FieldError, GaloisField, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid dimensions n={n}, m={m}: need 1 <= m < n")]
    Dimensions { n: usize, m: usize },
    #[error("row {row}: column {col} out of range for n={n}")]
    ColumnOutOfRange { row: usize, col: usize, n: usize },
    #[error("row {row}, column {col}: label {label} is not a nonzero element of GF(2^{q})")]
    Label { row: usize, col: usize, label: u32, q: u32 },
    #[error("duplicate entry at row {row}, column {col}")]
    Duplicate { row: usize, col: usize },
    #[error("matrix does not match its declared profile: {0}")]
    ProfileMismatch(String),
    #[error("degree distribution is invalid: {0}")]
    Distribution(String),
    #[error("profile cannot be realized: {0}")]
    Unrealizable(String),
}

/// Degree structure a code was built for.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Every variable node has degree `dv`; check degrees are as even as
    /// the edge count allows.
    Regular { dv: usize },
    /// Variable node degrees follow an edge-perspective distribution.
    Irregular(DegreeDistribution),
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Regular { dv } => write!(f, "regular({dv})"),
            Profile::Irregular(dist) => write!(f, "irregular({dist})"),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = CodeError;

    /// Accepts `regular(2)`, `irregular(2:0.5,3:0.5)` or a built-in profile
    /// name such as `gf32-r09`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let inner =
            |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
        if let Some(dv) = inner("regular") {
            let dv = dv.trim().parse().map_err(|_| CodeError::Distribution(format!("bad variable degree {dv:?}")))?;
            return Ok(Profile::Regular { dv });
        }
        if let Some(body) = inner("irregular") {
            return Ok(Profile::Irregular(body.parse()?));
        }
        if let Some((_, dist, _)) = named_profile(s) {
            return Ok(Profile::Irregular(dist));
        }
        Err(CodeError::Distribution(format!("unknown profile {s:?}")))
    }
}

/// Seeds a code was derived from, kept so a code file records how to
/// rebuild it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Lineage {
    pub peg_seed: Option<u64>,
    pub label_seed: Option<u64>,
}

/// An `m × n` parity-check matrix with nonzero labels in GF(2^q).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseParityCheck {
    field: GaloisField,
    n: usize,
    m: usize,
    /// Per row, `(column, label)` sorted by column.
    rows: Vec<Vec<(u32, Symbol)>>,
    profile: Profile,
    lineage: Lineage,
}

impl SparseParityCheck {
    /// Builds and validates a matrix from its rows.
    pub fn from_rows(
        field: GaloisField,
        n: usize,
        mut rows: Vec<Vec<(u32, Symbol)>>,
        profile: Profile,
        lineage: Lineage,
    ) -> Result<Self, CodeError> {
        let m = rows.len();
        if m == 0 || m >= n {
            return Err(CodeError::Dimensions { n, m });
        }
        let mut col_deg = vec![0usize; n];
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (i, &(c, label)) in row.iter().enumerate() {
                let col = c as usize;
                if col >= n {
                    return Err(CodeError::ColumnOutOfRange { row: r, col, n });
                }
                if label == 0 || !field.contains(label as u32) {
                    return Err(CodeError::Label { row: r, col, label: label as u32, q: field.q() });
                }
                if i > 0 && row[i - 1].0 == c {
                    return Err(CodeError::Duplicate { row: r, col });
                }
                col_deg[col] += 1;
            }
        }
        match &profile {
            Profile::Regular { dv } => {
                if let Some(j) = col_deg.iter().position(|d| d != dv) {
                    return Err(CodeError::ProfileMismatch(format!(
                        "column {j} has degree {} but the regular profile needs {dv}",
                        col_deg[j]
                    )));
                }
            }
            Profile::Irregular(_) => {
                if let Some(j) = col_deg.iter().position(|&d| d == 0) {
                    return Err(CodeError::ProfileMismatch(format!("column {j} is empty")));
                }
            }
        }
        Ok(Self { field, n, m, rows, profile, lineage })
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    /// Number of variable nodes (frame length).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of check nodes (syndrome length).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn lineage(&self) -> Lineage {
        self.lineage
    }

    pub fn rows(&self) -> &[Vec<(u32, Symbol)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(u32, Symbol)] {
        &self.rows[i]
    }

    /// Total number of nonzero entries.
    pub fn edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `R = 1 - m/n`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.m as f64 / self.n as f64
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for row in &self.rows {
            for &(c, _) in row {
                deg[c as usize] += 1;
            }
        }
        deg
    }

    /// Per column, `(row, label)` pairs in row order.
    pub fn columns(&self) -> Vec<Vec<(u32, Symbol)>> {
        let mut cols = vec![Vec::new(); self.n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, label) in row {
                cols[c as usize].push((r as u32, label));
            }
        }
        cols
    }

    /// `s = z Hᵀ`, i.e. `s_i = Σ_j H_ij z_j` over the field.
    ///
    /// Panics if `z.len() != n`.
    pub fn syndrome(&self, z: &[Symbol]) -> Vec<Symbol> {
        let mut out = vec![0; self.m];
        self.syndrome_into(z, &mut out);
        out
    }

    pub fn syndrome_into(&self, z: &[Symbol], out: &mut [Symbol]) {
        assert_eq!(z.len(), self.n, "frame length does not match code length");
        assert_eq!(out.len(), self.m, "syndrome buffer does not match check count");
        for (s, row) in out.iter_mut().zip(&self.rows) {
            *s = row.iter().fold(0, |acc, &(c, label)| acc ^ self.field.mul(label, z[c as usize]));
        }
    }

    pub fn is_codeword(&self, z: &[Symbol]) -> bool {
        self.syndrome(z).iter().all(|&s| s == 0)
    }
}

/// Labels every edge of `skeleton` with a uniform draw from `1..2^q`,
/// visiting entries row by row in column order.
pub fn assign_labels(skeleton: &Skeleton, field: &GaloisField, seed: u64) -> Result<SparseParityCheck, CodeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = field.order() as u32;
    let rows = skeleton
        .rows()
        .iter()
        .map(|row| row.iter().map(|&c| (c, rng.random_range(1..order) as Symbol)).collect())
        .collect();
    SparseParityCheck::from_rows(
        field.clone(),
        skeleton.n(),
        rows,
        skeleton.profile().clone(),
        Lineage { peg_seed: Some(skeleton.seed()), label_seed: Some(seed) },
    )
}
