//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "pair",
//!   "n": 2,
//!   "alpha": 0.5, "beta": 0.5, "gamma": 1.0,
//!   "cash": [0.5, 0.0],
//!   "liabilities": [[0.0, 2.0], [3.0, 0.0]],
//!   "holdings": [{"from": 0, "to": 1, "amount": 0.2}]
//! }
//! ```
//!
//! Both matrices accept a dense array of rows or a list of `{from, to,
//! amount}` entries with 0-based indices. For holdings `amount` is the
//! fraction of `from`'s equity owned by `to`. The encoding read is the
//! encoding written back.

use std::fs;
use std::path::Path;

use clearnet_core::{Charges, FinancialNetwork};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub from: usize,
    pub to: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixData {
    Entries(Vec<Entry>),
    Dense(Vec<Vec<f64>>),
}

impl MatrixData {
    pub fn to_matrix(&self, what: &str, n: usize) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(n, n);
        match self {
            MatrixData::Dense(rows) => {
                if rows.len() != n {
                    return Err(CliError::Validation(format!(
                        "{what} has {} rows, expected {n}",
                        rows.len()
                    )));
                }
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(CliError::Validation(format!(
                            "{what} row {i} has {} entries, expected {n}",
                            row.len()
                        )));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
            }
            MatrixData::Entries(entries) => {
                let mut seen = vec![false; n * n];
                for (k, e) in entries.iter().enumerate() {
                    if e.from >= n || e.to >= n {
                        return Err(CliError::Validation(format!(
                            "{what} entry {k} refers to bank {} but n = {n}",
                            e.from.max(e.to)
                        )));
                    }
                    let slot = e.from * n + e.to;
                    if seen[slot] {
                        return Err(CliError::Validation(format!(
                            "{what} entry {k} repeats the pair ({}, {})",
                            e.from, e.to
                        )));
                    }
                    seen[slot] = true;
                    m[(e.from, e.to)] = e.amount;
                }
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub cash: Vec<f64>,
    pub liabilities: MatrixData,
    pub holdings: MatrixData,
}

impl Scenario {
    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let parsed: std::result::Result<Scenario, _> = serde_path_to_error::deserialize(de);
        parsed.map_err(|err| {
            let field = err.path().to_string();
            let inner = err.into_inner();
            CliError::Parse {
                source_name: source_name.to_string(),
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Builds and validates the network. `tol` replaces the comparison
    /// tolerance.
    pub fn network(&self, tol: f64) -> Result<FinancialNetwork> {
        let n = self.n;
        if self.cash.len() != n {
            return Err(CliError::Validation(format!(
                "cash has {} entries, expected n = {n}",
                self.cash.len()
            )));
        }
        let liabilities = self.liabilities.to_matrix("liabilities", n)?;
        let holdings = self.holdings.to_matrix("holdings", n)?;
        let net = FinancialNetwork::new(
            DVector::from_column_slice(&self.cash),
            liabilities,
            holdings,
            Charges::new(self.alpha, self.beta, self.gamma),
        )?;
        Ok(net.with_tolerance(tol))
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "unnamed".to_string())
    }
}

/// Reads and validates a scenario file.
pub fn ingest(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let scenario = Scenario::from_json(&text, &path.display().to_string())?;
    scenario.network(clearnet_core::DEFAULT_TOLERANCE)?;
    Ok(scenario)
}
