//! In-memory dataset and its CSV representation.
//!
//! A dataset is an N x p feature matrix plus a length-N response vector.
//! Storage is column-major because split search scans one feature at a time.
//! Datasets are immutable once constructed; derived datasets (row subsets,
//! swapped responses) are new values.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset from feature columns and a response vector.
    /// Every value must be finite and every column the same length as the
    /// response; violations are contract errors.
    pub fn new(columns: Vec<Vec<f64>>, target: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::contract("dataset needs at least one feature column"));
        }
        if target.is_empty() {
            return Err(Error::contract("dataset needs at least one row"));
        }
        if column_names.len() != columns.len() {
            return Err(Error::contract(format!(
                "{} column names for {} columns",
                column_names.len(),
                columns.len()
            )));
        }
        let n = target.len();
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::contract(format!(
                    "column {} has {} rows, response has {}",
                    j,
                    col.len(),
                    n
                )));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::contract(format!("non-finite value {} in column {}", v, j)));
            }
        }
        if let Some(v) = target.iter().find(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite response value {}", v)));
        }
        Ok(Dataset {
            columns,
            target,
            column_names,
        })
    }

    /// Same as `new` with default column names x1..xp.
    pub fn with_default_names(columns: Vec<Vec<f64>>, target: Vec<f64>) -> Result<Self> {
        let names = (1..=columns.len()).map(|j| format!("x{}", j)).collect();
        Dataset::new(columns, target, names)
    }

    /// Build from row-major feature rows.
    pub fn from_rows(rows: &[Vec<f64>], target: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::contract("dataset needs at least one row"));
        }
        let p = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::contract(format!(
                "row {} has {} values, expected {}",
                i,
                r.len(),
                p
            )));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for row in rows {
            for (j, v) in row.iter().enumerate() {
                columns[j].push(*v);
            }
        }
        Dataset::with_default_names(columns, target)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Materialize the rows at `indices` (repeats allowed) as a new dataset.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::contract("row selection is empty"));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= self.n_rows()) {
            return Err(Error::contract(format!(
                "row index {} out of range for {} rows",
                i,
                self.n_rows()
            )));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| indices.iter().map(|&i| c[i]).collect())
            .collect();
        let target = indices.iter().map(|&i| self.target[i]).collect();
        Ok(Dataset {
            columns,
            target,
            column_names: self.column_names.clone(),
        })
    }

    /// Same features, different response (for fitting trees to residuals).
    pub fn with_target(&self, target: Vec<f64>) -> Result<Self> {
        Dataset::new(self.columns.clone(), target, self.column_names.clone())
    }

    /// Serialize as CSV (`x1,...,xp,y` header). Floats use Rust's shortest
    /// round-trip formatting, so reading the text back restores every value
    /// bit-exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.column_names.join(","));
        out.push_str(",y\n");
        for i in 0..self.n_rows() {
            for j in 0..self.n_features() {
                let _ = write!(out, "{},", self.columns[j][i]);
            }
            let _ = writeln!(out, "{}", self.target[i]);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_string(text: &str, path_for_errors: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path_for_errors.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".to_string()))?;
        let mut names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if names.len() < 2 {
            return Err(parse_err(1, "header needs at least one feature and y".to_string()));
        }
        let last = names.pop().unwrap();
        if last != "y" {
            return Err(parse_err(1, format!("last header column must be y, got {:?}", last)));
        }
        let p = names.len();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
        let mut target = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != p + 1 {
                return Err(parse_err(
                    lineno + 1,
                    format!("expected {} fields, got {}", p + 1, fields.len()),
                ));
            }
            for (j, field) in fields.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|e| {
                    parse_err(lineno + 1, format!("bad number {:?}: {}", field, e))
                })?;
                if j < p {
                    columns[j].push(v);
                } else {
                    target.push(v);
                }
            }
        }
        Dataset::new(columns, target, names)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Dataset::from_csv_string(&text, &path.display().to_string())
    }
}
