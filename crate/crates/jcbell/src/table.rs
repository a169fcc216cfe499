//! Column-oriented result tables with a JSON metadata sidecar.
//!
//! Floats are written in Rust's shortest round-trip notation, so a table read
//! back from disk is bit-identical to the one written.

use crate::RunError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Int,
    Float,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub description: String,
}

impl ColumnSpec {
    pub fn new(name: &str, kind: ColumnKind, description: &str) -> Self {
        Self {
            name: name.to_string(),
            kind,
            description: description.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    /// Not applicable for this row; written as an empty field.
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn parse(raw: &str, kind: ColumnKind) -> Result<Self, String> {
        if raw.is_empty() {
            return Ok(Cell::Missing);
        }
        match kind {
            ColumnKind::Int => raw.parse().map(Cell::Int).map_err(|e| format!("{raw}: {e}")),
            ColumnKind::Float => raw.parse().map(Cell::Float).map_err(|e| format!("{raw}: {e}")),
            ColumnKind::Text => Ok(Cell::Text(raw.to_string())),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub spec: ColumnSpec,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<Column>,
}

impl ResultTable {
    pub fn new(specs: Vec<ColumnSpec>) -> Self {
        Self {
            columns: specs.into_iter().map(|spec| Column { spec, cells: Vec::new() }).collect(),
        }
    }

    pub fn specs(&self) -> Vec<ColumnSpec> {
        self.columns.iter().map(|c| c.spec.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |c| c.cells.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends a row; panics if the arity or a cell kind does not match.
    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row arity");
        for (col, cell) in self.columns.iter_mut().zip(row) {
            let ok = matches!(
                (&cell, col.spec.kind),
                (Cell::Missing, _)
                    | (Cell::Int(_), ColumnKind::Int)
                    | (Cell::Float(_), ColumnKind::Float)
                    | (Cell::Text(_), ColumnKind::Text)
            );
            assert!(ok, "cell kind mismatch in column {}", col.spec.name);
            col.cells.push(cell);
        }
    }

    pub fn column(&self, name: &str) -> Option<&[Cell]> {
        self.columns.iter().find(|c| c.spec.name == name).map(|c| c.cells.as_slice())
    }

    /// Float view of a column; missing cells are skipped.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        self.column(name)
            .map(|c| c.iter().filter_map(Cell::as_f64).collect())
            .unwrap_or_default()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<&Cell>> + '_ {
        (0..self.len()).map(move |i| self.columns.iter().map(|c| &c.cells[i]).collect())
    }

    /// Rejects NaN or infinite floats: failures must be explicit status rows.
    pub fn check_finite(&self) -> Result<(), RunError> {
        for c in &self.columns {
            if let Some(i) = c.cells.iter().position(|x| matches!(x, Cell::Float(v) if !v.is_finite())) {
                return Err(RunError::Numerical(format!(
                    "non-finite value in column {} at row {i}",
                    c.spec.name
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), RunError> {
        self.check_finite()?;
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.columns.iter().map(|c| c.spec.name.as_str()))?;
        for i in 0..self.len() {
            w.write_record(self.columns.iter().map(|c| c.cells[i].render()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`ResultTable::write_csv`] using the column
    /// kinds of `specs`.
    pub fn read_csv(path: &Path, specs: Vec<ColumnSpec>) -> Result<Self, RunError> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
        if header != names {
            return Err(RunError::Numerical(format!("header {header:?} does not match schema {names:?}")));
        }
        let mut table = Self::new(specs);
        for rec in r.records() {
            let rec = rec?;
            let mut row = Vec::with_capacity(rec.len());
            for (raw, col) in rec.iter().zip(&table.columns) {
                row.push(Cell::parse(raw, col.spec.kind).map_err(RunError::Numerical)?);
            }
            table.push_row(row);
        }
        Ok(table)
    }
}

/// Sidecar describing how a table was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub figure: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Full resolved configuration; enough to re-run without the source file.
    pub config: serde_json::Value,
    pub axes: Vec<String>,
    pub rows: usize,
    pub columns: Vec<ColumnSpec>,
    /// Experiment-specific derived quantities (fits, critical times, checks).
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
}

pub fn table_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

pub fn write_outputs(dir: &Path, stem: &str, table: &ResultTable, meta: &Metadata) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    let (csv_path, json_path) = table_paths(dir, stem);
    table.write_csv(&csv_path)?;
    std::fs::write(json_path, serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(())
}

pub fn read_outputs(dir: &Path, stem: &str) -> Result<(ResultTable, Metadata), RunError> {
    let (csv_path, json_path) = table_paths(dir, stem);
    let meta: Metadata = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
    let table = ResultTable::read_csv(&csv_path, meta.columns.clone())?;
    Ok((table, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn specs() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::new("i", ColumnKind::Int, ""),
            ColumnSpec::new("x", ColumnKind::Float, ""),
            ColumnSpec::new("s", ColumnKind::Text, ""),
        ]
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in prop::collection::vec((any::<i64>(), prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, "[a-z_ ,\"]{0,8}", any::<bool>()), 0..40)
        ) {
            let mut t = ResultTable::new(specs());
            for (i, x, s, missing) in rows {
                let x = if missing { Cell::Missing } else { Cell::Float(x) };
                let s = if s.is_empty() { Cell::Missing } else { Cell::Text(s) };
                t.push_row(vec![Cell::Int(i), x, s]);
            }
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.csv");
            t.write_csv(&p).unwrap();
            let back = ResultTable::read_csv(&p, specs()).unwrap();
            prop_assert_eq!(t.len(), back.len());
            for (a, b) in t.rows().zip(back.rows()) {
                for (ca, cb) in a.iter().zip(&b) {
                    match (ca, cb) {
                        (Cell::Float(x), Cell::Float(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                        _ => prop_assert_eq!(*ca, *cb),
                    }
                }
            }
        }
    }

    #[test]
    fn nan_is_rejected() {
        let mut t = ResultTable::new(specs());
        t.push_row(vec![Cell::Int(1), Cell::Float(f64::NAN), Cell::Missing]);
        assert!(t.check_finite().is_err());
    }

    #[test]
    #[should_panic(expected = "cell kind mismatch")]
    fn kind_mismatch_panics() {
        let mut t = ResultTable::new(specs());
        t.push_row(vec![Cell::Float(1.0), Cell::Float(1.0), Cell::Missing]);
    }
}
