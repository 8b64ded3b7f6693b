//! Deterministic CSV output.
//!
//! Same run parameters, same bytes: rows are written in a fixed order,
//! floats use Rust's shortest round-trip formatting, line endings are
//! always LF. Non-finite numbers are rejected at write time so a NaN in
//! a pipeline fails loudly instead of poisoning a results file.

use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("row has {got} cells, header has {expected}")]
    RaggedRow { expected: usize, got: usize },
    #[error("non-finite value {0} in column {1:?}")]
    NonFinite(f64, String),
}

/// One CSV cell. Numbers format canonically; text is quoted when needed.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Uint(u64),
    Float(f64),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Uint(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Uint(v.into())
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

/// Canonical float rendering: shortest round-trip digits, switching to
/// scientific notation when positional notation would degenerate.
fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs();
    if magnitude >= 1e16 || magnitude < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn push_escaped(out: &mut String, text: &str) {
    if text.contains([',', '"', '\n', '\r']) {
        out.push('"');
        for ch in text.chars() {
            if ch == '"' {
                out.push('"');
            }
            out.push(ch);
        }
        out.push('"');
    } else {
        out.push_str(text);
    }
}

/// CSV table with a mandatory header.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: impl IntoIterator<Item = Cell>) -> Result<(), ReportError> {
        let row: Vec<Cell> = cells.into_iter().collect();
        if row.len() != self.header.len() {
            return Err(ReportError::RaggedRow {
                expected: self.header.len(),
                got: row.len(),
            });
        }
        for (cell, column) in row.iter().zip(&self.header) {
            if let Cell::Float(v) = cell {
                if !v.is_finite() {
                    return Err(ReportError::NonFinite(*v, column.clone()));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.header.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_escaped(&mut out, name);
        }
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Text(s) => push_escaped(&mut out, s),
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Uint(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Float(v) => out.push_str(&format_float(*v)),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}
