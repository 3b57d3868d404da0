//! Deterministic CSV tables with `#` metadata and JSON sidecars.

use crate::config::RunConfig;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            Cell::Float(v) if v.is_finite() => write!(out, "{v:.16e}").unwrap(),
            Cell::Float(v) if v.is_nan() => out.push_str("nan"),
            Cell::Float(v) => out.push_str(if *v > 0.0 { "inf" } else { "-inf" }),
            Cell::Text(s) => out.push_str(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            meta: vec![],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# table: {}", self.name).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// Parses a table written by [`Table::render`].
pub fn parse_table(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Some((columns, rows))
}

#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a> {
    pub task: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub files: Vec<String>,
    pub diagnostics: serde_json::Value,
}

impl Sidecar<'_> {
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.task));
        let text = serde_json::to_string_pretty(self).expect("sidecar serializes");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
