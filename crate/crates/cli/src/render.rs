//! Tables rendered as aligned text, CSV, or JSON rows.
//!
//! Machine formats carry 12 significant digits; both CSV and JSON print the
//! same rounded value. Human tables show 4.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::inputs::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// `v` rounded to 12 significant digits.
pub fn machine(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

pub fn human(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{v:.3e}");
    }
    format!("{v:.*}", (3 - mag).max(0) as usize)
}

pub fn json_num(v: f64) -> Value {
    serde_json::Number::from_f64(machine(v)).map_or(Value::Null, Value::Number)
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|cell| match cell {
                Cell::Num(v) => machine(*v).to_string(),
                Cell::Text(t) => t.clone(),
                Cell::Missing => String::new(),
            }))
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
    }

    pub fn text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| match cell {
                        Cell::Num(v) => human(*v),
                        Cell::Text(t) => t.clone(),
                        Cell::Missing => "-".to_string(),
                    })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].len())
                    .chain(std::iter::once(self.columns[j].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |fields: &[String]| {
            let padded: Vec<String> = fields
                .iter()
                .zip(&widths)
                .map(|(f, w)| format!("{f:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.columns);
        for row in &cells {
            out.push_str(&line(row));
        }
        out
    }

    pub fn json_rows(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, cell)| {
                        let v = match cell {
                            Cell::Num(v) => json_num(*v),
                            Cell::Text(t) => Value::String(t.clone()),
                            Cell::Missing => Value::Null,
                        };
                        (k.clone(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect()
    }
}

/// `{"meta": {...}, "rows": [...]}` with a trailing newline.
pub fn json_document(meta: Map<String, Value>, table: &Table) -> String {
    let mut doc = Map::new();
    doc.insert("meta".into(), Value::Object(meta));
    doc.insert("rows".into(), Value::Array(table.json_rows()));
    let mut out = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    out.push('\n');
    out
}

pub fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    let result = match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| (path.display().to_string(), source))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| ("stdout".to_string(), source)),
    };
    result.map_err(|(path, source)| CliError::Io { path, source })
}
