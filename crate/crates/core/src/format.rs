//! Design files.
//!
//! CSV form: one line per cluster, comma-separated condition codes
//! (0 Control, 1 Trt1, 2 Trt2, 3 Both), optionally preceded by
//! `# swedge-design v1 label=<text>`. Later lines starting with `#` are
//! comments. JSON form: `{"label": "...", "cells": [[0, 1], ...]}`.

use serde::{Deserialize, Serialize};

use crate::design::{Condition, DesignGrid};
use crate::error::{Error, Result};

pub const HEADER_PREFIX: &str = "# swedge-design v1";

#[derive(Serialize, Deserialize)]
struct JsonDesign {
    #[serde(default)]
    label: String,
    cells: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reconstructed: Option<bool>,
}

/// Parses either format; JSON is recognised by a leading `{`.
pub fn parse_design(content: &str) -> Result<DesignGrid> {
    if content.trim_start().starts_with('{') {
        parse_json(content)
    } else {
        parse_csv(content)
    }
}

fn parse_csv(content: &str) -> Result<DesignGrid> {
    let mut label = String::new();
    let mut body = content;
    if content.starts_with(HEADER_PREFIX) {
        let (first, rest) = content.split_once('\n').unwrap_or((content, ""));
        let first = first.strip_suffix('\r').unwrap_or(first);
        let tail = &first[HEADER_PREFIX.len()..];
        if let Some(l) = tail.strip_prefix(" label=") {
            label = l.to_string();
        } else if !tail.trim().is_empty() {
            return Err(Error::Malformed(format!("unrecognised header {first:?}")));
        }
        body = rest;
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Malformed(e.to_string()))?;
        let row = record
            .iter()
            .map(|tok| {
                tok.parse::<u8>()
                    .ok()
                    .and_then(Condition::from_code)
                    .ok_or_else(|| Error::UnknownCondition {
                        row: i + 1,
                        code: tok.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DesignGrid::new(label, rows)
}

fn parse_json(content: &str) -> Result<DesignGrid> {
    let doc: JsonDesign =
        serde_json::from_str(content).map_err(|e| Error::Malformed(e.to_string()))?;
    let rows = doc
        .cells
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&code| {
                    Condition::from_code(code).ok_or_else(|| Error::UnknownCondition {
                        row: i + 1,
                        code: code.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    DesignGrid::new(doc.label, rows)
}

pub fn serialize_design(grid: &DesignGrid) -> String {
    let mut out = format!("{HEADER_PREFIX} label={}\n", grid.label());
    for row in grid.rows() {
        let codes: Vec<String> = row.iter().map(|c| c.code().to_string()).collect();
        out.push_str(&codes.join(","));
        out.push('\n');
    }
    out
}

/// JSON form; `reconstructed` is included when given.
pub fn serialize_design_json(grid: &DesignGrid, reconstructed: Option<bool>) -> String {
    let doc = JsonDesign {
        label: grid.label().to_string(),
        cells: grid
            .rows()
            .map(|row| row.iter().map(|c| c.code()).collect())
            .collect(),
        reconstructed,
    };
    serde_json::to_string(&doc).expect("design JSON serialization cannot fail")
}
