//! Tabular data model: column schemas, typed cells, and CSV loading.
//!
//! A [`TableSchema`] declares column names, kinds, optional bounds and
//! category vocabularies, plus per-column quasi-identifier flags. A
//! [`DatasetTable`] holds one typed cell per schema column per row; numeric
//! parse failures are recorded in the accompanying [`LoadReport`] rather than
//! aborting the load.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("header mismatch: {0}")]
    Header(String),
}

/// Column kind. Binary columns hold exactly {0, 1} after coercion and are
/// profiled both as categorical mass functions and as 0/1 numerics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Binary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Closed value range for numeric columns, `[low, high]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
    /// Allowed tokens for categorical columns. `None` marks the column as
    /// open-vocabulary: unseen tokens pass coercion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub quasi_identifier: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSchema {
    pub columns: Vec<ColumnSchema>,
    /// Prediction target used by the ML-utility evaluation. Must name a
    /// binary column when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    /// Short task phrase rendered into prompt preambles, e.g. "diabetes
    /// prediction".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
}

impl TableSchema {
    pub fn from_json_str(s: &str) -> Result<Self, TableError> {
        let schema: TableSchema =
            serde_json::from_str(s).map_err(|e| TableError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path).map_err(|e| TableError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), TableError> {
        if self.columns.is_empty() {
            return Err(TableError::Schema("schema declares no columns".into()));
        }
        let mut seen = BTreeSet::new();
        for col in &self.columns {
            if col.name.trim().is_empty() {
                return Err(TableError::Schema("empty column name".into()));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(TableError::Schema(format!(
                    "duplicate column name '{}'",
                    col.name
                )));
            }
            if let Some((lo, hi)) = col.bounds {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(TableError::Schema(format!(
                        "column '{}' has invalid bounds [{lo}, {hi}]",
                        col.name
                    )));
                }
                if col.kind != ColumnKind::Numeric {
                    return Err(TableError::Schema(format!(
                        "column '{}' declares bounds but is not numeric",
                        col.name
                    )));
                }
            }
            if col.categories.is_some() && col.kind != ColumnKind::Categorical {
                return Err(TableError::Schema(format!(
                    "column '{}' declares categories but is not categorical",
                    col.name
                )));
            }
        }
        if let Some(label) = &self.label_column {
            match self.column(label) {
                None => {
                    return Err(TableError::Schema(format!(
                        "label column '{label}' is not in the schema"
                    )))
                }
                Some((_, c)) if c.kind != ColumnKind::Binary => {
                    return Err(TableError::Schema(format!(
                        "label column '{label}' must be binary"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Look up a column by exact name.
    pub fn column(&self, name: &str) -> Option<(usize, &ColumnSchema)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
    }

    /// Comma-separated header line in schema order.
    pub fn header_row(&self) -> String {
        self.columns
            .iter()
            .map(|c| csv_field(&c.name))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Indices of columns usable as 0/1-coded numerics (numeric + binary).
    pub fn numeric_like_indices(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.kind, ColumnKind::Numeric | ColumnKind::Binary))
            .map(|(i, _)| i)
            .collect()
    }
}

/// One typed cell. Binary values are stored as `Number(0.0)` / `Number(1.0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Token view used for categorical handling: numbers render via their
    /// shortest round-trip form, so binary cells become "0" / "1".
    pub fn token(&self) -> Option<String> {
        match self {
            Cell::Number(v) => Some(format_number(*v)),
            Cell::Text(t) => Some(t.clone()),
            Cell::Missing => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetTable {
    pub schema: TableSchema,
    pub rows: Vec<Vec<Cell>>,
}

impl DatasetTable {
    pub fn new(schema: TableSchema, rows: Vec<Vec<Cell>>) -> Result<Self, TableError> {
        schema.validate()?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.columns.len() {
                return Err(TableError::Schema(format!(
                    "row {i} has {} cells, schema has {} columns",
                    row.len(),
                    schema.columns.len()
                )));
            }
        }
        Ok(DatasetTable { schema, rows })
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Non-missing numeric values of one column (binary included as 0/1).
    pub fn numeric_column(&self, idx: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r[idx].as_number())
            .collect()
    }

    /// Non-missing token values of one column.
    pub fn token_column(&self, idx: usize) -> Vec<String> {
        self.rows.iter().filter_map(|r| r[idx].token()).collect()
    }

    /// Render one row as a CSV line in schema order.
    pub fn render_row(&self, idx: usize) -> String {
        render_row_csv(&self.rows[idx])
    }
}

/// Counters accumulated while loading a CSV file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows: usize,
    pub coercion_failures: usize,
    pub missing_cells: usize,
    pub out_of_bounds: usize,
}

/// Load an RFC-4180 CSV file against a schema. The header must contain
/// exactly the schema's column names, in any order. Unparseable numeric or
/// binary cells become `Missing` and are counted as coercion failures;
/// empty cells become `Missing` without a failure. Out-of-bounds numeric
/// values are kept and counted.
pub fn load_csv(path: &Path, schema: &TableSchema) -> Result<(DatasetTable, LoadReport), TableError> {
    let file = std::fs::File::open(path).map_err(|e| TableError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    load_csv_reader(file, schema)
}

pub fn load_csv_reader<R: Read>(
    reader: R,
    schema: &TableSchema,
) -> Result<(DatasetTable, LoadReport), TableError> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let header_names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();

    let mut order = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        match header_names.iter().position(|h| h == &col.name) {
            Some(pos) => order.push(pos),
            None => {
                return Err(TableError::Header(format!(
                    "column '{}' missing from header [{}]",
                    col.name,
                    header_names.join(", ")
                )))
            }
        }
    }
    let extras: Vec<&String> = header_names
        .iter()
        .filter(|h| !schema.columns.iter().any(|c| &c.name == *h))
        .collect();
    if !extras.is_empty() {
        return Err(TableError::Header(format!(
            "header has columns not in the schema: {}",
            extras
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }

    let mut report = LoadReport::default();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = Vec::with_capacity(schema.columns.len());
        for (col, &pos) in schema.columns.iter().zip(&order) {
            let raw = rec.get(pos).unwrap_or("").trim();
            row.push(load_cell(raw, col, &mut report));
        }
        rows.push(row);
        report.rows += 1;
    }
    Ok((DatasetTable { schema: schema.clone(), rows }, report))
}

fn load_cell(raw: &str, col: &ColumnSchema, report: &mut LoadReport) -> Cell {
    if raw.is_empty() {
        report.missing_cells += 1;
        return Cell::Missing;
    }
    match col.kind {
        ColumnKind::Numeric => match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                if let Some((lo, hi)) = col.bounds {
                    if v < lo || v > hi {
                        report.out_of_bounds += 1;
                    }
                }
                Cell::Number(v)
            }
            _ => {
                report.coercion_failures += 1;
                Cell::Missing
            }
        },
        ColumnKind::Binary => match parse_binary_token(raw) {
            Some(v) => Cell::Number(v),
            None => {
                report.coercion_failures += 1;
                Cell::Missing
            }
        },
        ColumnKind::Categorical => {
            // Real data defines the vocabulary; canonicalize case against a
            // declared list when one matches.
            if let Some(cats) = &col.categories {
                if let Some(c) = cats.iter().find(|c| c.eq_ignore_ascii_case(raw)) {
                    return Cell::Text(c.clone());
                }
            }
            Cell::Text(raw.to_string())
        }
    }
}

/// Accepted spellings for binary values, case-insensitive.
pub fn parse_binary_token(raw: &str) -> Option<f64> {
    let t = raw.trim();
    match t.to_ascii_lowercase().as_str() {
        "0" | "no" | "false" => return Some(0.0),
        "1" | "yes" | "true" => return Some(1.0),
        _ => {}
    }
    match t.parse::<f64>() {
        Ok(v) if v == 0.0 => Some(0.0),
        Ok(v) if v == 1.0 => Some(1.0),
        _ => None,
    }
}

/// Shortest round-trip rendering; integral values print without a decimal
/// point (140.0 -> "140").
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

pub fn render_cell(cell: &Cell) -> String {
    match cell {
        Cell::Number(v) => format_number(*v),
        Cell::Text(t) => t.clone(),
        Cell::Missing => String::new(),
    }
}

/// Quote a CSV field when it contains a delimiter, quote, or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_row_csv(cells: &[Cell]) -> String {
    cells
        .iter()
        .map(|c| csv_field(&render_cell(c)))
        .collect::<Vec<_>>()
        .join(",")
}
