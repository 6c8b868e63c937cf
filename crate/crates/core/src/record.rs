//! Gate raw model output into typed records. Each line is tried first as a
//! single JSON object (keys matched case-, space-, and
//! underscore-insensitively), then as a CSV row in schema order. Parsed
//! candidates are coerced to typed cells and checked against clinical
//! rules. Every input line lands in exactly one outcome class: accepted,
//! parse failure, schema violation, or hard-rule violation.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::rules::RuleSet;
use crate::table::{parse_binary_token, render_row_csv, Cell, ColumnKind, TableSchema};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("metric undefined: {0}")]
    Undefined(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grammar {
    Json,
    Csv,
}

/// Per-line outcome of the gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Accepted { grammar: Grammar },
    ParseFailure { reason: String },
    SchemaViolation { column: String, reason: String },
    RuleViolation { rules: Vec<String> },
}

/// A parsed but not yet typed candidate record.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub line_index: usize,
    pub grammar: Grammar,
    /// One entry per schema column, in schema order.
    pub values: Vec<RawValue>,
}

#[derive(Debug, Clone)]
pub enum RawValue {
    Json(Value),
    Text(String),
    Absent,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RejectionReport {
    pub lines: usize,
    pub accepted: usize,
    pub parse_failure: usize,
    pub schema_violation: usize,
    pub rule_violation: usize,
    /// (line index, outcome) for every input line.
    pub outcomes: Vec<(usize, Outcome)>,
    /// Soft-rule violations on records that were kept: (line index, rule ids).
    pub soft_violations: Vec<(usize, Vec<String>)>,
}

impl RejectionReport {
    fn record(&mut self, line: usize, outcome: Outcome) {
        match &outcome {
            Outcome::Accepted { .. } => self.accepted += 1,
            Outcome::ParseFailure { .. } => self.parse_failure += 1,
            Outcome::SchemaViolation { .. } => self.schema_violation += 1,
            Outcome::RuleViolation { .. } => self.rule_violation += 1,
        }
        self.outcomes.push((line, outcome));
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.accepted as f64 / self.lines as f64
        }
    }
}

fn normalize_key(k: &str) -> String {
    k.chars()
        .filter(|c| *c != ' ' && *c != '_')
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// Try the two grammars on each line. Blank lines and lines matching
/// neither grammar are recorded as parse failures.
pub fn parse_lines(lines: &[String], schema: &TableSchema) -> (Vec<RawRecord>, RejectionReport) {
    let mut report = RejectionReport {
        lines: lines.len(),
        ..RejectionReport::default()
    };
    let normalized: Vec<String> = schema
        .columns
        .iter()
        .map(|c| normalize_key(&c.name))
        .collect();
    let mut records = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            report.record(i, Outcome::ParseFailure { reason: "blank line".into() });
            continue;
        }
        if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(trimmed) {
            let by_key: BTreeMap<String, &Value> = map
                .iter()
                .map(|(k, v)| (normalize_key(k), v))
                .collect();
            let values = normalized
                .iter()
                .map(|key| match by_key.get(key) {
                    Some(v) => RawValue::Json((*v).clone()),
                    None => RawValue::Absent,
                })
                .collect();
            records.push(RawRecord { line_index: i, grammar: Grammar::Json, values });
            continue;
        }
        match csv_cells(trimmed) {
            Some(cells) if cells.len() == schema.columns.len() => {
                records.push(RawRecord {
                    line_index: i,
                    grammar: Grammar::Csv,
                    values: cells.into_iter().map(RawValue::Text).collect(),
                });
            }
            Some(cells) => {
                report.record(
                    i,
                    Outcome::ParseFailure {
                        reason: format!(
                            "expected {} fields, found {}",
                            schema.columns.len(),
                            cells.len()
                        ),
                    },
                );
            }
            None => {
                report.record(i, Outcome::ParseFailure { reason: "malformed CSV row".into() });
            }
        }
    }
    (records, report)
}

fn csv_cells(line: &str) -> Option<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(line.as_bytes());
    let mut iter = rdr.records();
    match iter.next() {
        Some(Ok(rec)) => Some(rec.iter().map(|c| c.trim().to_string()).collect()),
        _ => None,
    }
}

/// Coerce a parsed candidate into typed cells. The first failing column is
/// reported. Coercion is case-insensitive and idempotent: re-coercing an
/// already canonical record changes nothing.
pub fn coerce(record: &RawRecord, schema: &TableSchema) -> Result<Vec<Cell>, (String, String)> {
    let mut cells = Vec::with_capacity(schema.columns.len());
    for (col, raw) in schema.columns.iter().zip(&record.values) {
        let cell = coerce_cell(raw, col).map_err(|reason| (col.name.clone(), reason))?;
        cells.push(cell);
    }
    Ok(cells)
}

fn coerce_cell(raw: &RawValue, col: &crate::table::ColumnSchema) -> Result<Cell, String> {
    let text: Option<String> = match raw {
        RawValue::Absent => None,
        RawValue::Json(Value::Null) => None,
        RawValue::Json(Value::String(s)) if s.trim().is_empty() => None,
        RawValue::Text(t) if t.trim().is_empty() => None,
        RawValue::Json(Value::Bool(b)) => Some(if *b { "true".into() } else { "false".into() }),
        RawValue::Json(Value::Number(n)) => Some(n.to_string()),
        RawValue::Json(Value::String(s)) => Some(s.trim().to_string()),
        RawValue::Json(other) => Some(other.to_string()),
        RawValue::Text(t) => Some(t.trim().to_string()),
    };
    let Some(token) = text else {
        return Err("missing value".into());
    };
    match col.kind {
        ColumnKind::Numeric => {
            let v: f64 = token
                .parse()
                .map_err(|_| format!("'{token}' is not numeric"))?;
            if !v.is_finite() {
                return Err(format!("'{token}' is not finite"));
            }
            if let Some((lo, hi)) = col.bounds {
                if v < lo || v > hi {
                    return Err(format!("{v} outside bounds [{lo}, {hi}]"));
                }
            }
            Ok(Cell::Number(v))
        }
        ColumnKind::Binary => parse_binary_token(&token)
            .map(Cell::Number)
            .ok_or_else(|| format!("'{token}' is not a binary value")),
        ColumnKind::Categorical => match &col.categories {
            Some(cats) => cats
                .iter()
                .find(|c| c.eq_ignore_ascii_case(&token))
                .map(|c| Cell::Text(c.clone()))
                .ok_or_else(|| format!("unknown category '{token}'")),
            None => Ok(Cell::Text(token)),
        },
    }
}

/// A typed record that passed parsing and coercion, tagged with its source
/// line and grammar.
#[derive(Debug, Clone)]
pub struct TypedRecord {
    pub line_index: usize,
    pub grammar: Grammar,
    pub cells: Vec<Cell>,
}

/// Drop hard-rule violators, record soft violations, and log outcomes for
/// the records kept.
pub fn apply_rules(
    records: Vec<TypedRecord>,
    rules: &RuleSet,
    schema: &TableSchema,
    report: &mut RejectionReport,
) -> Vec<TypedRecord> {
    let mut kept = Vec::with_capacity(records.len());
    for rec in records {
        let violated = rules.violated_by(&rec.cells, schema);
        let hard: Vec<String> = violated
            .iter()
            .filter(|r| r.hard)
            .map(|r| r.id.clone())
            .collect();
        if !hard.is_empty() {
            let all: Vec<String> = violated.iter().map(|r| r.id.clone()).collect();
            report.record(rec.line_index, Outcome::RuleViolation { rules: all });
            continue;
        }
        let soft: Vec<String> = violated.iter().map(|r| r.id.clone()).collect();
        if !soft.is_empty() {
            report.soft_violations.push((rec.line_index, soft));
        }
        report.record(rec.line_index, Outcome::Accepted { grammar: rec.grammar });
        kept.push(rec);
    }
    kept
}

/// Full gate: parse, coerce, and rule-check raw lines. The report's outcome
/// counts partition the input lines exactly.
pub fn gate_records(
    lines: &[String],
    schema: &TableSchema,
    rules: &RuleSet,
) -> (Vec<TypedRecord>, RejectionReport) {
    let (raw, mut report) = parse_lines(lines, schema);
    let mut typed = Vec::with_capacity(raw.len());
    for rec in raw {
        match coerce(&rec, schema) {
            Ok(cells) => typed.push(TypedRecord {
                line_index: rec.line_index,
                grammar: rec.grammar,
                cells,
            }),
            Err((column, reason)) => {
                report.record(rec.line_index, Outcome::SchemaViolation { column, reason });
            }
        }
    }
    let kept = apply_rules(typed, rules, schema, &mut report);
    report.outcomes.sort_by_key(|(line, _)| *line);
    (kept, report)
}

/// Medical consistency score: the fraction of records violating zero rules
/// (hard and soft). An empty rule set scores 1.0; an empty record list is
/// undefined.
pub fn mcs(records: &[TypedRecord], rules: &RuleSet, schema: &TableSchema) -> Result<f64, RecordError> {
    if records.is_empty() {
        return Err(RecordError::Undefined(
            "medical consistency over zero records".into(),
        ));
    }
    if rules.is_empty() {
        return Ok(1.0);
    }
    let clean = records
        .iter()
        .filter(|r| rules.violated_by(&r.cells, schema).is_empty())
        .count();
    Ok(clean as f64 / records.len() as f64)
}

/// Render accepted records as CSV lines (schema order, no header).
pub fn records_to_csv(records: &[TypedRecord]) -> Vec<String> {
    records.iter().map(|r| render_row_csv(&r.cells)).collect()
}

/// Render accepted records as newline-delimited JSON objects keyed by
/// column name.
pub fn records_to_ndjson(records: &[TypedRecord], schema: &TableSchema) -> Vec<String> {
    records
        .iter()
        .map(|r| {
            let mut map = serde_json::Map::new();
            for (col, cell) in schema.columns.iter().zip(&r.cells) {
                let v = match cell {
                    Cell::Number(x) => serde_json::json!(x),
                    Cell::Text(t) => Value::String(t.clone()),
                    Cell::Missing => Value::Null,
                };
                map.insert(col.name.clone(), v);
            }
            Value::Object(map).to_string()
        })
        .collect()
}
