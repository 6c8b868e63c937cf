//! Declarative clinical rules: implications over record fields with
//! conjunctive antecedents and consequents. A record violates a rule when
//! every antecedent condition holds and at least one consequent condition
//! fails (material implication). Hard rules drop records downstream; soft
//! rules are recorded for scoring only.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{Cell, ColumnKind, TableSchema};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("rules file is not valid JSON: {0}")]
    Json(String),
    #[error("rule '{rule}': {reason}")]
    Invalid { rule: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "in")]
    In,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::In => "in",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleValue {
    Number(f64),
    Text(String),
    List(Vec<RuleValue>),
}

impl fmt::Display for RuleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleValue::Number(v) => write!(f, "{}", crate::table::format_number(*v)),
            RuleValue::Text(t) => f.write_str(t),
            RuleValue::List(items) => {
                let rendered: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                write!(f, "{{{}}}", rendered.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub field: String,
    pub op: Comparator,
    pub value: RuleValue,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.field, self.op, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalRule {
    pub id: String,
    #[serde(rename = "if")]
    pub antecedent: Vec<Condition>,
    #[serde(rename = "then")]
    pub consequent: Vec<Condition>,
    #[serde(default = "default_hard")]
    pub hard: bool,
}

fn default_hard() -> bool {
    true
}

impl ClinicalRule {
    /// "If a and b, then c and d." rendering used in prompts.
    pub fn sentence(&self) -> String {
        let ante: Vec<String> = self.antecedent.iter().map(|c| c.to_string()).collect();
        let cons: Vec<String> = self.consequent.iter().map(|c| c.to_string()).collect();
        format!("If {}, then {}.", ante.join(" and "), cons.join(" and "))
    }

    /// Fields named in the consequent, deduplicated in order.
    pub fn consequent_fields(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.consequent
            .iter()
            .filter(|c| seen.insert(c.field.as_str()))
            .map(|c| c.field.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RuleSet {
    pub rules: Vec<ClinicalRule>,
    #[serde(default)]
    pub provenance: String,
}

/// Accepts either a bare JSON list of rules or `{provenance, rules: [...]}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum RuleFile {
    Bare(Vec<ClinicalRule>),
    Wrapped(RuleSet),
}

impl RuleSet {
    pub fn from_json_str(s: &str) -> Result<Self, RuleError> {
        let parsed: RuleFile = serde_json::from_str(s).map_err(|e| RuleError::Json(e.to_string()))?;
        Ok(match parsed {
            RuleFile::Bare(rules) => RuleSet {
                rules,
                provenance: String::new(),
            },
            RuleFile::Wrapped(set) => set,
        })
    }

    pub fn from_json_file(path: &Path) -> Result<Self, RuleError> {
        let text = std::fs::read_to_string(path).map_err(|e| RuleError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json_str(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Subset containing only hard rules.
    pub fn hard_only(&self) -> RuleSet {
        RuleSet {
            rules: self.rules.iter().filter(|r| r.hard).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Fail fast on rules that reference unknown fields or use comparators
    /// incompatible with the column kind.
    pub fn validate(&self, schema: &TableSchema) -> Result<(), RuleError> {
        let mut ids = BTreeSet::new();
        for rule in &self.rules {
            if !ids.insert(rule.id.as_str()) {
                return Err(RuleError::Invalid {
                    rule: rule.id.clone(),
                    reason: "duplicate rule id".into(),
                });
            }
            for cond in rule.antecedent.iter().chain(&rule.consequent) {
                let (_, col) = schema.column(&cond.field).ok_or_else(|| RuleError::Invalid {
                    rule: rule.id.clone(),
                    reason: format!("references unknown field '{}'", cond.field),
                })?;
                let ordering = matches!(
                    cond.op,
                    Comparator::Gt | Comparator::Ge | Comparator::Lt | Comparator::Le
                );
                if ordering && col.kind == ColumnKind::Categorical {
                    return Err(RuleError::Invalid {
                        rule: rule.id.clone(),
                        reason: format!(
                            "ordering comparator '{}' on categorical field '{}'",
                            cond.op, cond.field
                        ),
                    });
                }
                if cond.op == Comparator::In && !matches!(cond.value, RuleValue::List(_)) {
                    return Err(RuleError::Invalid {
                        rule: rule.id.clone(),
                        reason: "'in' requires a list value".into(),
                    });
                }
                if cond.op != Comparator::In && matches!(cond.value, RuleValue::List(_)) {
                    return Err(RuleError::Invalid {
                        rule: rule.id.clone(),
                        reason: format!("comparator '{}' cannot take a list value", cond.op),
                    });
                }
            }
        }
        Ok(())
    }

    /// Rules violated by a typed record (antecedent holds, consequent fails).
    pub fn violated_by<'a>(
        &'a self,
        row: &[Cell],
        schema: &TableSchema,
    ) -> Vec<&'a ClinicalRule> {
        self.rules
            .iter()
            .filter(|rule| {
                let ante = rule
                    .antecedent
                    .iter()
                    .all(|c| condition_holds(c, row, schema));
                let cons = rule
                    .consequent
                    .iter()
                    .all(|c| condition_holds(c, row, schema));
                ante && !cons
            })
            .collect()
    }
}

/// Evaluate one condition against a typed record. Conditions over missing
/// cells never hold.
pub fn condition_holds(cond: &Condition, row: &[Cell], schema: &TableSchema) -> bool {
    let Some((idx, _)) = schema.column(&cond.field) else {
        return false;
    };
    match &row[idx] {
        Cell::Missing => false,
        Cell::Number(v) => numeric_condition(*v, cond),
        Cell::Text(t) => text_condition(t, cond),
    }
}

fn scalar_as_number(value: &RuleValue) -> Option<f64> {
    match value {
        RuleValue::Number(v) => Some(*v),
        RuleValue::Text(t) => crate::table::parse_binary_token(t).or_else(|| t.parse().ok()),
        RuleValue::List(_) => None,
    }
}

fn numeric_condition(v: f64, cond: &Condition) -> bool {
    match cond.op {
        Comparator::In => match &cond.value {
            RuleValue::List(items) => items
                .iter()
                .any(|i| scalar_as_number(i).map(|w| w == v).unwrap_or(false)),
            _ => false,
        },
        op => {
            let Some(w) = scalar_as_number(&cond.value) else {
                return false;
            };
            match op {
                Comparator::Eq => v == w,
                Comparator::Ne => v != w,
                Comparator::Gt => v > w,
                Comparator::Ge => v >= w,
                Comparator::Lt => v < w,
                Comparator::Le => v <= w,
                Comparator::In => unreachable!(),
            }
        }
    }
}

fn text_condition(t: &str, cond: &Condition) -> bool {
    let matches_scalar = |value: &RuleValue| match value {
        RuleValue::Text(w) => t.eq_ignore_ascii_case(w),
        RuleValue::Number(v) => t == crate::table::format_number(*v),
        RuleValue::List(_) => false,
    };
    match cond.op {
        Comparator::Eq => matches_scalar(&cond.value),
        Comparator::Ne => !matches_scalar(&cond.value),
        Comparator::In => match &cond.value {
            RuleValue::List(items) => items.iter().any(matches_scalar),
            _ => false,
        },
        _ => false,
    }
}
