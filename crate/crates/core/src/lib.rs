//! Core library for generating and auditing synthetic tabular health
//! data. The pipeline profiles a real table into non-identifying
//! aggregates, renders tiered prompts, drives a generation backend,
//! validates emitted records against schema and clinical rules, and
//! scores the result for statistical fidelity, privacy risk, and
//! downstream model utility.

pub mod fidelity;
pub mod generate;
pub mod privacy;
pub mod profile;
pub mod prompt;
pub mod record;
pub mod rules;
pub mod score;
pub mod stats;
pub mod table;
pub mod utility;

pub use fidelity::{Direction, MetricSet, MetricValue};
pub use generate::{GenerationConfig, GenerationLog, MockBackend, RecordBackend, RemoteBackend};
pub use profile::DataProfile;
pub use prompt::{PromptSpec, TemplateTier};
pub use record::RejectionReport;
pub use rules::{ClinicalRule, RuleSet};
pub use score::{RunRecord, ScoredPool, Thresholds};
pub use table::{Cell, ColumnKind, ColumnSchema, DatasetTable, TableSchema};
pub use utility::UtilityReport;
