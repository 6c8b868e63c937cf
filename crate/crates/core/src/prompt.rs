//! Render generation prompts from a data profile. Four tiers of guidance
//! exist, from bare seed examples to statistical metadata plus clinical
//! rules. All substituted values come from the profile's aggregates; raw
//! rows enter a prompt only as explicitly supplied seed examples, and the
//! rule-guided tier accepts none at all.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{CategoricalProfile, DataProfile};
use crate::rules::RuleSet;
use crate::table::{format_number, ColumnKind, DatasetTable};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("template error: unresolved placeholder '{{{0}}}'")]
    UnresolvedPlaceholder(String),
}

/// Guidance tiers, ordered by how much profile information they disclose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateTier {
    SeedEx,
    FeatDesc,
    StatGuide,
    ClinRule,
}

impl TemplateTier {
    pub const ALL: [TemplateTier; 4] = [
        TemplateTier::SeedEx,
        TemplateTier::FeatDesc,
        TemplateTier::StatGuide,
        TemplateTier::ClinRule,
    ];

    /// Whether seed rows are included by default for this tier.
    pub fn seeds_by_default(self) -> bool {
        !matches!(self, TemplateTier::ClinRule)
    }
}

impl fmt::Display for TemplateTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TemplateTier::SeedEx => "seed_ex",
            TemplateTier::FeatDesc => "feat_desc",
            TemplateTier::StatGuide => "stat_guide",
            TemplateTier::ClinRule => "clin_rule",
        };
        f.write_str(s)
    }
}

impl FromStr for TemplateTier {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "seed_ex" | "seedex" => Ok(TemplateTier::SeedEx),
            "feat_desc" | "featdesc" => Ok(TemplateTier::FeatDesc),
            "stat_guide" | "statguide" => Ok(TemplateTier::StatGuide),
            "clin_rule" | "clinrule" => Ok(TemplateTier::ClinRule),
            other => Err(PromptError::Argument(format!("unknown tier '{other}'"))),
        }
    }
}

/// A fully rendered prompt plus the substitution audit trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptSpec {
    pub tier: TemplateTier,
    pub system_message: String,
    pub user_message: String,
    pub k: usize,
    /// Seed rows included verbatim in the user message (CSV renderings).
    pub seeds: Vec<String>,
    /// Placeholder tag -> substituted text.
    pub placeholder_log: BTreeMap<String, String>,
}

impl PromptSpec {
    /// Compact audit serialization.
    pub fn audit_json(&self) -> serde_json::Value {
        serde_json::json!({
            "tier": self.tier.to_string(),
            "system": self.system_message,
            "user": self.user_message,
            "k": self.k,
        })
    }

    /// Plain-text dump for run artifacts.
    pub fn to_text(&self) -> String {
        format!("SYSTEM:\n{}\n\nUSER:\n{}\n", self.system_message, self.user_message)
    }

    /// Messages with the requested row count rewritten for one batch. Only
    /// the two template-controlled count phrases change; the stored
    /// messages are untouched.
    pub fn messages_for_count(&self, n: usize) -> (String, String) {
        let re = Regex::new(r"exactly \d+ (patient records|rows)").unwrap();
        let rewrite = |s: &str| {
            re.replace_all(s, format!("exactly {n} $1").as_str())
                .into_owned()
        };
        (rewrite(&self.system_message), rewrite(&self.user_message))
    }
}

const SYSTEM_TEMPLATE: &str = "Generate exactly {k} patient records in newline-delimited JSON format. \
Do not include any explanation or commentary. Adhere strictly to the schema and guidelines provided. \
Do not include any protected health information.";

const PREAMBLE_TASK: &str = "Generate realistic synthetic patient records for {task}.";
const PREAMBLE_PLAIN: &str = "Generate realistic synthetic patient records.";
const DIRECTIVE: &str = "Repeat the format exactly: output exactly {k} rows.";
const DIRECTIVE_LAYOUT: &str = "Output exactly {k} rows, one record per line.";

/// Uniformly sample up to five rows without replacement, rendered as CSV
/// lines in schema order. Deterministic for a given seed; row order is the
/// table's own.
pub fn sample_seeds(table: &DatasetTable, n: usize, seed: u64) -> Result<Vec<String>, PromptError> {
    if n > 5 {
        return Err(PromptError::Argument(format!("seed count {n} exceeds 5")));
    }
    if n > table.row_count() {
        return Err(PromptError::Argument(format!(
            "seed count {n} exceeds table rows {}",
            table.row_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, table.row_count(), n).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| table.render_row(i)).collect())
}

/// Substitute `{tag}` placeholders in a single pass. Any tag without a
/// value is an error naming the tag; substituted content is never rescanned.
pub fn render_template(
    template: &str,
    vars: &BTreeMap<&str, String>,
) -> Result<String, PromptError> {
    let re = Regex::new(r"\{([a-z_]+)\}").unwrap();
    let mut missing: Option<String> = None;
    let out = re.replace_all(template, |caps: &regex::Captures<'_>| {
        let tag = &caps[1];
        match vars.get(tag) {
            Some(v) => v.clone(),
            None => {
                if missing.is_none() {
                    missing = Some(tag.to_string());
                }
                caps[0].to_string()
            }
        }
    });
    match missing {
        Some(tag) => Err(PromptError::UnresolvedPlaceholder(tag)),
        None => Ok(out.into_owned()),
    }
}

/// Build the prompt for one tier. Seeds may only be supplied for the tiers
/// that include example rows; the rule-guided tier requires a nonempty rule
/// set and rejects seeds.
pub fn build_prompt(
    tier: TemplateTier,
    profile: &DataProfile,
    rules: &RuleSet,
    k: usize,
    seeds: &[String],
) -> Result<PromptSpec, PromptError> {
    if k == 0 {
        return Err(PromptError::Argument("k must be at least 1".into()));
    }
    if seeds.len() > 5 {
        return Err(PromptError::Argument(format!(
            "{} seed rows supplied, maximum is 5",
            seeds.len()
        )));
    }
    if tier == TemplateTier::ClinRule {
        if !seeds.is_empty() {
            return Err(PromptError::Argument(
                "the rule-guided tier takes no example rows".into(),
            ));
        }
        if rules.is_empty() {
            return Err(PromptError::Argument(
                "the rule-guided tier requires a nonempty rule set".into(),
            ));
        }
    }

    let mut vars: BTreeMap<&str, String> = BTreeMap::new();
    vars.insert("k", k.to_string());
    if let Some(task) = &profile.schema.task {
        vars.insert("task", task.clone());
    }
    vars.insert("header", profile.schema.header_row());
    vars.insert("feature_definitions", feature_definitions(profile));
    vars.insert("seed_block", seeds.join("\n"));
    vars.insert(
        "feature_stats",
        feature_stats(profile, tier == TemplateTier::StatGuide),
    );
    vars.insert("rule_list", rule_list(profile, rules));

    let preamble = if profile.schema.task.is_some() {
        PREAMBLE_TASK
    } else {
        PREAMBLE_PLAIN
    };
    let mut sections: Vec<&str> = vec![preamble];
    match tier {
        TemplateTier::SeedEx => {
            sections.push("{header}");
        }
        TemplateTier::FeatDesc => {
            sections.push("{header}");
            sections.push("Features:\n{feature_definitions}");
        }
        TemplateTier::StatGuide => {
            sections.push("{header}");
            sections.push("Features:\n{feature_definitions}");
            sections.push("Feature Metadata:\n{feature_stats}");
        }
        TemplateTier::ClinRule => {
            sections.push("Feature Metadata:\n{feature_stats}");
            sections.push("Maintain the following correlations:\n{rule_list}");
            sections.push("Each record must follow:\n{header}");
        }
    }
    if tier != TemplateTier::ClinRule && !seeds.is_empty() {
        sections.push("Example Records:\n{seed_block}");
    }
    sections.push(if tier == TemplateTier::ClinRule {
        DIRECTIVE_LAYOUT
    } else {
        DIRECTIVE
    });
    let user_template = sections.join("\n\n");

    let system_message = render_template(SYSTEM_TEMPLATE, &vars)?;
    let user_message = render_template(&user_template, &vars)?;
    let placeholder_log = vars
        .iter()
        .map(|(tag, value)| (tag.to_string(), value.clone()))
        .collect();
    Ok(PromptSpec {
        tier,
        system_message,
        user_message,
        k,
        seeds: seeds.to_vec(),
        placeholder_log,
    })
}

fn feature_definitions(profile: &DataProfile) -> String {
    profile
        .schema
        .columns
        .iter()
        .enumerate()
        .map(|(i, col)| {
            let detail = match col.kind {
                ColumnKind::Numeric => col
                    .bounds
                    .map(|(lo, hi)| format!(" (Float: {}-{})", format_number(lo), format_number(hi)))
                    .unwrap_or_default(),
                ColumnKind::Binary => " (0: No, 1: Yes)".to_string(),
                ColumnKind::Categorical => col
                    .categories
                    .as_ref()
                    .map(|cats| format!(" ({})", cats.join("/")))
                    .unwrap_or_default(),
            };
            format!("{}. {}: {}{}", i + 1, col.name, col.description, detail)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Integer percentage with halves rounded up.
fn percent(p: f64) -> i64 {
    (p * 100.0).round() as i64
}

fn pmf_descending(profile: &CategoricalProfile) -> Vec<(&String, f64)> {
    let mut entries: Vec<(&String, f64)> = profile.pmf.iter().map(|(k, &v)| (k, v)).collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
    entries
}

fn feature_stats(profile: &DataProfile, with_correlations: bool) -> String {
    let mut lines = Vec::new();
    for col in &profile.schema.columns {
        let mut line = if let Some(num) = profile.numeric.get(&col.name) {
            format!(
                "{}: Mean: {:.1}, Std: {:.1}, Range: {}-{}",
                col.name,
                num.mean,
                num.stdev,
                format_number(num.min),
                format_number(num.max)
            )
        } else if let Some(cat) = profile.categorical.get(&col.name) {
            let freqs: Vec<String> = pmf_descending(cat)
                .into_iter()
                .map(|(name, p)| format!("{}: {}", name, percent(p)))
                .collect();
            format!("{}: {}", col.name, freqs.join(", "))
        } else {
            continue;
        };
        if with_correlations {
            let partners: Vec<&str> = profile
                .correlations
                .entries
                .iter()
                .filter(|e| e.a == col.name)
                .map(|e| e.b.as_str())
                .collect();
            if !partners.is_empty() {
                line.push_str(&format!("; correlated with {}", partners.join(", ")));
            }
        }
        lines.push(line);
    }
    lines.join("\n")
}

fn rule_list(profile: &DataProfile, rules: &RuleSet) -> String {
    let mut bullets = Vec::new();
    for entry in &profile.correlations.entries {
        bullets.push(format!("- {} correlates with {}", entry.a, entry.b));
    }
    for rule in &rules.rules {
        bullets.push(format!("- {}", rule.sentence()));
    }
    bullets.join("\n")
}
