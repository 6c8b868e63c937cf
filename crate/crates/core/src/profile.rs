//! Condense a real table into non-identifying aggregates: per-column
//! moments and quantiles, post-merge category mass functions, and retained
//! pairwise correlations. The serialized [`DataProfile`] is the only
//! artifact of the real data that downstream prompt construction may read,
//! so rare category names (below the merge threshold) never serialize.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;
use crate::table::{ColumnKind, DatasetTable, TableSchema};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("column '{column}': fewer than 2 non-missing values")]
    InsufficientData { column: String },
    #[error("column '{column}': no non-missing values")]
    EmptyColumn { column: String },
    #[error("invalid profile configuration: {0}")]
    Config(String),
    #[error("profile serialization failed: {0}")]
    Serde(String),
}

/// Label under which below-threshold categories are pooled.
pub const MERGED_CATEGORY: &str = "Other";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NumericProfile {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
    /// Quartiles at p = 0.25, 0.5, 0.75 by linear interpolation between
    /// closest order statistics.
    pub quartiles: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct CategoricalProfile {
    /// Probability mass over post-merge categories; sums to 1 within 1e-9.
    pub pmf: BTreeMap<String, f64>,
    /// Number of raw categories pooled into [`MERGED_CATEGORY`].
    pub merged_count: usize,
    /// Names of the pooled categories. Kept in memory for auditing but never
    /// serialized: each name occurs in fewer rows than the merge threshold.
    #[serde(skip)]
    pub merged_other: Vec<String>,
    /// Raw per-category counts, internal only.
    #[serde(skip)]
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorrelationEntry {
    pub a: String,
    pub b: String,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct CorrelationSet {
    /// Retained pairs: |rho| above the cutoff or expert-flagged. Ordered by
    /// schema position of (a, b).
    pub entries: Vec<CorrelationEntry>,
    pub expert_flagged: Vec<(String, String)>,
    /// Pairs skipped because a side had zero variance (or under two
    /// complete observations).
    pub zero_variance_excluded: Vec<(String, String)>,
}

impl CorrelationSet {
    pub fn retained_pairs(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .map(|e| (e.a.clone(), e.b.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataProfile {
    pub schema: TableSchema,
    pub numeric: BTreeMap<String, NumericProfile>,
    /// Categorical and binary columns (binary is profiled over "0"/"1").
    pub categorical: BTreeMap<String, CategoricalProfile>,
    pub correlations: CorrelationSet,
    pub row_count: usize,
    /// Fraction of missing cells per column, recorded, never imputed.
    pub missing_rates: BTreeMap<String, f64>,
}

impl DataProfile {
    pub fn to_json(&self) -> Result<String, ProfileError> {
        serde_json::to_string_pretty(self).map_err(|e| ProfileError::Serde(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, ProfileError> {
        serde_json::from_str(s).map_err(|e| ProfileError::Serde(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct ProfileConfig {
    /// Categories with fewer occurrences are pooled into [`MERGED_CATEGORY`].
    pub merge_threshold: usize,
    /// Correlations with |rho| above this are retained.
    pub correlation_cutoff: f64,
    /// Pairs retained regardless of magnitude.
    pub expert_pairs: Vec<(String, String)>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            merge_threshold: 5,
            correlation_cutoff: 0.15,
            expert_pairs: Vec::new(),
        }
    }
}

/// Profile a numeric value list. Requires at least two values.
pub fn profile_numeric(values: &[f64], column: &str) -> Result<NumericProfile, ProfileError> {
    if values.len() < 2 {
        return Err(ProfileError::InsufficientData {
            column: column.to_string(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(NumericProfile {
        mean: stats::mean(values),
        stdev: stats::sample_stdev(values),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        quartiles: [
            stats::quantile_sorted(&sorted, 0.25),
            stats::quantile_sorted(&sorted, 0.5),
            stats::quantile_sorted(&sorted, 0.75),
        ],
    })
}

/// Profile a categorical token list. Categories with count below
/// `threshold` are pooled into [`MERGED_CATEGORY`] before the mass function
/// is formed; the pooled cell itself is never re-merged.
pub fn profile_categorical(
    values: &[String],
    threshold: usize,
    column: &str,
) -> Result<CategoricalProfile, ProfileError> {
    if values.is_empty() {
        return Err(ProfileError::EmptyColumn {
            column: column.to_string(),
        });
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v.clone()).or_default() += 1;
    }
    let total = values.len() as f64;
    let mut pmf = BTreeMap::new();
    let mut merged_other = Vec::new();
    let mut merged_total = 0usize;
    for (cat, &n) in &counts {
        if n < threshold && cat != MERGED_CATEGORY {
            merged_other.push(cat.clone());
            merged_total += n;
        } else {
            pmf.insert(cat.clone(), n as f64 / total);
        }
    }
    if merged_total > 0 {
        *pmf.entry(MERGED_CATEGORY.to_string()).or_insert(0.0) += merged_total as f64 / total;
    }
    Ok(CategoricalProfile {
        pmf,
        merged_count: merged_other.len(),
        merged_other,
        counts,
    })
}

/// Pearson correlations over all numeric and binary column pairs,
/// pairwise-complete. Pairs with zero variance on either side are excluded
/// and recorded; retained pairs have |rho| above the cutoff or are
/// expert-flagged.
pub fn compute_correlations(
    table: &DatasetTable,
    cutoff: f64,
    expert_pairs: &[(String, String)],
) -> CorrelationSet {
    let idxs = table.schema.numeric_like_indices();
    let mut set = CorrelationSet {
        expert_flagged: expert_pairs.to_vec(),
        ..CorrelationSet::default()
    };
    for (pos_a, &ia) in idxs.iter().enumerate() {
        for &ib in &idxs[pos_a + 1..] {
            let name_a = &table.schema.columns[ia].name;
            let name_b = &table.schema.columns[ib].name;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for row in &table.rows {
                if let (Some(x), Some(y)) = (row[ia].as_number(), row[ib].as_number()) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            match stats::pearson(&xs, &ys) {
                None => {
                    log::warn!("correlation {name_a}/{name_b} skipped: zero variance");
                    set.zero_variance_excluded
                        .push((name_a.clone(), name_b.clone()));
                }
                Some(rho) => {
                    let flagged = expert_pairs.iter().any(|(a, b)| {
                        (a == name_a && b == name_b) || (a == name_b && b == name_a)
                    });
                    if rho.abs() > cutoff || flagged {
                        set.entries.push(CorrelationEntry {
                            a: name_a.clone(),
                            b: name_b.clone(),
                            rho,
                        });
                    }
                }
            }
        }
    }
    set
}

/// Build the full profile: numeric moments, categorical mass functions
/// (binary columns over "0"/"1"), retained correlations, row count, and
/// per-column missingness.
pub fn build_profile(
    table: &DatasetTable,
    config: &ProfileConfig,
) -> Result<DataProfile, ProfileError> {
    if config.merge_threshold == 0 {
        return Err(ProfileError::Config("merge threshold must be >= 1".into()));
    }
    let n = table.row_count() as f64;
    let mut numeric = BTreeMap::new();
    let mut categorical = BTreeMap::new();
    let mut missing_rates = BTreeMap::new();
    for (idx, col) in table.schema.columns.iter().enumerate() {
        let missing = table.rows.iter().filter(|r| r[idx].is_missing()).count();
        missing_rates.insert(col.name.clone(), if n > 0.0 { missing as f64 / n } else { 0.0 });
        match col.kind {
            ColumnKind::Numeric => {
                let values = table.numeric_column(idx);
                numeric.insert(col.name.clone(), profile_numeric(&values, &col.name)?);
            }
            ColumnKind::Categorical | ColumnKind::Binary => {
                let tokens = table.token_column(idx);
                categorical.insert(
                    col.name.clone(),
                    profile_categorical(&tokens, config.merge_threshold, &col.name)?,
                );
            }
        }
    }
    Ok(DataProfile {
        schema: table.schema.clone(),
        numeric,
        categorical,
        correlations: compute_correlations(table, config.correlation_cutoff, &config.expert_pairs),
        row_count: table.row_count(),
        missing_rates,
    })
}
