//! Cross-run score aggregation. Min-max normalizes every metric over
//! the pool of runs, orients values so higher means better, and folds
//! them into composite quality, privacy, harmonic, gap, and efficiency
//! scores with pass/fail threshold flags. Also renders the machine and
//! human report documents.

use std::collections::BTreeMap;
use std::io::Write as IoWrite;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::{Direction, MetricSet};
use crate::utility::{UtilityReport, ALL_CLASSIFIERS};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("report I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Metric names that belong to the privacy composite; every other
/// entry counts toward quality.
pub const PRIVACY_METRICS: [&str; 5] = [
    "nn_distance_ratio",
    "identifiability",
    "k_anonymity_violation_rate",
    "mahalanobis_mean",
    "nnaa_gap",
];

pub fn is_privacy_metric(key: &str) -> bool {
    let name = key.split(':').next().unwrap_or(key);
    PRIVACY_METRICS.contains(&name)
}

/// Acceptance thresholds: statistical gap bound, utility gap bound, and
/// privacy risk bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub eps_stat: f64,
    pub eps_util: f64,
    pub delta_priv: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_stat: 0.2, eps_util: 0.1, delta_priv: 0.5 }
    }
}

/// Everything measured for one (backend, tier, seed) run, before
/// pool-level normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub backend: String,
    pub tier: String,
    pub seed: u64,
    /// Generation wall time quantized to tenths of a second.
    pub duration_seconds: f64,
    pub requested: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Share of accepted records violating no clinical rule.
    pub mcs: f64,
    /// Same, counting hard rules only.
    pub mcs_hard: f64,
    pub metrics: MetricSet,
    pub utility: Option<UtilityReport>,
    pub artifacts_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositeScores {
    pub quality: f64,
    pub privacy: f64,
    pub harmonic: f64,
    pub gfi: f64,
    pub efficiency: f64,
    pub norm_speed: f64,
    pub eps_stat_pass: bool,
    pub delta_priv_pass: bool,
    /// None when no classifier produced both baseline and synthetic
    /// cells.
    pub eps_util_pass: Option<bool>,
    pub utility_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredRun {
    #[serde(flatten)]
    pub record: RunRecord,
    /// Metric key to pool-normalized value in [0,1], higher is better.
    pub normalized: BTreeMap<String, f64>,
    pub composites: CompositeScores,
    pub scoring_warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredPool {
    pub thresholds: Thresholds,
    pub runs: Vec<ScoredRun>,
}

/// Harmonic mean of quality and privacy, zero when both are zero.
pub fn harmonic(q: f64, p: f64) -> f64 {
    if q + p == 0.0 {
        0.0
    } else {
        2.0 * q * p / (q + p)
    }
}

/// Mean of lower-is-better gap terms.
pub fn gfi(gap_terms: &[f64]) -> f64 {
    if gap_terms.is_empty() {
        return 0.0;
    }
    gap_terms.iter().sum::<f64>() / gap_terms.len() as f64
}

pub fn efficiency(norm_speed: f64, gfi_value: f64) -> f64 {
    0.5 * (norm_speed + gfi_value)
}

/// Min-max normalizes every metric key over the pool and inverts
/// lower-is-better metrics. Pools of fewer than two runs and metrics
/// constant across the pool map to 1.0.
pub fn normalize_pool(runs: &[RunRecord]) -> Vec<BTreeMap<String, f64>> {
    let mut keys: BTreeMap<String, Direction> = BTreeMap::new();
    for run in runs {
        for (key, metric) in &run.metrics.entries {
            keys.entry(key.clone()).or_insert(metric.direction);
        }
    }
    let mut out: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); runs.len()];
    for (key, direction) in keys {
        let values: Vec<(usize, f64)> = runs
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.metrics.entries.get(&key).map(|m| (i, m.value)))
            .collect();
        if values.is_empty() {
            continue;
        }
        let lo = values.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        let hi = values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
        for (i, v) in values {
            let normalized = if runs.len() < 2 || hi == lo {
                1.0
            } else {
                let scaled = (v - lo) / (hi - lo);
                match direction {
                    Direction::HigherBetter => scaled,
                    Direction::LowerBetter => 1.0 - scaled,
                }
            };
            out[i].insert(key.clone(), normalized);
        }
    }
    out
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Scores a pool of runs. Runs are sorted by id so that output order is
/// stable regardless of collection order.
pub fn score_pool(
    mut runs: Vec<RunRecord>,
    thresholds: &Thresholds,
) -> Result<ScoredPool, ScoreError> {
    runs.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    for pair in runs.windows(2) {
        if pair[0].run_id == pair[1].run_id {
            return Err(ScoreError::Argument(format!(
                "duplicate run id {}",
                pair[0].run_id
            )));
        }
    }

    let normalized = normalize_pool(&runs);

    let durations: Vec<f64> = runs.iter().map(|r| r.duration_seconds).collect();
    let d_lo = durations.iter().copied().fold(f64::INFINITY, f64::min);
    let d_hi = durations.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut scored = Vec::with_capacity(runs.len());
    for (record, norm) in runs.into_iter().zip(normalized) {
        let mut warnings = Vec::new();

        let quality_values: Vec<f64> = norm
            .iter()
            .filter(|(k, _)| !is_privacy_metric(k))
            .map(|(_, &v)| v)
            .collect();
        let privacy_values: Vec<f64> = norm
            .iter()
            .filter(|(k, _)| is_privacy_metric(k))
            .map(|(_, &v)| v)
            .collect();
        let quality = mean_of(&quality_values).unwrap_or_else(|| {
            warnings.push("no quality metrics present, quality set to 0".into());
            0.0
        });
        let privacy = mean_of(&privacy_values).unwrap_or_else(|| {
            warnings.push("no privacy metrics present, privacy set to 0".into());
            0.0
        });

        let mut gap_terms: Vec<f64> = norm.values().map(|v| 1.0 - v).collect();
        gap_terms.push(1.0 - record.mcs);
        let gfi_value = gfi(&gap_terms);

        let norm_speed = if d_hi > d_lo {
            (record.duration_seconds - d_lo) / (d_hi - d_lo)
        } else {
            0.0
        };

        let utility_gap = record.utility.as_ref().and_then(|u| u.max_classifier_gap());
        let composites = CompositeScores {
            quality,
            privacy,
            harmonic: harmonic(quality, privacy),
            gfi: gfi_value,
            efficiency: efficiency(norm_speed, gfi_value),
            norm_speed,
            eps_stat_pass: (1.0 - quality) <= thresholds.eps_stat,
            delta_priv_pass: (1.0 - privacy) <= thresholds.delta_priv,
            eps_util_pass: utility_gap.map(|g| g <= thresholds.eps_util),
            utility_gap,
        };
        scored.push(ScoredRun { record, normalized: norm, composites, scoring_warnings: warnings });
    }
    Ok(ScoredPool { thresholds: thresholds.clone(), runs: scored })
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt3).unwrap_or_else(|| "-".into())
}

fn render_markdown(pool: &ScoredPool) -> String {
    let mut md = String::new();
    md.push_str("# Synthetic Data Audit Report\n\n");

    md.push_str("## Quality, Privacy, and Harmonic Scores\n\n");
    md.push_str("| Run | Backend | Tier | Q | P | H | GFI | MCS |\n");
    md.push_str("|---|---|---|---|---|---|---|---|\n");
    for run in &pool.runs {
        let c = &run.composites;
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            run.record.run_id,
            run.record.backend,
            run.record.tier,
            fmt3(c.quality),
            fmt3(c.privacy),
            fmt3(c.harmonic),
            fmt3(c.gfi),
            fmt3(run.record.mcs),
        ));
    }

    md.push_str("\n## Downstream Task Performance\n\n");
    md.push_str(
        "| Run | Classifier | TSTR acc | TSTR F1 | TSTR AUC | TRTS acc | TRTS F1 | TRTS AUC | TRTR acc |\n",
    );
    md.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for run in &pool.runs {
        let Some(utility) = &run.record.utility else {
            md.push_str(&format!(
                "| {} | - | - | - | - | - | - | - | - |\n",
                run.record.run_id
            ));
            continue;
        };
        for kind in ALL_CLASSIFIERS {
            let tstr = utility.cell(kind, "tstr");
            let trts = utility.cell(kind, "trts");
            let trtr = utility.cell(kind, "trtr");
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                run.record.run_id,
                kind,
                fmt_opt(tstr.map(|m| m.accuracy)),
                fmt_opt(tstr.map(|m| m.macro_f1)),
                fmt_opt(tstr.and_then(|m| m.auc)),
                fmt_opt(trts.map(|m| m.accuracy)),
                fmt_opt(trts.map(|m| m.macro_f1)),
                fmt_opt(trts.and_then(|m| m.auc)),
                fmt_opt(trtr.map(|m| m.accuracy)),
            ));
        }
    }

    md.push_str("\n## Efficiency Ranking\n\n");
    md.push_str("| Rank | Run | Duration (s) | GFI | Efficiency |\n");
    md.push_str("|---|---|---|---|---|\n");
    let mut ranked: Vec<&ScoredRun> = pool.runs.iter().collect();
    ranked.sort_by(|a, b| {
        a.composites
            .efficiency
            .partial_cmp(&b.composites.efficiency)
            .unwrap()
            .then_with(|| a.record.run_id.cmp(&b.record.run_id))
    });
    for (rank, run) in ranked.iter().enumerate() {
        md.push_str(&format!(
            "| {} | {} | {:.1} | {} | {} |\n",
            rank + 1,
            run.record.run_id,
            run.record.duration_seconds,
            fmt3(run.composites.gfi),
            fmt3(run.composites.efficiency),
        ));
    }

    md.push_str("\n## Threshold Flags\n\n");
    md.push_str("| Run | Statistical gap | Privacy risk | Utility gap |\n");
    md.push_str("|---|---|---|---|\n");
    for run in &pool.runs {
        let c = &run.composites;
        let flag = |pass: bool| if pass { "pass" } else { "flagged" };
        let util = match c.eps_util_pass {
            Some(pass) => flag(pass).to_string(),
            None => "n/a".into(),
        };
        md.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            run.record.run_id,
            flag(c.eps_stat_pass),
            flag(c.delta_priv_pass),
            util,
        ));
    }
    md
}

fn render_csv(pool: &ScoredPool) -> Result<String, ScoreError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "run_id",
            "backend",
            "tier",
            "seed",
            "duration_seconds",
            "requested",
            "accepted",
            "rejected",
            "mcs",
            "mcs_hard",
            "quality",
            "privacy",
            "harmonic",
            "gfi",
            "efficiency",
        ])
        .map_err(|e| ScoreError::Argument(e.to_string()))?;
    for run in &pool.runs {
        let r = &run.record;
        let c = &run.composites;
        writer
            .write_record([
                r.run_id.clone(),
                r.backend.clone(),
                r.tier.clone(),
                r.seed.to_string(),
                format!("{:.1}", r.duration_seconds),
                r.requested.to_string(),
                r.accepted.to_string(),
                r.rejected.to_string(),
                format!("{:.6}", r.mcs),
                format!("{:.6}", r.mcs_hard),
                format!("{:.6}", c.quality),
                format!("{:.6}", c.privacy),
                format!("{:.6}", c.harmonic),
                format!("{:.6}", c.gfi),
                format!("{:.6}", c.efficiency),
            ])
            .map_err(|e| ScoreError::Argument(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| ScoreError::Argument(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ScoreError::Argument(e.to_string()))
}

/// Writes report.json, report.md, and scores.csv into `out_dir`.
/// report.json key order is stable, so identical pools produce
/// identical bytes.
pub fn emit_report(pool: &ScoredPool, out_dir: &Path) -> Result<(), ScoreError> {
    std::fs::create_dir_all(out_dir)?;

    let json = serde_json::to_string_pretty(pool)?;
    let mut f = std::fs::File::create(out_dir.join("report.json"))?;
    f.write_all(json.as_bytes())?;
    f.write_all(b"\n")?;

    std::fs::write(out_dir.join("report.md"), render_markdown(pool))?;
    std::fs::write(out_dir.join("scores.csv"), render_csv(pool)?)?;
    Ok(())
}
