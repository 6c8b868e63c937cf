//! Empirical disclosure-risk metrics: nearest-neighbor distance ratio,
//! exact-duplicate share, quasi-identifier k-anonymity, Mahalanobis
//! anomaly of synthetic rows against the real distribution, and
//! nearest-neighbor adversarial accuracy. These are audit heuristics, not
//! a formal privacy certification.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fidelity::{Direction, MetricError, MetricScope, MetricSet, MetricValue};
use crate::stats::{mean, sample_stdev};
use crate::table::{Cell, ColumnKind, DatasetTable};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PrivacyConfig {
    /// Minimum real equivalence-class size a synthetic row must blend into.
    pub k_anon: usize,
    /// Equal-width bins used to coarsen numeric quasi-identifiers.
    pub quasi_bins: usize,
    /// Ridge added to the covariance diagonal before inversion.
    pub eps_cov: f64,
    /// Flagging bound on the privacy composite score.
    pub delta_priv: f64,
    /// Seed for subsampling when real and synthetic sizes differ.
    pub subsample_seed: u64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            k_anon: 5,
            quasi_bins: 10,
            eps_cov: 1e-6,
            delta_priv: 0.5,
            subsample_seed: 7,
        }
    }
}

impl PrivacyConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.k_anon < 2 {
            return Err(MetricError::Argument("k_anon must be at least 2".into()));
        }
        if self.quasi_bins == 0 {
            return Err(MetricError::Argument("quasi_bins must be at least 1".into()));
        }
        if !(self.eps_cov > 0.0) {
            return Err(MetricError::Argument("eps_cov must be positive".into()));
        }
        Ok(())
    }
}

/// Per-column encoding for mixed-type distances: numerics are z-scored by
/// real-data statistics, zero-variance numerics and categoricals compare
/// by equality (mismatch contributes 1).
#[derive(Debug, Clone, PartialEq)]
enum Feature {
    Num(f64),
    Tok(String),
}

struct ColumnScale {
    numeric: bool,
    mean: f64,
    stdev: f64,
}

fn column_scales(real: &DatasetTable) -> Vec<ColumnScale> {
    real.schema
        .columns
        .iter()
        .enumerate()
        .map(|(idx, col)| match col.kind {
            ColumnKind::Numeric | ColumnKind::Binary => {
                let vals = real.numeric_column(idx);
                let (m, s) = if vals.len() >= 2 {
                    (mean(&vals), sample_stdev(&vals))
                } else {
                    (0.0, 0.0)
                };
                ColumnScale { numeric: s > 0.0, mean: m, stdev: s }
            }
            ColumnKind::Categorical => ColumnScale { numeric: false, mean: 0.0, stdev: 0.0 },
        })
        .collect()
}

fn encode_row(row: &[Cell], scales: &[ColumnScale]) -> Option<Vec<Feature>> {
    let mut out = Vec::with_capacity(row.len());
    for (cell, scale) in row.iter().zip(scales) {
        if cell.is_missing() {
            return None;
        }
        if scale.numeric {
            let v = cell.as_number()?;
            out.push(Feature::Num((v - scale.mean) / scale.stdev));
        } else {
            out.push(Feature::Tok(cell.token()?));
        }
    }
    Some(out)
}

fn encode_complete_rows(table: &DatasetTable, scales: &[ColumnScale]) -> Vec<Vec<Feature>> {
    table
        .rows
        .iter()
        .filter_map(|row| encode_row(row, scales))
        .collect()
}

fn distance(a: &[Feature], b: &[Feature]) -> f64 {
    let mut sq = 0.0;
    for (fa, fb) in a.iter().zip(b) {
        sq += match (fa, fb) {
            (Feature::Num(x), Feature::Num(y)) => (x - y) * (x - y),
            (Feature::Tok(s), Feature::Tok(t)) => {
                if s == t {
                    0.0
                } else {
                    1.0
                }
            }
            _ => 1.0,
        };
    }
    sq.sqrt()
}

fn min_distance_to(point: &[Feature], pool: &[Vec<Feature>], skip: Option<usize>) -> f64 {
    let mut best = f64::INFINITY;
    for (j, other) in pool.iter().enumerate() {
        if skip == Some(j) {
            continue;
        }
        best = best.min(distance(point, other));
    }
    best
}

/// Ratio of the mean synthetic-to-real nearest-neighbor distance to the
/// mean real-to-real (leave-one-out) nearest-neighbor distance. Higher
/// means synthetic rows sit farther from real individuals.
pub fn nn_distance_ratio(real: &DatasetTable, syn: &DatasetTable) -> Result<f64, MetricError> {
    let scales = column_scales(real);
    let real_rows = encode_complete_rows(real, &scales);
    let syn_rows = encode_complete_rows(syn, &scales);
    if real_rows.len() < 2 || syn_rows.is_empty() {
        return Err(MetricError::Undefined(
            "nn_distance_ratio: need 2 real and 1 synthetic complete rows".into(),
        ));
    }
    let numerator = mean(
        &syn_rows
            .iter()
            .map(|s| min_distance_to(s, &real_rows, None))
            .collect::<Vec<f64>>(),
    );
    let denominator = mean(
        &real_rows
            .iter()
            .enumerate()
            .map(|(i, r)| min_distance_to(r, &real_rows, Some(i)))
            .collect::<Vec<f64>>(),
    );
    if denominator == 0.0 {
        return Err(MetricError::Undefined(
            "nn_distance_ratio: real rows are all identical".into(),
        ));
    }
    Ok(numerator / denominator)
}

fn row_key(row: &[Cell]) -> String {
    let mut key = String::new();
    for cell in row {
        match cell {
            Cell::Number(v) => {
                key.push('n');
                key.push_str(&v.to_bits().to_string());
            }
            Cell::Text(t) => {
                key.push('t');
                key.push_str(t);
            }
            Cell::Missing => key.push('m'),
        }
        key.push('\u{1f}');
    }
    key
}

/// Share of synthetic rows that exactly duplicate some real row across all
/// features.
pub fn identifiability_score(real: &DatasetTable, syn: &DatasetTable) -> Result<f64, MetricError> {
    if syn.rows.is_empty() {
        return Err(MetricError::Argument("identifiability: no synthetic rows".into()));
    }
    let real_keys: HashSet<String> = real.rows.iter().map(|r| row_key(r)).collect();
    let duplicates = syn
        .rows
        .iter()
        .filter(|r| real_keys.contains(&row_key(r)))
        .count();
    Ok(duplicates as f64 / syn.rows.len() as f64)
}

fn quasi_signature(
    row: &[Cell],
    qi: &[(usize, ColumnKind, f64, f64)],
    bins: usize,
) -> String {
    let mut sig = String::new();
    for &(idx, kind, lo, hi) in qi {
        match kind {
            ColumnKind::Numeric => match row[idx].as_number() {
                Some(v) if hi > lo => {
                    let b = (((v - lo) / (hi - lo) * bins as f64) as isize)
                        .clamp(0, bins as isize - 1);
                    sig.push_str(&b.to_string());
                }
                Some(_) => sig.push('0'),
                None => sig.push('m'),
            },
            _ => match row[idx].token() {
                Some(t) => sig.push_str(&t),
                None => sig.push('m'),
            },
        }
        sig.push('\u{1f}');
    }
    sig
}

/// Share of synthetic rows whose quasi-identifier combination matches
/// fewer than `k_anon` real rows. Numeric quasi-identifiers are coarsened
/// into equal-width bins over the real range.
pub fn k_anonymity_violation_rate(
    real: &DatasetTable,
    syn: &DatasetTable,
    cfg: &PrivacyConfig,
) -> Result<f64, MetricError> {
    cfg.validate()?;
    let qi: Vec<(usize, ColumnKind, f64, f64)> = real
        .schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.quasi_identifier)
        .map(|(idx, c)| {
            let (lo, hi) = if c.kind == ColumnKind::Numeric {
                let vals = real.numeric_column(idx);
                (
                    vals.iter().cloned().fold(f64::INFINITY, f64::min),
                    vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                )
            } else {
                (0.0, 0.0)
            };
            (idx, c.kind, lo, hi)
        })
        .collect();
    if qi.is_empty() {
        return Err(MetricError::Argument(
            "k_anonymity: no quasi-identifier columns flagged".into(),
        ));
    }
    if real.rows.is_empty() || syn.rows.is_empty() {
        return Err(MetricError::Argument("k_anonymity: empty table".into()));
    }
    let mut classes: HashMap<String, usize> = HashMap::new();
    for row in &real.rows {
        *classes
            .entry(quasi_signature(row, &qi, cfg.quasi_bins))
            .or_default() += 1;
    }
    let violations = syn
        .rows
        .iter()
        .filter(|row| {
            classes
                .get(&quasi_signature(row, &qi, cfg.quasi_bins))
                .copied()
                .unwrap_or(0)
                < cfg.k_anon
        })
        .count();
    Ok(violations as f64 / syn.rows.len() as f64)
}

fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_solve(l: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = z[i];
        for j in 0..i {
            sum -= l[i][j] * y[j];
        }
        y[i] = sum / l[i][i];
    }
    y
}

fn complete_numeric_rows(table: &DatasetTable, idx: &[usize]) -> Vec<Vec<f64>> {
    table
        .rows
        .iter()
        .filter_map(|row| {
            idx.iter()
                .map(|&i| row[i].as_number())
                .collect::<Option<Vec<f64>>>()
        })
        .collect()
}

/// Mahalanobis distance of each synthetic numeric subvector from the real
/// mean under the ridge-regularized real covariance, plus the mean score.
pub fn mahalanobis_anomaly(
    real: &DatasetTable,
    syn: &DatasetTable,
    cfg: &PrivacyConfig,
) -> Result<(Vec<f64>, f64), MetricError> {
    cfg.validate()?;
    let idx = real.schema.numeric_like_indices();
    let dims = idx.len();
    if dims < 2 {
        return Err(MetricError::Undefined(
            "mahalanobis: fewer than 2 numeric columns".into(),
        ));
    }
    let x = complete_numeric_rows(real, &idx);
    if x.len() <= dims {
        return Err(MetricError::Undefined(
            "mahalanobis: need more real rows than numeric columns".into(),
        ));
    }
    let n = x.len() as f64;
    let mu: Vec<f64> = (0..dims)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut cov = vec![vec![0.0; dims]; dims];
    for row in &x {
        for a in 0..dims {
            for b in 0..dims {
                cov[a][b] += (row[a] - mu[a]) * (row[b] - mu[b]);
            }
        }
    }
    for a in 0..dims {
        for b in 0..dims {
            cov[a][b] /= n - 1.0;
        }
        cov[a][a] += cfg.eps_cov;
    }
    let l = cholesky(&cov).ok_or_else(|| {
        MetricError::Undefined("mahalanobis: regularized covariance not positive definite".into())
    })?;

    let syn_rows = complete_numeric_rows(syn, &idx);
    if syn_rows.is_empty() {
        return Err(MetricError::Undefined("mahalanobis: no complete synthetic rows".into()));
    }
    let scores: Vec<f64> = syn_rows
        .iter()
        .map(|row| {
            let z: Vec<f64> = row.iter().zip(&mu).map(|(v, m)| v - m).collect();
            let y = forward_solve(&l, &z);
            y.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    let score_mean = mean(&scores);
    Ok((scores, score_mean))
}

fn subsample<'a>(
    rows: &'a [Vec<Feature>],
    target: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a Vec<Feature>> {
    if rows.len() <= target {
        return rows.iter().collect();
    }
    let mut idx = rand::seq::index::sample(rng, rows.len(), target).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| &rows[i]).collect()
}

/// Nearest-neighbor adversarial accuracy: mean over both datasets of the
/// share of rows whose nearest neighbor (leave-one-out on the own side)
/// stays within the own dataset. Distance ties count as cross-set, so
/// exact duplicates push the score toward zero. 0.5 means a 1-NN
/// adversary cannot separate the datasets.
pub fn nnaa(
    real: &DatasetTable,
    syn: &DatasetTable,
    cfg: &PrivacyConfig,
) -> Result<f64, MetricError> {
    let scales = column_scales(real);
    let real_all = encode_complete_rows(real, &scales);
    let syn_all = encode_complete_rows(syn, &scales);
    if real_all.len() < 2 || syn_all.len() < 2 {
        return Err(MetricError::Undefined(
            "nnaa: need at least 2 complete rows per dataset".into(),
        ));
    }
    let target = real_all.len().min(syn_all.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.subsample_seed);
    let real_rows: Vec<Vec<Feature>> = subsample(&real_all, target, &mut rng)
        .into_iter()
        .cloned()
        .collect();
    let syn_rows: Vec<Vec<Feature>> = subsample(&syn_all, target, &mut rng)
        .into_iter()
        .cloned()
        .collect();

    let own_share = |own: &[Vec<Feature>], cross: &[Vec<Feature>]| {
        let wins = own
            .iter()
            .enumerate()
            .filter(|(i, row)| {
                let d_own = min_distance_to(row, own, Some(*i));
                let d_cross = min_distance_to(row, cross, None);
                d_own < d_cross
            })
            .count();
        wins as f64 / own.len() as f64
    };
    let aa_real = own_share(&real_rows, &syn_rows);
    let aa_syn = own_share(&syn_rows, &real_rows);
    Ok((aa_real + aa_syn) / 2.0)
}

/// Compute the privacy metric set for one synthetic table.
pub fn evaluate_privacy(
    real: &DatasetTable,
    syn: &DatasetTable,
    cfg: &PrivacyConfig,
) -> Result<MetricSet, MetricError> {
    cfg.validate()?;
    let mut set = MetricSet::default();
    let dataset = |set: &mut MetricSet, name: &str, value: f64, direction: Direction| {
        set.insert(MetricValue {
            name: name.into(),
            value,
            direction,
            scope: MetricScope::Dataset,
        });
    };

    match nn_distance_ratio(real, syn) {
        Ok(v) => dataset(&mut set, "nn_distance_ratio", v, Direction::HigherBetter),
        Err(e) => set.warnings.push(e.to_string()),
    }
    match identifiability_score(real, syn) {
        Ok(v) => dataset(&mut set, "identifiability", v, Direction::LowerBetter),
        Err(e) => set.warnings.push(e.to_string()),
    }
    match k_anonymity_violation_rate(real, syn, cfg) {
        Ok(v) => dataset(&mut set, "k_anonymity_violation_rate", v, Direction::LowerBetter),
        Err(e) => set.warnings.push(e.to_string()),
    }
    match mahalanobis_anomaly(real, syn, cfg) {
        Ok((_, score_mean)) => dataset(&mut set, "mahalanobis_mean", score_mean, Direction::LowerBetter),
        Err(e) => set.warnings.push(e.to_string()),
    }
    match nnaa(real, syn, cfg) {
        Ok(v) => {
            dataset(&mut set, "nnaa_gap", (v - 0.5).abs(), Direction::LowerBetter);
            set.summaries.insert("nnaa".into(), v);
        }
        Err(e) => set.warnings.push(e.to_string()),
    }
    Ok(set)
}
