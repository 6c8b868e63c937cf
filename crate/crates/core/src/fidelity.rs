//! Statistical-fidelity and clinical-consistency metrics comparing a real
//! table against accepted synthetic records. Distances operate on raw
//! values; divergence and information metrics operate on per-column mass
//! functions, with continuous columns discretized into equal-width bins
//! over the pooled range. Reference behavior for the distribution tests
//! and survival functions follows scipy.stats conventions (midrank ties).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{chi2_sf, entropy_bits, mean, ols_slope, pearson};
use crate::table::{ColumnKind, DatasetTable};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Optimization direction of a metric. Raw values keep their natural
/// orientation; alignment happens at scoring time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "snake_case")]
pub enum MetricScope {
    Column { name: String },
    Pair { a: String, b: String },
    Dataset,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub direction: Direction,
    pub scope: MetricScope,
}

/// Flat, deterministic collection of metric values keyed by
/// `name`, `name:column`, or `name:a|b`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub entries: BTreeMap<String, MetricValue>,
    /// Auxiliary numbers that inform reports but are excluded from
    /// composite scoring.
    pub summaries: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

pub fn metric_key(name: &str, scope: &MetricScope) -> String {
    match scope {
        MetricScope::Dataset => name.to_string(),
        MetricScope::Column { name: col } => format!("{name}:{col}"),
        MetricScope::Pair { a, b } => format!("{name}:{a}|{b}"),
    }
}

impl MetricSet {
    pub fn insert(&mut self, value: MetricValue) {
        let key = metric_key(&value.name, &value.scope);
        self.entries.insert(key, value);
    }

    fn column(&mut self, name: &str, col: &str, value: f64, direction: Direction) {
        self.insert(MetricValue {
            name: name.into(),
            value,
            direction,
            scope: MetricScope::Column { name: col.into() },
        });
    }
}

/// Equal-width binning over the pooled range of both samples, used to
/// discretize continuous columns for divergence metrics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_count: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec { bin_count: 20 }
    }
}

impl HistogramSpec {
    /// Aligned mass functions of both samples over shared bins. A
    /// degenerate pooled range collapses to a single full bin.
    pub fn pooled_pmfs(&self, real: &[f64], syn: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lo = real
            .iter()
            .chain(syn)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = real
            .iter()
            .chain(syn)
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return (vec![1.0], vec![1.0]);
        }
        let bins = self.bin_count.max(2);
        let width = (hi - lo) / bins as f64;
        let histogram = |xs: &[f64]| {
            let mut counts = vec![0usize; bins];
            for &v in xs {
                let idx = (((v - lo) / width) as usize).min(bins - 1);
                counts[idx] += 1;
            }
            counts
                .into_iter()
                .map(|c| c as f64 / xs.len() as f64)
                .collect::<Vec<f64>>()
        };
        (histogram(real), histogram(syn))
    }
}

fn require_nonempty(xs: &[f64], ys: &[f64], name: &str) -> Result<(), MetricError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(MetricError::Undefined(format!("{name}: empty sample")));
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn fraction_at_most(sorted: &[f64], v: f64) -> f64 {
    sorted.partition_point(|&x| x <= v) as f64 / sorted.len() as f64
}

/// 1-Wasserstein distance between empirical distributions, the integral of
/// the absolute CDF difference.
pub fn wasserstein_1d(real: &[f64], syn: &[f64]) -> Result<f64, MetricError> {
    require_nonempty(real, syn, "wasserstein")?;
    let xs = sorted(real);
    let ys = sorted(syn);
    let mut grid: Vec<f64> = xs.iter().chain(ys.iter()).cloned().collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let mut total = 0.0;
    for w in grid.windows(2) {
        let fx = fraction_at_most(&xs, w[0]);
        let fy = fraction_at_most(&ys, w[0]);
        total += (fx - fy).abs() * (w[1] - w[0]);
    }
    Ok(total)
}

/// Two-sample Kolmogorov-Smirnov statistic: the supremum of the absolute
/// CDF difference over all sample values.
pub fn ks_statistic(real: &[f64], syn: &[f64]) -> Result<f64, MetricError> {
    require_nonempty(real, syn, "ks")?;
    let xs = sorted(real);
    let ys = sorted(syn);
    let mut sup = 0.0f64;
    for &v in xs.iter().chain(ys.iter()) {
        let d = (fraction_at_most(&xs, v) - fraction_at_most(&ys, v)).abs();
        sup = sup.max(d);
    }
    Ok(sup)
}

/// Standardized two-sample Anderson-Darling statistic with midrank tie
/// handling, after Scholz and Stephens (1987). Matches
/// scipy.stats.anderson_ksamp(midrank=True) on two samples.
pub fn ad_ksample(real: &[f64], syn: &[f64]) -> Result<f64, MetricError> {
    if real.len() < 2 || syn.len() < 2 {
        return Err(MetricError::Undefined(
            "anderson-darling: need at least 2 values per sample".into(),
        ));
    }
    let pooled = sorted(&[real, syn].concat());
    let n_total = pooled.len();
    let mut unique = pooled.clone();
    unique.dedup();
    if unique.len() < 2 {
        return Err(MetricError::Undefined(
            "anderson-darling: all values identical".into(),
        ));
    }

    let nf = n_total as f64;
    let left: Vec<f64> = unique
        .iter()
        .map(|&v| pooled.partition_point(|&x| x < v) as f64)
        .collect();
    let lj: Vec<f64> = unique
        .iter()
        .enumerate()
        .map(|(j, &v)| pooled.partition_point(|&x| x <= v) as f64 - left[j])
        .collect();
    let bj: Vec<f64> = left.iter().zip(&lj).map(|(l, t)| l + t / 2.0).collect();

    let mut a2_akn = 0.0;
    for sample in [real, syn] {
        let s = sorted(sample);
        let ni = s.len() as f64;
        let mut inner_sum = 0.0;
        for (j, &v) in unique.iter().enumerate() {
            let right = s.partition_point(|&x| x <= v) as f64;
            let fij = right - s.partition_point(|&x| x < v) as f64;
            let mij = right - fij / 2.0;
            let num = (nf * mij - bj[j] * ni).powi(2);
            let den = bj[j] * (nf - bj[j]) - nf * lj[j] / 4.0;
            inner_sum += lj[j] / nf * num / den;
        }
        a2_akn += inner_sum / ni;
    }
    a2_akn *= (nf - 1.0) / nf;

    // Normalize into the standardized form using the published variance
    // polynomial for k samples (k = 2 here).
    let k = 2.0f64;
    let h_cap = 1.0 / real.len() as f64 + 1.0 / syn.len() as f64;
    let mut hs_cs = Vec::with_capacity(n_total.saturating_sub(2));
    let mut acc = 0.0;
    for i in (2..n_total).rev() {
        acc += 1.0 / i as f64;
        hs_cs.push(acc);
    }
    let h_small = hs_cs.last().copied().unwrap_or(0.0) + 1.0;
    let mut g_small = 0.0;
    for (t, v) in hs_cs.iter().enumerate() {
        g_small += v / (t as f64 + 2.0);
    }
    let a = (4.0 * g_small - 6.0) * (k - 1.0) + (10.0 - 6.0 * g_small) * h_cap;
    let b = (2.0 * g_small - 4.0) * k * k + 8.0 * h_small * k
        + (2.0 * g_small - 14.0 * h_small - 4.0) * h_cap
        - 8.0 * h_small
        + 4.0 * g_small
        - 6.0;
    let c = (6.0 * h_small + 2.0 * g_small - 2.0) * k * k
        + (4.0 * h_small - 4.0 * g_small + 6.0) * k
        + (2.0 * h_small - 6.0) * h_cap
        + 4.0 * h_small;
    let d = (2.0 * h_small + 6.0) * k * k - 4.0 * h_small * k;
    let sigma_sq = (a * nf.powi(3) + b * nf.powi(2) + c * nf + d)
        / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    Ok((a2_akn - (k - 1.0)) / sigma_sq.sqrt())
}

const PMF_TOL: f64 = 1e-9;

fn validate_pmf(p: &[f64], name: &str) -> Result<(), MetricError> {
    if p.is_empty() {
        return Err(MetricError::Argument(format!("{name}: empty pmf")));
    }
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(MetricError::Argument(format!("{name}: negative or non-finite mass")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PMF_TOL {
        return Err(MetricError::Argument(format!(
            "{name}: pmf sums to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Jensen-Shannon divergence, base 2, over aligned mass functions.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::Argument("jsd: length mismatch".into()));
    }
    validate_pmf(p, "jsd p")?;
    validate_pmf(q, "jsd q")?;
    let term = |x: f64, m: f64| if x > 0.0 { x * (x / m).log2() } else { 0.0 };
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = (pi + qi) / 2.0;
        total += 0.5 * term(pi, m) + 0.5 * term(qi, m);
    }
    Ok(total.clamp(0.0, 1.0))
}

pub const KL_EPSILON: f64 = 1e-6;

/// Kullback-Leibler divergence, base 2, with additive smoothing applied to
/// the approximating distribution and renormalized.
pub fn kl_divergence_smoothed(p: &[f64], q: &[f64], eps: f64) -> Result<f64, MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::Argument("kl: length mismatch".into()));
    }
    validate_pmf(p, "kl p")?;
    validate_pmf(q, "kl q")?;
    let norm: f64 = q.iter().map(|&v| v + eps).sum();
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            total += pi * (pi / ((qi + eps) / norm)).log2();
        }
    }
    Ok(total.max(0.0))
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    kl_divergence_smoothed(p, q, KL_EPSILON)
}

/// Absolute Shannon-entropy difference in bits.
pub fn entropy_difference(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    validate_pmf(p, "entropy p")?;
    validate_pmf(q, "entropy q")?;
    Ok((entropy_bits(p) - entropy_bits(q)).abs())
}

/// Share of the real value range covered by the synthetic range, plus the
/// fraction of synthetic values falling outside the real range.
pub fn range_coverage(real: &[f64], syn: &[f64]) -> Result<(f64, f64), MetricError> {
    require_nonempty(real, syn, "range_coverage")?;
    let min_r = real.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_r = real.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max_r > min_r) {
        return Err(MetricError::Undefined("range_coverage: degenerate real range".into()));
    }
    let min_s = syn.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_s = syn.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let overlap = (max_s.min(max_r) - min_s.max(min_r)).max(0.0);
    let coverage = overlap / (max_r - min_r);
    let outside = syn.iter().filter(|&&v| v < min_r || v > max_r).count();
    Ok((coverage, outside as f64 / syn.len() as f64))
}

/// Chi-square goodness of fit of synthetic category counts against
/// expectations from the real distribution. Categories with zero expected
/// mass are merged into a remainder; any observed remainder mass folds
/// into the smallest expected cell so expectations stay positive.
pub fn chi_square(
    real_counts: &BTreeMap<String, usize>,
    syn_counts: &BTreeMap<String, usize>,
) -> Result<(f64, f64), MetricError> {
    let n_real: usize = real_counts.values().sum();
    let n_syn: usize = syn_counts.values().sum();
    if n_real == 0 || n_syn == 0 {
        return Err(MetricError::Argument("chi_square: empty counts".into()));
    }
    let universe: BTreeSet<&String> = real_counts.keys().chain(syn_counts.keys()).collect();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut remainder = 0usize;
    for key in universe {
        let r = real_counts.get(key).copied().unwrap_or(0);
        let s = syn_counts.get(key).copied().unwrap_or(0);
        if r == 0 {
            remainder += s;
        } else {
            let expected = r as f64 / n_real as f64 * n_syn as f64;
            cells.push((expected, s as f64));
        }
    }
    if remainder > 0 {
        let min_idx = cells
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
            .map(|(i, _)| i)
            .ok_or_else(|| MetricError::Undefined("chi_square: no expected mass".into()))?;
        cells[min_idx].1 += remainder as f64;
    }
    if cells.len() < 2 {
        return Err(MetricError::Undefined(
            "chi_square: fewer than 2 cells after merging".into(),
        ));
    }
    let stat: f64 = cells.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let p = chi2_sf(stat, cells.len() - 1);
    Ok((stat, p))
}

/// Share of real categories present in the synthetic data, plus the count
/// of novel synthetic categories (hallucinations).
pub fn category_preservation(
    real: &BTreeSet<String>,
    syn: &BTreeSet<String>,
) -> Result<(f64, usize), MetricError> {
    if real.is_empty() {
        return Err(MetricError::Argument("category_preservation: empty real set".into()));
    }
    let kept = real.intersection(syn).count();
    let hallucinated = syn.difference(real).count();
    Ok((kept as f64 / real.len() as f64, hallucinated))
}

/// Mutual information in bits from the joint empirical distribution of two
/// discrete columns. Constant columns yield 0.
pub fn mutual_information(xs: &[String], ys: &[String]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::Argument("mutual_information: length mismatch".into()));
    }
    if xs.len() < 2 {
        return Err(MetricError::Argument(
            "mutual_information: need at least 2 observations".into(),
        ));
    }
    let n = xs.len() as f64;
    let mut joint: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut px: BTreeMap<&str, usize> = BTreeMap::new();
    let mut py: BTreeMap<&str, usize> = BTreeMap::new();
    for (x, y) in xs.iter().zip(ys) {
        *joint.entry((x, y)).or_default() += 1;
        *px.entry(x).or_default() += 1;
        *py.entry(y).or_default() += 1;
    }
    let mut total = 0.0;
    for ((x, y), &c) in &joint {
        let pxy = c as f64 / n;
        let p_x = px[x] as f64 / n;
        let p_y = py[y] as f64 / n;
        total += pxy * (pxy / (p_x * p_y)).log2();
    }
    Ok(total.max(0.0))
}

#[derive(Debug, Clone, Default)]
pub struct CorrelationGap {
    pub frobenius: f64,
    /// Absolute correlation delta per retained pair, keyed "a|b".
    pub pair_deltas: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

fn pairwise_complete(table: &DatasetTable, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &table.rows {
        if let (Some(x), Some(y)) = (row[i].as_number(), row[j].as_number()) {
            xs.push(x);
            ys.push(y);
        }
    }
    (xs, ys)
}

fn correlation_matrix(
    table: &DatasetTable,
    idx: &[usize],
    label: &str,
    warnings: &mut Vec<String>,
) -> Vec<Vec<f64>> {
    let m = idx.len();
    let zero_variance: Vec<bool> = idx
        .iter()
        .map(|&i| {
            let vals = table.numeric_column(i);
            let constant = vals.len() < 2 || vals.iter().all(|&v| v == vals[0]);
            if constant {
                warnings.push(format!(
                    "{label}: column {} has zero variance, correlations zeroed",
                    table.schema.columns[i].name
                ));
            }
            constant
        })
        .collect();
    let mut mat = vec![vec![0.0; m]; m];
    for a in 0..m {
        if !zero_variance[a] {
            mat[a][a] = 1.0;
        }
        for b in (a + 1)..m {
            if zero_variance[a] || zero_variance[b] {
                continue;
            }
            let (xs, ys) = pairwise_complete(table, idx[a], idx[b]);
            let rho = if xs.len() >= 2 {
                pearson(&xs, &ys).unwrap_or(0.0)
            } else {
                0.0
            };
            mat[a][b] = rho;
            mat[b][a] = rho;
        }
    }
    mat
}

/// Frobenius norm of the difference between the full correlation matrices
/// over numeric and binary columns, plus per-pair deltas for the retained
/// pairs.
pub fn correlation_gap(
    real: &DatasetTable,
    syn: &DatasetTable,
    retained: &[(String, String)],
) -> Result<CorrelationGap, MetricError> {
    let idx = real.schema.numeric_like_indices();
    if idx.len() < 2 {
        return Err(MetricError::Undefined(
            "correlation_gap: fewer than 2 numeric columns".into(),
        ));
    }
    let mut warnings = Vec::new();
    let real_mat = correlation_matrix(real, &idx, "real", &mut warnings);
    let syn_mat = correlation_matrix(syn, &idx, "synthetic", &mut warnings);
    let mut sq = 0.0;
    for a in 0..idx.len() {
        for b in 0..idx.len() {
            sq += (real_mat[a][b] - syn_mat[a][b]).powi(2);
        }
    }
    let name_to_pos: BTreeMap<&str, usize> = idx
        .iter()
        .enumerate()
        .map(|(pos, &i)| (real.schema.columns[i].name.as_str(), pos))
        .collect();
    let mut pair_deltas = BTreeMap::new();
    for (a, b) in retained {
        if let (Some(&pa), Some(&pb)) = (name_to_pos.get(a.as_str()), name_to_pos.get(b.as_str())) {
            pair_deltas.insert(
                format!("{a}|{b}"),
                (real_mat[pa][pb] - syn_mat[pa][pb]).abs(),
            );
        }
    }
    Ok(CorrelationGap { frobenius: sq.sqrt(), pair_deltas, warnings })
}

/// One clinically meaningful relationship to compare across datasets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConsistencyCheck {
    /// Difference of the value column's means between group 1 and group 0.
    GroupMeanGap { value: String, group: String },
    /// Ordinary-least-squares slope of y on x.
    SlopeGap { x: String, y: String },
    /// Joint probability of both binary columns being 1.
    CooccurrenceGap { a: String, b: String },
}

pub fn checks_from_json_str(s: &str) -> Result<Vec<ConsistencyCheck>, MetricError> {
    serde_json::from_str(s).map_err(|e| MetricError::Argument(format!("checks: {e}")))
}

impl ConsistencyCheck {
    pub fn describe(&self) -> String {
        match self {
            ConsistencyCheck::GroupMeanGap { value, group } => {
                format!("group_mean_gap({value} by {group})")
            }
            ConsistencyCheck::SlopeGap { x, y } => format!("slope_gap({y} on {x})"),
            ConsistencyCheck::CooccurrenceGap { a, b } => format!("cooccurrence_gap({a}, {b})"),
        }
    }

    /// The check statistic on one table, or None when the table cannot
    /// support it (empty group, degenerate slope).
    fn statistic(&self, table: &DatasetTable) -> Result<Option<f64>, MetricError> {
        let col = |name: &str| {
            table
                .schema
                .column(name)
                .map(|(i, _)| i)
                .ok_or_else(|| MetricError::Argument(format!("check references unknown column '{name}'")))
        };
        match self {
            ConsistencyCheck::GroupMeanGap { value, group } => {
                let vi = col(value)?;
                let gi = col(group)?;
                let mut ones = Vec::new();
                let mut zeros = Vec::new();
                for row in &table.rows {
                    if let (Some(v), Some(g)) = (row[vi].as_number(), row[gi].as_number()) {
                        if g == 1.0 {
                            ones.push(v);
                        } else {
                            zeros.push(v);
                        }
                    }
                }
                if ones.is_empty() || zeros.is_empty() {
                    return Ok(None);
                }
                Ok(Some(mean(&ones) - mean(&zeros)))
            }
            ConsistencyCheck::SlopeGap { x, y } => {
                let xi = col(x)?;
                let yi = col(y)?;
                let (xs, ys) = pairwise_complete(table, xi, yi);
                Ok(ols_slope(&xs, &ys))
            }
            ConsistencyCheck::CooccurrenceGap { a, b } => {
                let ai = col(a)?;
                let bi = col(b)?;
                let mut n = 0usize;
                let mut both = 0usize;
                for row in &table.rows {
                    if let (Some(va), Some(vb)) = (row[ai].as_number(), row[bi].as_number()) {
                        n += 1;
                        if va == 1.0 && vb == 1.0 {
                            both += 1;
                        }
                    }
                }
                if n == 0 {
                    return Ok(None);
                }
                Ok(Some(both as f64 / n as f64))
            }
        }
    }
}

const DEVIATION_GUARD: f64 = 1e-9;

/// Mean relative deviation of the check statistics between real and
/// synthetic data. Checks a table cannot support are skipped with a
/// warning; if every check is skipped the score is undefined.
pub fn clinical_consistency(
    real: &DatasetTable,
    syn: &DatasetTable,
    checks: &[ConsistencyCheck],
) -> Result<(f64, Vec<String>), MetricError> {
    if checks.is_empty() {
        return Err(MetricError::Argument("no consistency checks supplied".into()));
    }
    let mut deviations = Vec::new();
    let mut warnings = Vec::new();
    for check in checks {
        let sr = check.statistic(real)?;
        let ss = check.statistic(syn)?;
        match (sr, ss) {
            (Some(sr), Some(ss)) => {
                deviations.push((sr - ss).abs() / (sr.abs() + DEVIATION_GUARD));
            }
            _ => warnings.push(format!("check {} skipped: unsupported on a dataset", check.describe())),
        }
    }
    if deviations.is_empty() {
        return Err(MetricError::Undefined("all consistency checks skipped".into()));
    }
    Ok((mean(&deviations), warnings))
}

fn token_counts(table: &DatasetTable, idx: usize) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for token in table.token_column(idx) {
        *counts.entry(token).or_insert(0usize) += 1;
    }
    counts
}

fn aligned_pmfs(
    real: &BTreeMap<String, usize>,
    syn: &BTreeMap<String, usize>,
) -> (Vec<f64>, Vec<f64>) {
    let n_real: usize = real.values().sum();
    let n_syn: usize = syn.values().sum();
    let universe: BTreeSet<&String> = real.keys().chain(syn.keys()).collect();
    let mut p = Vec::with_capacity(universe.len());
    let mut q = Vec::with_capacity(universe.len());
    for key in universe {
        p.push(real.get(key).copied().unwrap_or(0) as f64 / n_real as f64);
        q.push(syn.get(key).copied().unwrap_or(0) as f64 / n_syn as f64);
    }
    (p, q)
}

/// Compute the full fidelity metric set for an accepted synthetic table
/// against the real table. `retained` names the correlation pairs tracked
/// individually; `checks` drives the clinical-consistency score.
pub fn evaluate_fidelity(
    real: &DatasetTable,
    syn: &DatasetTable,
    retained: &[(String, String)],
    checks: &[ConsistencyCheck],
    hist: HistogramSpec,
) -> Result<MetricSet, MetricError> {
    let real_names: Vec<&str> = real.schema.columns.iter().map(|c| c.name.as_str()).collect();
    let syn_names: Vec<&str> = syn.schema.columns.iter().map(|c| c.name.as_str()).collect();
    if real_names != syn_names {
        return Err(MetricError::Argument(
            "fidelity: real and synthetic schemas disagree".into(),
        ));
    }

    let mut set = MetricSet::default();
    use Direction::{HigherBetter, LowerBetter};

    for (idx, colschema) in real.schema.columns.iter().enumerate() {
        let col = colschema.name.as_str();
        match colschema.kind {
            ColumnKind::Numeric => {
                let xs = real.numeric_column(idx);
                let ys = syn.numeric_column(idx);
                if xs.is_empty() || ys.is_empty() {
                    set.warnings.push(format!("column {col} skipped: no numeric values"));
                    continue;
                }
                set.column("wasserstein", col, wasserstein_1d(&xs, &ys)?, LowerBetter);
                set.column("ks", col, ks_statistic(&xs, &ys)?, LowerBetter);
                match ad_ksample(&xs, &ys) {
                    Ok(v) => set.column("anderson_darling", col, v, LowerBetter),
                    Err(e) => set.warnings.push(format!("column {col}: {e}")),
                }
                let (p, q) = hist.pooled_pmfs(&xs, &ys);
                set.column("jsd", col, jsd(&p, &q)?, LowerBetter);
                set.column("kl", col, kl_divergence(&p, &q)?, LowerBetter);
                set.column("entropy_diff", col, entropy_difference(&p, &q)?, LowerBetter);
                match range_coverage(&xs, &ys) {
                    Ok((coverage, overflow)) => {
                        set.column("range_coverage", col, coverage, HigherBetter);
                        set.column("range_overflow", col, overflow, LowerBetter);
                    }
                    Err(e) => set.warnings.push(format!("column {col}: {e}")),
                }
            }
            ColumnKind::Categorical | ColumnKind::Binary => {
                let real_counts = token_counts(real, idx);
                let syn_counts = token_counts(syn, idx);
                if real_counts.is_empty() || syn_counts.is_empty() {
                    set.warnings.push(format!("column {col} skipped: no values"));
                    continue;
                }
                let (p, q) = aligned_pmfs(&real_counts, &syn_counts);
                set.column("jsd", col, jsd(&p, &q)?, LowerBetter);
                set.column("kl", col, kl_divergence(&p, &q)?, LowerBetter);
                set.column("entropy_diff", col, entropy_difference(&p, &q)?, LowerBetter);
                match chi_square(&real_counts, &syn_counts) {
                    Ok((stat, pval)) => {
                        set.column("chi2_stat", col, stat, LowerBetter);
                        set.column("chi2_p", col, pval, HigherBetter);
                    }
                    Err(e) => set.warnings.push(format!("column {col}: {e}")),
                }
                let real_set: BTreeSet<String> = real_counts.keys().cloned().collect();
                let syn_set: BTreeSet<String> = syn_counts.keys().cloned().collect();
                let (preserved, hallucinated) = category_preservation(&real_set, &syn_set)?;
                set.column("category_preservation", col, preserved, HigherBetter);
                set.summaries
                    .insert(format!("hallucinated_categories:{col}"), hallucinated as f64);
            }
        }
    }

    match correlation_gap(real, syn, retained) {
        Ok(gap) => {
            set.insert(MetricValue {
                name: "correlation_gap".into(),
                value: gap.frobenius,
                direction: LowerBetter,
                scope: MetricScope::Dataset,
            });
            for (pair, delta) in gap.pair_deltas {
                let (a, b) = pair.split_once('|').unwrap();
                set.insert(MetricValue {
                    name: "corr_delta".into(),
                    value: delta,
                    direction: LowerBetter,
                    scope: MetricScope::Pair { a: a.into(), b: b.into() },
                });
            }
            set.warnings.extend(gap.warnings);
        }
        Err(e) => set.warnings.push(e.to_string()),
    }

    if !checks.is_empty() {
        match clinical_consistency(real, syn, checks) {
            Ok((score, warnings)) => {
                set.insert(MetricValue {
                    name: "clinical_consistency".into(),
                    value: score,
                    direction: LowerBetter,
                    scope: MetricScope::Dataset,
                });
                set.warnings.extend(warnings);
            }
            Err(e) => set.warnings.push(e.to_string()),
        }
    }

    let discrete: Vec<usize> = real
        .schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.kind, ColumnKind::Categorical | ColumnKind::Binary))
        .map(|(i, _)| i)
        .collect();
    for (pos, &i) in discrete.iter().enumerate() {
        for &j in discrete.iter().skip(pos + 1) {
            let a = real.schema.columns[i].name.as_str();
            let b = real.schema.columns[j].name.as_str();
            let pair_tokens = |t: &DatasetTable| {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for row in &t.rows {
                    if let (Some(x), Some(y)) = (row[i].token(), row[j].token()) {
                        xs.push(x);
                        ys.push(y);
                    }
                }
                (xs, ys)
            };
            let (rx, ry) = pair_tokens(real);
            let (sx, sy) = pair_tokens(syn);
            match (mutual_information(&rx, &ry), mutual_information(&sx, &sy)) {
                (Ok(mi_real), Ok(mi_syn)) => {
                    set.insert(MetricValue {
                        name: "mi_delta".into(),
                        value: (mi_real - mi_syn).abs(),
                        direction: LowerBetter,
                        scope: MetricScope::Pair { a: a.into(), b: b.into() },
                    });
                    set.summaries.insert(format!("mi_real:{a}|{b}"), mi_real);
                    set.summaries.insert(format!("mi_syn:{a}|{b}"), mi_syn);
                }
                _ => set
                    .warnings
                    .push(format!("mutual information skipped for {a}|{b}: too few rows")),
            }
        }
    }

    let chi_stats: Vec<f64> = set
        .entries
        .values()
        .filter(|m| m.name == "chi2_stat")
        .map(|m| m.value)
        .collect();
    if !chi_stats.is_empty() {
        set.summaries.insert("chi2_stat_mean".into(), mean(&chi_stats));
    }

    Ok(set)
}
