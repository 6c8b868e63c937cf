//! Brute-force transcriptions of every fidelity and privacy metric,
//! written independently of the library implementations. Agreement between
//! the two routes is evidence of correctness rather than shared code: the
//! library favors sorted-array and factorization tricks, the oracle favors
//! direct counting loops, quantile integrals, closed-form gamma values,
//! and Gauss-Jordan elimination.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use syntab_core::fidelity::ConsistencyCheck;
use syntab_core::privacy::PrivacyConfig;
use syntab_core::table::{Cell, ColumnKind, ColumnSchema, DatasetTable, TableSchema};

const LN2: f64 = std::f64::consts::LN_2;

/// Schema shared by every generated pair: two numerics (one continuous,
/// one on an integer grid), two binaries, one categorical; the grid
/// numeric and the categorical are flagged as quasi-identifiers.
fn small_schema() -> TableSchema {
    let col = |name: &str, kind: ColumnKind, qi: bool| ColumnSchema {
        name: name.into(),
        kind,
        bounds: None,
        categories: None,
        description: String::new(),
        quasi_identifier: qi,
    };
    TableSchema {
        columns: vec![
            col("a", ColumnKind::Numeric, false),
            col("b", ColumnKind::Numeric, true),
            col("flag", ColumnKind::Binary, false),
            col("flag2", ColumnKind::Binary, false),
            col("color", ColumnKind::Categorical, true),
        ],
        label_column: None,
        task: None,
    }
}

fn draw_rows(rng: &mut ChaCha8Rng, n: usize, copy_from: Option<&[Vec<Cell>]>) -> Vec<Vec<Cell>> {
    const COLORS: [&str; 3] = ["red", "green", "blue"];
    let mut rows: Vec<Vec<Cell>> = Vec::with_capacity(n);
    for i in 0..n {
        if let Some(base) = copy_from {
            if rng.gen_bool(0.2) {
                rows.push(base[rng.gen_range(0..base.len())].clone());
                continue;
            }
        }
        let a = rng.gen_range(-10.0..10.0);
        let b = rng.gen_range(0..7) as f64;
        let flag = if i == 0 {
            0.0
        } else if i == 1 {
            1.0
        } else {
            rng.gen_range(0..2) as f64
        };
        let flag2 = if i == 0 {
            1.0
        } else if i == 1 {
            0.0
        } else {
            rng.gen_range(0..2) as f64
        };
        let color = COLORS[rng.gen_range(0..3)];
        rows.push(vec![
            Cell::Number(a),
            Cell::Number(b),
            Cell::Number(flag),
            Cell::Number(flag2),
            Cell::Text(color.into()),
        ]);
    }
    // A constant grid column would make the covariance nearly singular and
    // turn the comparison into a numerical-conditioning exercise.
    let first = rows[0][1].as_number().unwrap();
    if rows.iter().all(|r| r[1].as_number() == Some(first)) {
        rows[1][1] = Cell::Number((first + 1.0) % 7.0);
    }
    rows
}

/// One seeded pair of complete equal-length tables plus the retained
/// correlation pairs and consistency checks to evaluate them with.
pub fn paired_tables(
    case: u64,
) -> (
    DatasetTable,
    DatasetTable,
    Vec<(String, String)>,
    Vec<ConsistencyCheck>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE ^ case.wrapping_mul(0x9E37_79B9));
    let n = 7 + rng.gen_range(0..10usize);
    let schema = small_schema();
    let real_rows = draw_rows(&mut rng, n, None);
    let syn_rows = draw_rows(&mut rng, n, Some(&real_rows));
    let real = DatasetTable::new(schema.clone(), real_rows).unwrap();
    let syn = DatasetTable::new(schema, syn_rows).unwrap();
    let retained = vec![
        ("a".to_string(), "b".to_string()),
        ("a".to_string(), "flag".to_string()),
    ];
    let checks = vec![
        ConsistencyCheck::GroupMeanGap { value: "a".into(), group: "flag".into() },
        ConsistencyCheck::SlopeGap { x: "a".into(), y: "b".into() },
        ConsistencyCheck::CooccurrenceGap { a: "flag".into(), b: "flag2".into() },
    ];
    (real, syn, retained, checks)
}

/// 1-Wasserstein distance via the quantile-function integral
/// int_0^1 |F^-1(u) - G^-1(u)| du, stepped at the 1/(n*m) resolution where
/// both empirical quantile functions are piecewise constant.
pub fn wasserstein(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let steps = a.len() * b.len();
    let mut total = 0.0;
    for t in 0..steps {
        let u = (t as f64 + 0.5) / steps as f64;
        let qa = a[((u * a.len() as f64) as usize).min(a.len() - 1)];
        let qb = b[((u * b.len() as f64) as usize).min(b.len() - 1)];
        total += (qa - qb).abs();
    }
    total / steps as f64
}

pub fn ks(xs: &[f64], ys: &[f64]) -> f64 {
    let cdf = |s: &[f64], v: f64| s.iter().filter(|&&x| x <= v).count() as f64 / s.len() as f64;
    let mut sup = 0.0f64;
    for &v in xs.iter().chain(ys) {
        sup = sup.max((cdf(xs, v) - cdf(ys, v)).abs());
    }
    sup
}

/// Standardized two-sample Anderson-Darling statistic, transcribed from
/// the Scholz-Stephens midrank definition with direct counting loops.
pub fn anderson_darling(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || ys.len() < 2 {
        return None;
    }
    let mut pooled: Vec<f64> = xs.iter().chain(ys).cloned().collect();
    pooled.sort_by(f64::total_cmp);
    let mut distinct = pooled.clone();
    distinct.dedup();
    if distinct.len() < 2 {
        return None;
    }
    let n_total = pooled.len();
    let nf = n_total as f64;
    let k = 2.0f64;
    let count_lt = |s: &[f64], v: f64| s.iter().filter(|&&x| x < v).count() as f64;
    let count_eq = |s: &[f64], v: f64| s.iter().filter(|&&x| x == v).count() as f64;

    let mut a2 = 0.0;
    for sample in [xs, ys] {
        let ni = sample.len() as f64;
        let mut inner = 0.0;
        for &z in &distinct {
            let lj = count_eq(&pooled, z);
            let bj = count_lt(&pooled, z) + lj / 2.0;
            let maij = count_lt(sample, z) + count_eq(sample, z) / 2.0;
            let denom = bj * (nf - bj) - nf * lj / 4.0;
            inner += (lj / nf) * (nf * maij - ni * bj).powi(2) / denom;
        }
        a2 += inner / ni;
    }
    a2 *= (nf - 1.0) / nf;

    let h_cap = 1.0 / xs.len() as f64 + 1.0 / ys.len() as f64;
    let h_small: f64 = (1..n_total).map(|i| 1.0 / i as f64).sum();
    let mut g_small = 0.0;
    for i in 1..(n_total - 1) {
        for j in (i + 1)..n_total {
            g_small += 1.0 / (((n_total - i) * j) as f64);
        }
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
    let sigma_sq =
        (a * nf.powi(3) + b * nf.powi(2) + c * nf + d) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    Some((a2 - (k - 1.0)) / sigma_sq.sqrt())
}

pub fn histogram_pmfs(xs: &[f64], ys: &[f64], bin_count: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = xs.iter().chain(ys).cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().chain(ys).cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return (vec![1.0], vec![1.0]);
    }
    let bins = bin_count.max(2);
    let width = (hi - lo) / bins as f64;
    let pmf = |s: &[f64]| {
        let mut mass = vec![0.0f64; bins];
        for &v in s {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            mass[idx] += 1.0;
        }
        for m in &mut mass {
            *m /= s.len() as f64;
        }
        mass
    };
    (pmf(xs), pmf(ys))
}

pub fn jsd_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = (pi + qi) / 2.0;
        if pi > 0.0 {
            total += 0.5 * pi * (pi / m).ln() / LN2;
        }
        if qi > 0.0 {
            total += 0.5 * qi * (qi / m).ln() / LN2;
        }
    }
    total.clamp(0.0, 1.0)
}

pub fn kl_bits_smoothed(p: &[f64], q: &[f64]) -> f64 {
    const EPS: f64 = 1e-6;
    let norm: f64 = q.iter().map(|&v| v + EPS).sum();
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            total += pi * (pi * norm / (qi + EPS)).ln() / LN2;
        }
    }
    total.max(0.0)
}

fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln() / LN2)
        .sum()
}

pub fn entropy_diff(p: &[f64], q: &[f64]) -> f64 {
    (entropy(p) - entropy(q)).abs()
}

pub fn range_metrics(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let min_r = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_r = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max_r > min_r) {
        return None;
    }
    let min_s = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_s = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let coverage = (max_s.min(max_r) - min_s.max(min_r)).max(0.0) / (max_r - min_r);
    let overflow =
        ys.iter().filter(|&&v| v < min_r || v > max_r).count() as f64 / ys.len() as f64;
    Some((coverage, overflow))
}

/// Gamma(dof/2) in closed form: factorials for even dof, the half-integer
/// product times sqrt(pi) for odd dof.
fn exact_gamma_half(dof: usize) -> f64 {
    if dof % 2 == 0 {
        (1..dof / 2).map(|i| i as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        for i in 1..=(dof / 2) {
            g *= i as f64 - 0.5;
        }
        g
    }
}

/// Chi-square survival function via the lower-gamma power series and the
/// exact gamma value, rather than a continued fraction.
pub fn chi2_sf(stat: f64, dof: usize) -> f64 {
    let a = dof as f64 / 2.0;
    let t = stat / 2.0;
    if t <= 0.0 {
        return 1.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = 0.0;
    while term > sum * 1e-17 && k < 10_000.0 {
        k += 1.0;
        term *= t / (a + k);
        sum += term;
    }
    let p_low = t.powf(a) * (-t).exp() * sum / exact_gamma_half(dof);
    (1.0 - p_low).clamp(0.0, 1.0)
}

pub fn chi_square(
    real_counts: &BTreeMap<String, usize>,
    syn_counts: &BTreeMap<String, usize>,
) -> Option<(f64, f64)> {
    let n_real: usize = real_counts.values().sum();
    let n_syn: usize = syn_counts.values().sum();
    if n_real == 0 || n_syn == 0 {
        return None;
    }
    let mut keys: Vec<&String> = real_counts.keys().chain(syn_counts.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut expected = Vec::new();
    let mut observed = Vec::new();
    let mut remainder = 0.0;
    for key in keys {
        let r = real_counts.get(key).copied().unwrap_or(0);
        let s = syn_counts.get(key).copied().unwrap_or(0);
        if r == 0 {
            remainder += s as f64;
        } else {
            expected.push(r as f64 / n_real as f64 * n_syn as f64);
            observed.push(s as f64);
        }
    }
    if remainder > 0.0 {
        let mut smallest = 0usize;
        for (i, &e) in expected.iter().enumerate() {
            if e < expected[smallest] {
                smallest = i;
            }
        }
        if expected.is_empty() {
            return None;
        }
        observed[smallest] += remainder;
    }
    if expected.len() < 2 {
        return None;
    }
    let stat: f64 = expected
        .iter()
        .zip(&observed)
        .map(|(e, o)| (o - e) * (o - e) / e)
        .sum();
    Some((stat, chi2_sf(stat, expected.len() - 1)))
}

pub fn category_preservation(real_tokens: &[String], syn_tokens: &[String]) -> f64 {
    let mut real_set: Vec<&String> = real_tokens.iter().collect();
    real_set.sort();
    real_set.dedup();
    let kept = real_set
        .iter()
        .filter(|t| syn_tokens.contains(t))
        .count();
    kept as f64 / real_set.len() as f64
}

/// Pearson correlation via the computational formula; 0 for degenerate
/// input, mirroring how absent correlations are treated.
fn pearson0(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() < 2 || xs.iter().all(|&v| v == xs[0]) || ys.iter().all(|&v| v == ys[0]) {
        return 0.0;
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|v| v * v).sum();
    let syy: f64 = ys.iter().map(|v| v * v).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    if den == 0.0 {
        return 0.0;
    }
    (n * sxy - sx * sy) / den
}

fn complete_pair(table: &DatasetTable, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
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

fn corr_matrix(table: &DatasetTable, idx: &[usize]) -> Vec<Vec<f64>> {
    let m = idx.len();
    let degenerate: Vec<bool> = idx
        .iter()
        .map(|&i| {
            let vals = table.numeric_column(i);
            vals.len() < 2 || vals.iter().all(|&v| v == vals[0])
        })
        .collect();
    let mut mat = vec![vec![0.0; m]; m];
    for p in 0..m {
        if !degenerate[p] {
            mat[p][p] = 1.0;
        }
        for q in (p + 1)..m {
            if degenerate[p] || degenerate[q] {
                continue;
            }
            let (xs, ys) = complete_pair(table, idx[p], idx[q]);
            let rho = if xs.len() >= 2 { pearson0(&xs, &ys) } else { 0.0 };
            mat[p][q] = rho;
            mat[q][p] = rho;
        }
    }
    mat
}

fn check_statistic(check: &ConsistencyCheck, table: &DatasetTable) -> Option<f64> {
    let col = |name: &str| table.schema.column(name).map(|(i, _)| i).unwrap();
    match check {
        ConsistencyCheck::GroupMeanGap { value, group } => {
            let (vi, gi) = (col(value), col(group));
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
                return None;
            }
            let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            Some(avg(&ones) - avg(&zeros))
        }
        ConsistencyCheck::SlopeGap { x, y } => {
            let (xs, ys) = complete_pair(table, col(x), col(y));
            if xs.len() < 2 || xs.iter().all(|&v| v == xs[0]) {
                return None;
            }
            let n = xs.len() as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxx: f64 = xs.iter().map(|v| v * v).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
            Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
        }
        ConsistencyCheck::CooccurrenceGap { a, b } => {
            let (ai, bi) = (col(a), col(b));
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
                return None;
            }
            Some(both as f64 / n as f64)
        }
    }
}

pub fn clinical_consistency(
    real: &DatasetTable,
    syn: &DatasetTable,
    checks: &[ConsistencyCheck],
) -> Option<f64> {
    let mut deviations = Vec::new();
    for check in checks {
        if let (Some(sr), Some(ss)) = (check_statistic(check, real), check_statistic(check, syn)) {
            deviations.push((sr - ss).abs() / (sr.abs() + 1e-9));
        }
    }
    if deviations.is_empty() {
        return None;
    }
    Some(deviations.iter().sum::<f64>() / deviations.len() as f64)
}

/// Mutual information in bits via the entropy identity
/// I(X;Y) = H(X) + H(Y) - H(X,Y).
pub fn mutual_information(xs: &[String], ys: &[String]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let dist_entropy = |keys: Vec<String>| {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for k in keys {
            *counts.entry(k).or_default() += 1;
        }
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln() / LN2
            })
            .sum::<f64>()
    };
    let hx = dist_entropy(xs.to_vec());
    let hy = dist_entropy(ys.to_vec());
    let hxy = dist_entropy(
        xs.iter()
            .zip(ys)
            .map(|(x, y)| format!("{x}\u{1f}{y}"))
            .collect(),
    );
    Some((hx + hy - hxy).max(0.0))
}

fn cells_equal(a: &Cell, b: &Cell) -> bool {
    match (a, b) {
        (Cell::Number(x), Cell::Number(y)) => x.to_bits() == y.to_bits(),
        (Cell::Text(s), Cell::Text(t)) => s == t,
        (Cell::Missing, Cell::Missing) => true,
        _ => false,
    }
}

pub fn identifiability(real: &DatasetTable, syn: &DatasetTable) -> f64 {
    let duplicates = syn
        .rows
        .iter()
        .filter(|srow| {
            real.rows
                .iter()
                .any(|rrow| srow.iter().zip(rrow.iter()).all(|(a, b)| cells_equal(a, b)))
        })
        .count();
    duplicates as f64 / syn.rows.len() as f64
}

/// Mixed-type row encoding for distance metrics: numeric-like columns with
/// spread are z-scored by real-data statistics, everything else compares
/// by token equality.
enum Enc {
    Num(f64),
    Tok(String),
}

fn encode_tables(real: &DatasetTable, syn: &DatasetTable) -> (Vec<Vec<Enc>>, Vec<Vec<Enc>>) {
    let cols = &real.schema.columns;
    let mut scale: Vec<Option<(f64, f64)>> = Vec::new();
    for (i, col) in cols.iter().enumerate() {
        scale.push(match col.kind {
            ColumnKind::Numeric | ColumnKind::Binary => {
                let vals = real.numeric_column(i);
                if vals.len() >= 2 {
                    let m = vals.iter().sum::<f64>() / vals.len() as f64;
                    let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
                    let sd = (ss / (vals.len() - 1) as f64).sqrt();
                    if sd > 0.0 {
                        Some((m, sd))
                    } else {
                        None
                    }
                } else {
                    None
                }
            }
            ColumnKind::Categorical => None,
        });
    }
    let encode = |table: &DatasetTable| {
        table
            .rows
            .iter()
            .filter_map(|row| {
                let mut out = Vec::with_capacity(row.len());
                for (cell, sc) in row.iter().zip(&scale) {
                    if cell.is_missing() {
                        return None;
                    }
                    match sc {
                        Some((m, sd)) => out.push(Enc::Num((cell.as_number()? - m) / sd)),
                        None => out.push(Enc::Tok(cell.token()?)),
                    }
                }
                Some(out)
            })
            .collect::<Vec<Vec<Enc>>>()
    };
    (encode(real), encode(syn))
}

fn enc_distance(a: &[Enc], b: &[Enc]) -> f64 {
    let mut sq = 0.0;
    for (fa, fb) in a.iter().zip(b) {
        sq += match (fa, fb) {
            (Enc::Num(x), Enc::Num(y)) => (x - y) * (x - y),
            (Enc::Tok(s), Enc::Tok(t)) => {
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

fn nearest(point: &[Enc], pool: &[Vec<Enc>], skip: Option<usize>) -> f64 {
    let mut best = f64::INFINITY;
    for (j, other) in pool.iter().enumerate() {
        if skip == Some(j) {
            continue;
        }
        let d = enc_distance(point, other);
        if d < best {
            best = d;
        }
    }
    best
}

pub fn nn_distance_ratio(real: &DatasetTable, syn: &DatasetTable) -> Option<f64> {
    let (real_rows, syn_rows) = encode_tables(real, syn);
    if real_rows.len() < 2 || syn_rows.is_empty() {
        return None;
    }
    let num: f64 = syn_rows
        .iter()
        .map(|s| nearest(s, &real_rows, None))
        .sum::<f64>()
        / syn_rows.len() as f64;
    let den: f64 = real_rows
        .iter()
        .enumerate()
        .map(|(i, r)| nearest(r, &real_rows, Some(i)))
        .sum::<f64>()
        / real_rows.len() as f64;
    if den == 0.0 {
        return None;
    }
    Some(num / den)
}

/// Adversarial accuracy without subsampling; the generated pairs always
/// have equal complete-row counts so the library takes the same path.
pub fn nnaa(real: &DatasetTable, syn: &DatasetTable) -> Option<f64> {
    let (real_rows, syn_rows) = encode_tables(real, syn);
    if real_rows.len() < 2 || syn_rows.len() < 2 {
        return None;
    }
    assert_eq!(
        real_rows.len(),
        syn_rows.len(),
        "oracle nnaa assumes equal complete-row counts"
    );
    let share = |own: &[Vec<Enc>], cross: &[Vec<Enc>]| {
        let mut wins = 0usize;
        for (i, row) in own.iter().enumerate() {
            if nearest(row, own, Some(i)) < nearest(row, cross, None) {
                wins += 1;
            }
        }
        wins as f64 / own.len() as f64
    };
    Some((share(&real_rows, &syn_rows) + share(&syn_rows, &real_rows)) / 2.0)
}

pub fn k_anonymity_violation_rate(
    real: &DatasetTable,
    syn: &DatasetTable,
    cfg: &PrivacyConfig,
) -> Option<f64> {
    let qi_cols: Vec<usize> = real
        .schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.quasi_identifier)
        .map(|(i, _)| i)
        .collect();
    if qi_cols.is_empty() || real.rows.is_empty() || syn.rows.is_empty() {
        return None;
    }
    let ranges: Vec<(f64, f64)> = qi_cols
        .iter()
        .map(|&i| {
            if real.schema.columns[i].kind == ColumnKind::Numeric {
                let vals = real.numeric_column(i);
                (
                    vals.iter().cloned().fold(f64::INFINITY, f64::min),
                    vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                )
            } else {
                (0.0, 0.0)
            }
        })
        .collect();
    let signature = |row: &[Cell]| {
        let mut sig: Vec<String> = Vec::new();
        for (pos, &i) in qi_cols.iter().enumerate() {
            let (lo, hi) = ranges[pos];
            if real.schema.columns[i].kind == ColumnKind::Numeric {
                match row[i].as_number() {
                    Some(v) if hi > lo => {
                        let b = (((v - lo) / (hi - lo) * cfg.quasi_bins as f64) as isize)
                            .clamp(0, cfg.quasi_bins as isize - 1);
                        sig.push(b.to_string());
                    }
                    Some(_) => sig.push("0".into()),
                    None => sig.push("m".into()),
                }
            } else {
                sig.push(row[i].token().unwrap_or_else(|| "m".into()));
            }
        }
        sig
    };
    let mut classes: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for row in &real.rows {
        *classes.entry(signature(row)).or_default() += 1;
    }
    let violations = syn
        .rows
        .iter()
        .filter(|row| classes.get(&signature(row)).copied().unwrap_or(0) < cfg.k_anon)
        .count();
    Some(violations as f64 / syn.rows.len() as f64)
}

fn gauss_jordan_inverse(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = a[col][col];
        for j in 0..n {
            a[col][j] /= scale;
            inv[col][j] /= scale;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[row][j] -= factor * a[col][j];
                inv[row][j] -= factor * inv[col][j];
            }
        }
    }
    Some(inv)
}

pub fn mahalanobis_mean(
    real: &DatasetTable,
    syn: &DatasetTable,
    cfg: &PrivacyConfig,
) -> Option<f64> {
    let idx: Vec<usize> = real
        .schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.kind, ColumnKind::Numeric | ColumnKind::Binary))
        .map(|(i, _)| i)
        .collect();
    let dims = idx.len();
    if dims < 2 {
        return None;
    }
    let complete = |t: &DatasetTable| {
        t.rows
            .iter()
            .filter_map(|row| idx.iter().map(|&i| row[i].as_number()).collect::<Option<Vec<f64>>>())
            .collect::<Vec<Vec<f64>>>()
    };
    let x = complete(real);
    if x.len() <= dims {
        return None;
    }
    let n = x.len() as f64;
    let mu: Vec<f64> = (0..dims).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; dims]; dims];
    for row in &x {
        for p in 0..dims {
            for q in 0..dims {
                cov[p][q] += (row[p] - mu[p]) * (row[q] - mu[q]);
            }
        }
    }
    for p in 0..dims {
        for q in 0..dims {
            cov[p][q] /= n - 1.0;
        }
        cov[p][p] += cfg.eps_cov;
    }
    let inv = gauss_jordan_inverse(cov)?;
    let srows = complete(syn);
    if srows.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for row in &srows {
        let z: Vec<f64> = row.iter().zip(&mu).map(|(v, m)| v - m).collect();
        let mut quad = 0.0;
        for p in 0..dims {
            for q in 0..dims {
                quad += z[p] * inv[p][q] * z[q];
            }
        }
        total += quad.max(0.0).sqrt();
    }
    Some(total / srows.len() as f64)
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
    let mut keys: Vec<&String> = real.keys().chain(syn.keys()).collect();
    keys.sort();
    keys.dedup();
    let p = keys
        .iter()
        .map(|k| real.get(*k).copied().unwrap_or(0) as f64 / n_real as f64)
        .collect();
    let q = keys
        .iter()
        .map(|k| syn.get(*k).copied().unwrap_or(0) as f64 / n_syn as f64)
        .collect();
    (p, q)
}

/// Every metric the library should emit for this pair, keyed exactly as
/// the library keys them. Metrics whose preconditions fail are absent,
/// mirroring the library's warn-and-skip behavior.
pub fn expected_metrics(
    real: &DatasetTable,
    syn: &DatasetTable,
    retained: &[(String, String)],
    checks: &[ConsistencyCheck],
    cfg: &PrivacyConfig,
    bin_count: usize,
) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();

    for (idx, colschema) in real.schema.columns.iter().enumerate() {
        let col = colschema.name.as_str();
        match colschema.kind {
            ColumnKind::Numeric => {
                let xs = real.numeric_column(idx);
                let ys = syn.numeric_column(idx);
                if xs.is_empty() || ys.is_empty() {
                    continue;
                }
                out.insert(format!("wasserstein:{col}"), wasserstein(&xs, &ys));
                out.insert(format!("ks:{col}"), ks(&xs, &ys));
                if let Some(v) = anderson_darling(&xs, &ys) {
                    out.insert(format!("anderson_darling:{col}"), v);
                }
                let (p, q) = histogram_pmfs(&xs, &ys, bin_count);
                out.insert(format!("jsd:{col}"), jsd_bits(&p, &q));
                out.insert(format!("kl:{col}"), kl_bits_smoothed(&p, &q));
                out.insert(format!("entropy_diff:{col}"), entropy_diff(&p, &q));
                if let Some((coverage, overflow)) = range_metrics(&xs, &ys) {
                    out.insert(format!("range_coverage:{col}"), coverage);
                    out.insert(format!("range_overflow:{col}"), overflow);
                }
            }
            ColumnKind::Categorical | ColumnKind::Binary => {
                let rc = token_counts(real, idx);
                let sc = token_counts(syn, idx);
                if rc.is_empty() || sc.is_empty() {
                    continue;
                }
                let (p, q) = aligned_pmfs(&rc, &sc);
                out.insert(format!("jsd:{col}"), jsd_bits(&p, &q));
                out.insert(format!("kl:{col}"), kl_bits_smoothed(&p, &q));
                out.insert(format!("entropy_diff:{col}"), entropy_diff(&p, &q));
                if let Some((stat, pval)) = chi_square(&rc, &sc) {
                    out.insert(format!("chi2_stat:{col}"), stat);
                    out.insert(format!("chi2_p:{col}"), pval);
                }
                let real_tokens = real.token_column(idx);
                let syn_tokens = syn.token_column(idx);
                out.insert(
                    format!("category_preservation:{col}"),
                    category_preservation(&real_tokens, &syn_tokens),
                );
            }
        }
    }

    let numeric_like: Vec<usize> = real
        .schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.kind, ColumnKind::Numeric | ColumnKind::Binary))
        .map(|(i, _)| i)
        .collect();
    if numeric_like.len() >= 2 {
        let rm = corr_matrix(real, &numeric_like);
        let sm = corr_matrix(syn, &numeric_like);
        let mut sq = 0.0;
        for p in 0..numeric_like.len() {
            for q in 0..numeric_like.len() {
                sq += (rm[p][q] - sm[p][q]) * (rm[p][q] - sm[p][q]);
            }
        }
        out.insert("correlation_gap".into(), sq.sqrt());
        for (a, b) in retained {
            let pa = numeric_like
                .iter()
                .position(|&i| real.schema.columns[i].name == *a);
            let pb = numeric_like
                .iter()
                .position(|&i| real.schema.columns[i].name == *b);
            if let (Some(pa), Some(pb)) = (pa, pb) {
                out.insert(format!("corr_delta:{a}|{b}"), (rm[pa][pb] - sm[pa][pb]).abs());
            }
        }
    }

    if !checks.is_empty() {
        if let Some(score) = clinical_consistency(real, syn, checks) {
            out.insert("clinical_consistency".into(), score);
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
            let tokens = |t: &DatasetTable| {
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
            let (rx, ry) = tokens(real);
            let (sx, sy) = tokens(syn);
            if let (Some(mr), Some(ms)) =
                (mutual_information(&rx, &ry), mutual_information(&sx, &sy))
            {
                out.insert(format!("mi_delta:{a}|{b}"), (mr - ms).abs());
            }
        }
    }

    if let Some(v) = nn_distance_ratio(real, syn) {
        out.insert("nn_distance_ratio".into(), v);
    }
    out.insert("identifiability".into(), identifiability(real, syn));
    if let Some(v) = k_anonymity_violation_rate(real, syn, cfg) {
        out.insert("k_anonymity_violation_rate".into(), v);
    }
    if let Some(v) = mahalanobis_mean(real, syn, cfg) {
        out.insert("mahalanobis_mean".into(), v);
    }
    if let Some(v) = nnaa(real, syn) {
        out.insert("nnaa_gap".into(), (v - 0.5).abs());
    }

    out
}

/// AUC by explicit concordant-pair counting with half credit for ties.
pub fn concordant_auc(scores: &[f64], truth: &[f64]) -> Option<f64> {
    let pos: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t >= 0.5)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t < 0.5)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut credit = 0.0f64;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                credit += 1.0;
            } else if p == n {
                credit += 0.5;
            }
        }
    }
    Some(credit / (pos.len() as f64 * neg.len() as f64))
}
