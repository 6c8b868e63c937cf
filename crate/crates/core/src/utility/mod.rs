//! Downstream-task utility scoring. Encodes tables into dense feature
//! matrices, trains three seeded classifiers (single tree, bagged
//! forest, gradient boosting), and compares train-on-synthetic
//! test-on-real performance against train-on-real baselines in both
//! directions. Metrics are accuracy, macro-averaged F1, and rank-based
//! AUC, averaged over three derived-seed runs.

mod tree;

pub use tree::{Boosting, Forest, Tree};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::derive_seed;
use crate::table::{Cell, ColumnKind, DatasetTable};

#[derive(Debug, Error)]
pub enum UtilityError {
    #[error("schema does not define a label column")]
    MissingLabel,
    #[error("training label has a single class")]
    DegenerateLabel,
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree,
    RandomForest,
    BoostedTrees,
}

pub const ALL_CLASSIFIERS: [ClassifierKind; 3] = [
    ClassifierKind::DecisionTree,
    ClassifierKind::RandomForest,
    ClassifierKind::BoostedTrees,
];

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::BoostedTrees => "boosted_trees",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
enum EncodedColumn {
    /// Min-max scaled from training-side statistics; a constant column
    /// maps to zero.
    Numeric { index: usize, min: f64, max: f64 },
    /// One-hot over the sorted training vocabulary; unseen categories
    /// encode as all zeros.
    OneHot { index: usize, vocabulary: Vec<String> },
}

/// Feature layout fitted on a training table and reused verbatim on the
/// evaluation side. Rows containing any missing cell are dropped.
#[derive(Debug, Clone)]
pub struct FeatureEncoder {
    columns: Vec<EncodedColumn>,
    label_index: usize,
    pub feature_names: Vec<String>,
    schema_names: Vec<String>,
}

impl FeatureEncoder {
    pub fn fit(train: &DatasetTable) -> Result<Self, UtilityError> {
        let label_name = train
            .schema
            .label_column
            .as_deref()
            .ok_or(UtilityError::MissingLabel)?;
        let label_index = train
            .schema
            .columns
            .iter()
            .position(|c| c.name == label_name)
            .ok_or(UtilityError::MissingLabel)?;

        let mut columns = Vec::new();
        let mut feature_names = Vec::new();
        for (index, col) in train.schema.columns.iter().enumerate() {
            if index == label_index {
                continue;
            }
            match col.kind {
                ColumnKind::Numeric | ColumnKind::Binary => {
                    let values = train.numeric_column(index);
                    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let (min, max) = if values.is_empty() { (0.0, 0.0) } else { (min, max) };
                    feature_names.push(col.name.clone());
                    columns.push(EncodedColumn::Numeric { index, min, max });
                }
                ColumnKind::Categorical => {
                    let mut vocabulary: Vec<String> = train
                        .token_column(index)
                        .into_iter()
                        .collect::<std::collections::BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    vocabulary.sort();
                    for token in &vocabulary {
                        feature_names.push(format!("{}={}", col.name, token));
                    }
                    columns.push(EncodedColumn::OneHot { index, vocabulary });
                }
            }
        }
        Ok(FeatureEncoder {
            columns,
            label_index,
            feature_names,
            schema_names: train.schema.columns.iter().map(|c| c.name.clone()).collect(),
        })
    }

    /// Encodes a table into (features, labels), skipping rows with any
    /// missing cell.
    pub fn transform(
        &self,
        table: &DatasetTable,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>), UtilityError> {
        let names: Vec<String> = table.schema.columns.iter().map(|c| c.name.clone()).collect();
        if names != self.schema_names {
            return Err(UtilityError::Argument(
                "table schema does not match the fitted encoder".into(),
            ));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        'rows: for row in &table.rows {
            if row.iter().any(Cell::is_missing) {
                continue;
            }
            let label = match row[self.label_index].as_number() {
                Some(v) => v,
                None => continue 'rows,
            };
            let mut features = Vec::with_capacity(self.feature_names.len());
            for col in &self.columns {
                match col {
                    EncodedColumn::Numeric { index, min, max } => {
                        let v = match row[*index].as_number() {
                            Some(v) => v,
                            None => continue 'rows,
                        };
                        let scaled = if max > min { (v - min) / (max - min) } else { 0.0 };
                        features.push(scaled);
                    }
                    EncodedColumn::OneHot { index, vocabulary } => {
                        let token = match row[*index].token() {
                            Some(t) => t,
                            None => continue 'rows,
                        };
                        for entry in vocabulary {
                            features.push(if *entry == token { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
            x.push(features);
            y.push(if label >= 0.5 { 1.0 } else { 0.0 });
        }
        Ok((x, y))
    }
}

/// One trained classifier of any supported kind.
#[derive(Debug, Clone)]
pub enum Model {
    Tree(Tree),
    Forest(Forest),
    Boosted(Boosting),
}

impl Model {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        match self {
            Model::Tree(t) => t.predict_value(row),
            Model::Forest(f) => f.predict_proba(row),
            Model::Boosted(b) => b.predict_proba(row),
        }
    }

    pub fn feature_gains(&self, p: usize) -> Vec<f64> {
        match self {
            Model::Tree(t) => {
                let mut out = vec![0.0; p];
                for (slot, g) in out.iter_mut().zip(&t.feature_gains) {
                    *slot = *g;
                }
                out
            }
            Model::Forest(f) => f.feature_gains(p),
            Model::Boosted(b) => b.feature_gains(p),
        }
    }
}

pub const MIN_TRAIN_ROWS: usize = 10;

/// Trains one classifier. Requires at least ten rows and both label
/// classes on the training side.
pub fn train(
    kind: ClassifierKind,
    x: &[Vec<f64>],
    y: &[f64],
    seed: u64,
) -> Result<Model, UtilityError> {
    if x.len() < MIN_TRAIN_ROWS {
        return Err(UtilityError::Argument(format!(
            "need at least {MIN_TRAIN_ROWS} training rows, got {}",
            x.len()
        )));
    }
    let has_pos = y.iter().any(|&v| v == 1.0);
    let has_neg = y.iter().any(|&v| v == 0.0);
    if !(has_pos && has_neg) {
        return Err(UtilityError::DegenerateLabel);
    }
    Ok(match kind {
        ClassifierKind::DecisionTree => Model::Tree(tree::train_tree(x, y)),
        ClassifierKind::RandomForest => Model::Forest(tree::train_forest(x, y, seed)),
        ClassifierKind::BoostedTrees => Model::Boosted(tree::train_boosted(x, y, seed)),
    })
}

/// Metrics for one scored test set. AUC is absent when the truth holds a
/// single class. The confusion matrix is indexed [truth][prediction].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub auc: Option<f64>,
    pub confusion: [[usize; 2]; 2],
}

/// Midrank AUC: (sum of positive ranks - n1(n1+1)/2) / (n1 * n0).
fn rank_auc(scores: &[f64], truth: &[f64]) -> Option<f64> {
    let n1 = truth.iter().filter(|&&t| t == 1.0).count();
    let n0 = truth.len() - n1;
    if n1 == 0 || n0 == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    let rank_sum: f64 = truth
        .iter()
        .zip(&ranks)
        .filter(|(&t, _)| t == 1.0)
        .map(|(_, &r)| r)
        .sum();
    let n1f = n1 as f64;
    Some((rank_sum - n1f * (n1f + 1.0) / 2.0) / (n1f * n0 as f64))
}

/// Scores predicted probabilities against binary truth. Macro-F1
/// averages per-class F1 but skips classes absent from both the truth
/// and the predictions.
pub fn evaluate(scores: &[f64], truth: &[f64]) -> Result<EvalMetrics, UtilityError> {
    if scores.len() != truth.len() || scores.is_empty() {
        return Err(UtilityError::Argument(
            "scores and truth must be equal-length and non-empty".into(),
        ));
    }
    let preds: Vec<f64> = scores.iter().map(|&s| if s >= 0.5 { 1.0 } else { 0.0 }).collect();

    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in truth.iter().zip(&preds) {
        confusion[t as usize][p as usize] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    let accuracy = correct as f64 / truth.len() as f64;

    let mut f1_terms = Vec::new();
    for class in 0..2usize {
        let in_truth = truth.iter().any(|&t| t as usize == class);
        let in_preds = preds.iter().any(|&p| p as usize == class);
        if !in_truth && !in_preds {
            continue;
        }
        let tp = confusion[class][class];
        let fp = confusion[1 - class][class];
        let fn_ = confusion[class][1 - class];
        let denom = 2 * tp + fp + fn_;
        f1_terms.push(if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 });
    }
    let macro_f1 = f1_terms.iter().sum::<f64>() / f1_terms.len() as f64;

    Ok(EvalMetrics { accuracy, macro_f1, auc: rank_auc(scores, truth), confusion })
}

/// Cross-direction utility report. Cell keys are
/// "{classifier}:{direction}" with directions tstr, trts, and trtr; a
/// cell is None when its training side had a degenerate label or too few
/// rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityReport {
    pub cells: BTreeMap<String, Option<EvalMetrics>>,
    /// Feature importances per classifier from the synthetic-trained
    /// models, normalized to sum to one, averaged over runs.
    pub importances: BTreeMap<String, Vec<(String, f64)>>,
    pub warnings: Vec<String>,
}

pub const UTILITY_RUNS: usize = 3;

const DIRECTIONS: [&str; 3] = ["tstr", "trts", "trtr"];

impl UtilityReport {
    pub fn cell(&self, classifier: ClassifierKind, direction: &str) -> Option<&EvalMetrics> {
        self.cells
            .get(&format!("{classifier}:{direction}"))
            .and_then(|c| c.as_ref())
    }

    /// Largest drop from the real-trained baseline to synthetic-trained
    /// performance over accuracy, macro-F1, and AUC across classifiers.
    /// None when no classifier has both cells.
    pub fn max_classifier_gap(&self) -> Option<f64> {
        let mut gap: Option<f64> = None;
        for kind in ALL_CLASSIFIERS {
            let (base, tstr) = match (self.cell(kind, "trtr"), self.cell(kind, "tstr")) {
                (Some(b), Some(t)) => (b, t),
                _ => continue,
            };
            let mut push = |g: f64| {
                gap = Some(gap.map_or(g, |cur: f64| cur.max(g)));
            };
            push(base.accuracy - tstr.accuracy);
            push(base.macro_f1 - tstr.macro_f1);
            if let (Some(ba), Some(ta)) = (base.auc, tstr.auc) {
                push(ba - ta);
            }
        }
        gap
    }
}

fn average_metrics(runs: &[EvalMetrics]) -> EvalMetrics {
    let n = runs.len() as f64;
    let accuracy = runs.iter().map(|m| m.accuracy).sum::<f64>() / n;
    let macro_f1 = runs.iter().map(|m| m.macro_f1).sum::<f64>() / n;
    let auc = if runs.iter().all(|m| m.auc.is_some()) {
        Some(runs.iter().map(|m| m.auc.unwrap()).sum::<f64>() / n)
    } else {
        None
    };
    EvalMetrics { accuracy, macro_f1, auc, confusion: runs[0].confusion }
}

/// Runs the full utility comparison: for each classifier, train on
/// synthetic and test on real (tstr), the reverse (trts), and the
/// real-only baseline (trtr), three seeded runs each, averaged.
pub fn tstr_trts(
    real: &DatasetTable,
    synthetic: &DatasetTable,
    seed: u64,
) -> Result<UtilityReport, UtilityError> {
    let mut cells = BTreeMap::new();
    let mut importances = BTreeMap::new();
    let mut warnings = Vec::new();

    for (k_idx, kind) in ALL_CLASSIFIERS.iter().enumerate() {
        for direction in DIRECTIONS.iter() {
            let (train_table, test_table) = match *direction {
                "tstr" => (synthetic, real),
                "trts" => (real, synthetic),
                _ => (real, real),
            };
            let key = format!("{kind}:{direction}");

            let encoder = FeatureEncoder::fit(train_table)?;
            let (x_train, y_train) = encoder.transform(train_table)?;
            let (x_test, y_test) = encoder.transform(test_table)?;
            if x_test.is_empty() {
                warnings.push(format!("{key}: no complete test rows"));
                cells.insert(key, None);
                continue;
            }

            let mut run_metrics = Vec::new();
            let mut gain_sum = vec![0.0; encoder.feature_names.len()];
            let mut failed = None;
            for run in 0..UTILITY_RUNS {
                // The stream ignores the direction so that a synthetic
                // table equal to the real one reproduces the baseline
                // bit for bit.
                let stream = k_idx * UTILITY_RUNS + run;
                let run_seed = derive_seed(seed, stream as u64);
                let model = match train(*kind, &x_train, &y_train, run_seed) {
                    Ok(m) => m,
                    Err(e) => {
                        failed = Some(e.to_string());
                        break;
                    }
                };
                let scores: Vec<f64> =
                    x_test.iter().map(|r| model.predict_proba(r)).collect();
                run_metrics.push(evaluate(&scores, &y_test)?);
                for (slot, g) in gain_sum
                    .iter_mut()
                    .zip(model.feature_gains(encoder.feature_names.len()))
                {
                    *slot += g;
                }
            }
            match failed {
                Some(reason) => {
                    warnings.push(format!("{key}: {reason}"));
                    cells.insert(key, None);
                }
                None => {
                    if *direction == "tstr" {
                        let total: f64 = gain_sum.iter().sum();
                        let ranked: Vec<(String, f64)> = encoder
                            .feature_names
                            .iter()
                            .zip(&gain_sum)
                            .map(|(name, &g)| {
                                (name.clone(), if total > 0.0 { g / total } else { 0.0 })
                            })
                            .collect();
                        importances.insert(kind.to_string(), ranked);
                    }
                    cells.insert(key, Some(average_metrics(&run_metrics)));
                }
            }
        }
    }
    Ok(UtilityReport { cells, importances, warnings })
}
