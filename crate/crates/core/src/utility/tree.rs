//! Self-contained tree learners over dense feature matrices: a greedy
//! depth-bounded tree for Gini classification and squared-error
//! regression, a seeded bagged forest with per-node feature subsampling,
//! and logistic-loss gradient boosting with early stopping. Split search
//! uses midpoint thresholds between distinct sorted values and breaks
//! ties toward the lowest feature index, then the lowest threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::stats::derive_seed;

#[derive(Debug, Clone)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// One trained tree. Leaf values are mean targets: the positive-class
/// fraction for classification, the mean response for regression.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
    /// Impurity reduction accumulated per feature, weighted by node size.
    pub feature_gains: Vec<f64>,
}

impl Tree {
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_of(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_of returns a leaf"),
        }
    }

    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut at = self.root;
        loop {
            match self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth_of(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + depth_of(nodes, left).max(depth_of(nodes, right))
                }
            }
        }
        depth_of(&self.nodes, self.root)
    }

    fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        if let Node::Leaf { value: v } = &mut self.nodes[leaf] {
            *v = value;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTask {
    Gini,
    SquaredError,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    task: SplitTask,
    max_depth: usize,
    nodes: Vec<Node>,
    gains: Vec<f64>,
    /// Present for forests: per-node feature subsampling of `m` features.
    rng: Option<(ChaCha8Rng, usize)>,
}

impl<'a> Builder<'a> {
    fn impurity(&self, rows: &[usize]) -> f64 {
        let n = rows.len() as f64;
        match self.task {
            SplitTask::Gini => {
                let pos = rows.iter().filter(|&&i| self.y[i] == 1.0).count() as f64;
                let p = pos / n;
                1.0 - p * p - (1.0 - p) * (1.0 - p)
            }
            SplitTask::SquaredError => {
                let s: f64 = rows.iter().map(|&i| self.y[i]).sum();
                let sq: f64 = rows.iter().map(|&i| self.y[i] * self.y[i]).sum();
                sq - s * s / n
            }
        }
    }

    fn leaf_value(&self, rows: &[usize]) -> f64 {
        rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.gains.len();
        match &mut self.rng {
            Some((rng, m)) => {
                let m = (*m).min(p);
                let mut picked = rand::seq::index::sample(rng, p, m).into_vec();
                picked.sort_unstable();
                picked
            }
            None => (0..p).collect(),
        }
    }

    /// Best (gain, feature, threshold) for this node, if any candidate
    /// strictly improves on zero gain.
    fn best_split(&mut self, rows: &[usize], parent_impurity: f64) -> Option<(f64, usize, f64)> {
        let n = rows.len();
        let nf = n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in self.candidate_features() {
            let mut pairs: Vec<(f64, f64)> = rows
                .iter()
                .map(|&i| (self.x[i][feature], self.y[i]))
                .collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut left_count = 0.0;
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
            let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();

            for i in 1..n {
                left_count += 1.0;
                left_sum += pairs[i - 1].1;
                left_sq += pairs[i - 1].1 * pairs[i - 1].1;
                if pairs[i].0 <= pairs[i - 1].0 {
                    continue;
                }
                let threshold = (pairs[i - 1].0 + pairs[i].0) / 2.0;
                if !(threshold >= pairs[i - 1].0 && threshold < pairs[i].0) {
                    continue;
                }
                let right_count = nf - left_count;
                let gain = match self.task {
                    SplitTask::Gini => {
                        let pl = left_sum / left_count;
                        let pr = (total_sum - left_sum) / right_count;
                        let gini_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl);
                        let gini_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr);
                        parent_impurity - (left_count * gini_l + right_count * gini_r) / nf
                    }
                    SplitTask::SquaredError => {
                        let sse_l = left_sq - left_sum * left_sum / left_count;
                        let right_sum = total_sum - left_sum;
                        let sse_r = (total_sq - left_sq) - right_sum * right_sum / right_count;
                        parent_impurity - (sse_l + sse_r)
                    }
                };
                let improves = match best {
                    None => gain > 1e-15,
                    Some((bg, _, _)) => gain > bg,
                };
                if improves {
                    best = Some((gain, feature, threshold));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let parent_impurity = self.impurity(&rows);
        if depth >= self.max_depth || rows.len() < 2 || parent_impurity <= 1e-15 {
            let value = self.leaf_value(&rows);
            self.nodes.push(Node::Leaf { value });
            return self.nodes.len() - 1;
        }
        match self.best_split(&rows, parent_impurity) {
            None => {
                let value = self.leaf_value(&rows);
                self.nodes.push(Node::Leaf { value });
                self.nodes.len() - 1
            }
            Some((gain, feature, threshold)) => {
                // Gini gain is a per-row measure and gets size-weighted;
                // squared-error gain is already a total.
                let weight = match self.task {
                    SplitTask::Gini => rows.len() as f64,
                    SplitTask::SquaredError => 1.0,
                };
                self.gains[feature] += gain * weight;
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= threshold);
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes.push(Node::Split { feature, threshold, left, right });
                self.nodes.len() - 1
            }
        }
    }
}

fn grow_tree(
    x: &[Vec<f64>],
    y: &[f64],
    task: SplitTask,
    max_depth: usize,
    rng: Option<(ChaCha8Rng, usize)>,
) -> Tree {
    let p = x.first().map(|r| r.len()).unwrap_or(0);
    let mut builder = Builder {
        x,
        y,
        task,
        max_depth,
        nodes: Vec::new(),
        gains: vec![0.0; p],
        rng,
    };
    let root = builder.build((0..x.len()).collect(), 0);
    Tree { nodes: builder.nodes, root, feature_gains: builder.gains }
}

pub const TREE_MAX_DEPTH: usize = 5;

/// Gini classification tree, depth capped at 5, deterministic.
pub fn train_tree(x: &[Vec<f64>], y: &[f64]) -> Tree {
    grow_tree(x, y, SplitTask::Gini, TREE_MAX_DEPTH, None)
}

pub(crate) fn train_regression_tree(x: &[Vec<f64>], y: &[f64], max_depth: usize) -> Tree {
    grow_tree(x, y, SplitTask::SquaredError, max_depth, None)
}

pub const FOREST_TREES: usize = 50;

#[derive(Debug, Clone)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

/// Bagged forest of Gini trees: bootstrap resampling per tree and
/// ceil(sqrt(p)) features considered per node, all seeded.
pub fn train_forest(x: &[Vec<f64>], y: &[f64], seed: u64) -> Forest {
    let n = x.len();
    let p = x.first().map(|r| r.len()).unwrap_or(0);
    let m = (p as f64).sqrt().ceil() as usize;
    let mut trees = Vec::with_capacity(FOREST_TREES);
    for t in 0..FOREST_TREES {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let xb: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let yb: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        trees.push(grow_tree(&xb, &yb, SplitTask::Gini, TREE_MAX_DEPTH, Some((rng, m.max(1)))));
    }
    Forest { trees }
}

impl Forest {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_value(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn feature_gains(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for tree in &self.trees {
            for (slot, g) in out.iter_mut().zip(&tree.feature_gains) {
                *slot += g;
            }
        }
        for slot in &mut out {
            *slot /= self.trees.len() as f64;
        }
        out
    }
}

pub const BOOST_MAX_ROUNDS: usize = 100;
pub const BOOST_PATIENCE: usize = 10;
pub const BOOST_LEARNING_RATE: f64 = 0.1;
pub const BOOST_TREE_DEPTH: usize = 3;

#[derive(Debug, Clone)]
pub struct Boosting {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn log_loss(scores: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&f, &t) in scores.iter().zip(y) {
        let p = sigmoid(f).clamp(1e-12, 1.0 - 1e-12);
        total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    }
    total / y.len() as f64
}

/// Gradient boosting with logistic loss: depth-3 regression trees over
/// residuals, Newton leaf values, and early stopping on a seeded 20%
/// holdout when log-loss stalls for 10 rounds.
pub fn train_boosted(x: &[Vec<f64>], y: &[f64], seed: u64) -> Boosting {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xB005));
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let holdout_n = (n / 5).max(1);
    let (hold_idx, fit_idx) = order.split_at(holdout_n);

    let x_fit: Vec<Vec<f64>> = fit_idx.iter().map(|&i| x[i].clone()).collect();
    let y_fit: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
    let x_hold: Vec<Vec<f64>> = hold_idx.iter().map(|&i| x[i].clone()).collect();
    let y_hold: Vec<f64> = hold_idx.iter().map(|&i| y[i]).collect();

    let prior = (y_fit.iter().sum::<f64>() / y_fit.len() as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (prior / (1.0 - prior)).ln();
    let mut f_fit = vec![base_score; x_fit.len()];
    let mut f_hold = vec![base_score; x_hold.len()];

    let mut trees: Vec<Tree> = Vec::new();
    let mut best_loss = log_loss(&f_hold, &y_hold);
    let mut best_round = 0usize;

    for round in 1..=BOOST_MAX_ROUNDS {
        let residuals: Vec<f64> = f_fit
            .iter()
            .zip(&y_fit)
            .map(|(&f, &t)| t - sigmoid(f))
            .collect();
        let mut tree = train_regression_tree(&x_fit, &residuals, BOOST_TREE_DEPTH);

        // Newton step per leaf: sum of residuals over sum of p(1-p).
        let mut numer: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        let mut denom: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        for (row, (&f, &r)) in x_fit.iter().zip(f_fit.iter().zip(&residuals)) {
            let leaf = tree.leaf_of(row);
            let p = sigmoid(f);
            *numer.entry(leaf).or_default() += r;
            *denom.entry(leaf).or_default() += p * (1.0 - p);
        }
        for (leaf, num) in numer {
            let den = denom[&leaf].max(1e-12);
            tree.set_leaf_value(leaf, num / den);
        }

        for (f, row) in f_fit.iter_mut().zip(&x_fit) {
            *f += BOOST_LEARNING_RATE * tree.predict_value(row);
        }
        for (f, row) in f_hold.iter_mut().zip(&x_hold) {
            *f += BOOST_LEARNING_RATE * tree.predict_value(row);
        }
        trees.push(tree);

        let loss = log_loss(&f_hold, &y_hold);
        if loss < best_loss - 1e-12 {
            best_loss = loss;
            best_round = round;
        } else if round - best_round >= BOOST_PATIENCE {
            break;
        }
    }
    trees.truncate(best_round);
    Boosting { base_score, learning_rate: BOOST_LEARNING_RATE, trees }
}

impl Boosting {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut f = self.base_score;
        for tree in &self.trees {
            f += self.learning_rate * tree.predict_value(row);
        }
        sigmoid(f)
    }

    pub fn feature_gains(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for tree in &self.trees {
            for (slot, g) in out.iter_mut().zip(&tree.feature_gains) {
                *slot += g;
            }
        }
        out
    }
}
