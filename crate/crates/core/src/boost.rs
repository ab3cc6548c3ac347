//! Second-order gradient-boosted decision trees for multiclass classification.
//!
//! Each boosting round fits one regression tree per class on the softmax
//! cross-entropy gradients `g = p - y` and hessians `h = p (1 - p)`. Trees are
//! grown by exact greedy search over midpoints between consecutive distinct
//! feature values, scoring
//!
//! ```text
//! gain = 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma
//! ```
//!
//! with leaf weight `-G/(H+lambda)`. Ties go to the lowest feature index and
//! then the lowest threshold.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    /// `x[feature] < threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        weight: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    /// Number of split levels; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub min_split_gain: f64,
    pub min_child_hessian: f64,
    /// Reserved for subsampling; exact training does not consume randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 4,
            learning_rate: 0.3,
            l2_lambda: 1.0,
            min_split_gain: 0.0,
            min_child_hessian: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.l2_lambda >= 0.0) || !self.l2_lambda.is_finite() {
            return bad("l2_lambda must be non-negative");
        }
        if !(self.min_split_gain >= 0.0) || !self.min_split_gain.is_finite() {
            return bad("min_split_gain must be non-negative");
        }
        if !(self.min_child_hessian >= 0.0) || !self.min_child_hessian.is_finite() {
            return bad("min_child_hessian must be non-negative");
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax_probabilities(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradPair {
    pub grad: f64,
    pub hess: f64,
}

/// Softmax cross-entropy gradient and diagonal hessian for one sample.
pub fn gradients_multiclass(probs: &[f64], true_class: usize) -> Vec<GradPair> {
    probs
        .iter()
        .enumerate()
        .map(|(c, &p)| GradPair {
            grad: p - if c == true_class { 1.0 } else { 0.0 },
            hess: p * (1.0 - p),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Split objective; `None` when a denominator vanishes.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> Option<f64> {
    let score = |g: f64, h: f64| {
        let d = h + lambda;
        (d > 0.0).then(|| g * g / d)
    };
    let gain = 0.5 * (score(gl, hl)? + score(gr, hr)? - score(gl + gr, hl + hr)?) - gamma;
    gain.is_finite().then_some(gain)
}

pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        -g / d
    } else {
        0.0
    }
}

/// Row indices sorted by each feature's value, ties by row index.
struct SortedColumns(Vec<Vec<usize>>);

impl SortedColumns {
    fn new(x: &[Vec<f64>], n_features: usize) -> Self {
        Self(
            (0..n_features)
                .map(|f| {
                    let mut idx: Vec<usize> = (0..x.len()).collect();
                    idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
                    idx
                })
                .collect(),
        )
    }
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    g: &'a [f64],
    h: &'a [f64],
    config: &'a TrainConfig,
    sorted: &'a SortedColumns,
    in_node: Vec<bool>,
}

impl Grower<'_> {
    fn best_split(&mut self, rows: &[usize], total_g: f64, total_h: f64) -> Option<SplitCandidate> {
        for &r in rows {
            self.in_node[r] = true;
        }
        let (lambda, gamma) = (self.config.l2_lambda, self.config.min_split_gain);
        let min_h = self.config.min_child_hessian;
        let mut best: Option<SplitCandidate> = None;
        for (feature, order) in self.sorted.0.iter().enumerate() {
            let mut members = order
                .iter()
                .copied()
                .filter(|&r| self.in_node[r])
                .peekable();
            let (mut gl, mut hl) = (0.0, 0.0);
            while let Some(r) = members.next() {
                gl += self.g[r];
                hl += self.h[r];
                let Some(&next) = members.peek() else { break };
                let (lo, hi) = (self.x[r][feature], self.x[next][feature]);
                if lo == hi {
                    continue;
                }
                let (gr, hr) = (total_g - gl, total_h - hl);
                if hl < min_h || hr < min_h {
                    continue;
                }
                let Some(gain) = split_gain(gl, hl, gr, hr, lambda, gamma) else {
                    continue;
                };
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        feature,
                        threshold: midpoint(lo, hi),
                        gain,
                    });
                }
            }
        }
        for &r in rows {
            self.in_node[r] = false;
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> TreeNode {
        let total_g: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let total_h: f64 = rows.iter().map(|&r| self.h[r]).sum();
        let leaf = TreeNode::Leaf {
            weight: leaf_weight(total_g, total_h, self.config.l2_lambda),
        };
        if depth >= self.config.max_depth || rows.len() < 2 {
            return leaf;
        }
        let Some(split) = self.best_split(&rows, total_g, total_h) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x[r][split.feature] < split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build(left, depth + 1)),
            right: Box::new(self.build(right, depth + 1)),
        }
    }
}

/// Midpoint strictly above `lo` and at most `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

fn grow_with(
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    config: &TrainConfig,
    sorted: &SortedColumns,
) -> TreeNode {
    let mut grower = Grower {
        x,
        g,
        h,
        config,
        sorted,
        in_node: vec![false; x.len()],
    };
    grower.build((0..x.len()).collect(), 0)
}

/// Grows one regression tree on per-row gradients and hessians.
pub fn grow_tree(x: &[Vec<f64>], g: &[f64], h: &[f64], config: &TrainConfig) -> TreeNode {
    let n_features = x.first().map_or(0, Vec::len);
    grow_with(x, g, h, config, &SortedColumns::new(x, n_features))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub n_classes: usize,
    pub n_features: usize,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<TreeNode>>,
    pub learning_rate: f64,
    pub base_score: f64,
    /// Rows seen during training.
    pub trained_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub class: usize,
}

/// Per-round training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Mean multiclass log-loss before training and after each round.
    pub log_loss: Vec<f64>,
}

impl BoostedEnsemble {
    /// Ensemble with no trees: uniform probabilities.
    pub fn empty(n_classes: usize, n_features: usize) -> Self {
        Self {
            n_classes,
            n_features,
            trees: Vec::new(),
            learning_rate: TrainConfig::default().learning_rate,
            base_score: 0.0,
            trained_rows: 0,
        }
    }

    pub fn rounds(&self) -> usize {
        self.trees.len()
    }

    pub fn raw_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let mut scores = vec![self.base_score; self.n_classes];
        for round in &self.trees {
            for (s, tree) in scores.iter_mut().zip(round) {
                *s += self.learning_rate * tree.predict(x);
            }
        }
        Ok(scores)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let probs = softmax_probabilities(&self.raw_scores(x)?);
        let class = argmax(&probs);
        Ok(Prediction { probs, class })
    }
}

/// Index of the largest value; lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn mean_log_loss(logits: &[Vec<f64>], y: &[usize]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(y)
        .map(|(z, &c)| {
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - z[c]
        })
        .sum();
    total / y.len() as f64
}

fn check_training_data(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(y.len(), x.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "training needs at least 2 rows, got {}",
            x.len()
        )));
    }
    let n_features = x[0].len();
    if n_features == 0 {
        return Err(Error::InvalidConfig(
            "training rows have no features".into(),
        ));
    }
    for row in x {
        if row.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "training features must be finite".into(),
            ));
        }
    }
    if let Some(&label) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidLabel { label, n_classes });
    }
    if y.iter().all(|&c| c == y[0]) {
        return Err(Error::SingleClassData);
    }
    Ok(n_features)
}

/// Trains an ensemble over labels `0..n_classes`.
pub fn train(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    config: &TrainConfig,
) -> Result<BoostedEnsemble> {
    train_with_trace(x, y, n_classes, config).map(|(model, _)| model)
}

pub fn train_with_trace(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    config: &TrainConfig,
) -> Result<(BoostedEnsemble, TrainTrace)> {
    config.validate()?;
    let n_features = check_training_data(x, y, n_classes)?;

    // Canonical row order makes the fit independent of how rows were supplied.
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[a].iter()
            .zip(&x[b])
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(y[a].cmp(&y[b]))
    });
    let xs: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let ys: Vec<usize> = order.iter().map(|&i| y[i]).collect();

    let sorted = SortedColumns::new(&xs, n_features);
    let m = xs.len();
    let mut model = BoostedEnsemble {
        n_classes,
        n_features,
        trees: Vec::with_capacity(config.rounds),
        learning_rate: config.learning_rate,
        base_score: 0.0,
        trained_rows: m,
    };
    let mut logits = vec![vec![model.base_score; n_classes]; m];
    let mut log_loss = vec![mean_log_loss(&logits, &ys)];
    let mut g = vec![0.0; m];
    let mut h = vec![0.0; m];

    for _ in 0..config.rounds {
        let stats: Vec<Vec<GradPair>> = logits
            .iter()
            .zip(&ys)
            .map(|(z, &c)| gradients_multiclass(&softmax_probabilities(z), c))
            .collect();
        let mut round = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            for (i, s) in stats.iter().enumerate() {
                g[i] = s[class].grad;
                h[i] = s[class].hess;
            }
            round.push(grow_with(&xs, &g, &h, config, &sorted));
        }
        for (z, row) in logits.iter_mut().zip(&xs) {
            for (zc, tree) in z.iter_mut().zip(&round) {
                *zc += config.learning_rate * tree.predict(row);
            }
        }
        model.trees.push(round);
        log_loss.push(mean_log_loss(&logits, &ys));
    }
    Ok((model, TrainTrace { log_loss }))
}
