use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Label, ModelError};

/// One node of a flattened tree. Children always sit at larger indices than
/// their parent, so every walk from the root terminates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// `weight` is the share of training weight carrying `label` at the leaf.
    Leaf { label: Label, weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Index of the leaf reached by `x`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        match self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { label, .. } => label,
            TreeNode::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        if self.nodes.is_empty() {
            return Err(ModelError::Invalid("tree has no nodes".into()));
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split { feature, threshold, left, right } => {
                    if feature >= n_features || !threshold.is_finite() {
                        return Err(ModelError::Invalid(format!("node {i} has a bad split")));
                    }
                    for c in [left, right] {
                        if c <= i || c >= self.nodes.len() {
                            return Err(ModelError::Invalid(format!("node {i} has child {c} out of order")));
                        }
                        parents[c] += 1;
                    }
                }
                TreeNode::Leaf { weight, .. } => {
                    if !(0.0..=1.0).contains(&weight) {
                        return Err(ModelError::Invalid(format!("leaf {i} weight {weight} outside [0,1]")));
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(ModelError::Invalid("tree nodes do not form a single tree".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    RandomForest,
    AdaBoost,
}

impl EnsembleMode {
    pub fn kind(self) -> &'static str {
        match self {
            EnsembleMode::RandomForest => "random_forest",
            EnsembleMode::AdaBoost => "adaboost",
        }
    }
}

/// Weighted vote of decision trees. Random forests carry unit weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub mode: EnsembleMode,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
    pub tree_weights: Vec<f64>,
}

impl TreeEnsemble {
    /// Summed tree weight voting benign and voting malware.
    pub fn votes(&self, x: &[f64]) -> Result<(f64, f64), ModelError> {
        if x.len() != self.n_features {
            return Err(ModelError::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        let mut benign = 0.0;
        let mut malware = 0.0;
        for (t, w) in self.trees.iter().zip(&self.tree_weights) {
            if t.predict(x).is_benign() {
                benign += w;
            } else {
                malware += w;
            }
        }
        Ok((benign, malware))
    }

    /// Weighted majority; a tied vote is malware.
    pub fn predict(&self, x: &[f64]) -> Result<Label, ModelError> {
        let (benign, malware) = self.votes(x)?;
        Ok(if benign > malware { Label::Benign } else { Label::Malware })
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.trees.is_empty() || self.trees.len() != self.tree_weights.len() {
            return Err(ModelError::Invalid("ensemble needs one weight per tree and at least one tree".into()));
        }
        if self.n_features == 0 {
            return Err(ModelError::Invalid("ensemble has no features".into()));
        }
        if self.tree_weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(ModelError::Invalid("tree weights must be positive and finite".into()));
        }
        self.trees.iter().try_for_each(|t| t.validate(self.n_features))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features examined per split; `None` means ⌈√d⌉.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 50, max_depth: 8, max_features: None, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoostConfig {
    pub n_stages: usize,
    pub stump_depth: usize,
    pub seed: u64,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self { n_stages: 50, stump_depth: 1, seed: 0 }
    }
}

/// Stage weight used when a weak learner classifies its sample perfectly.
const MAX_STAGE_WEIGHT: f64 = 10.0;

struct Cart<'a> {
    data: &'a [Vec<f64>],
    labels: &'a [Label],
    weights: &'a [f64],
    max_depth: usize,
    max_features: usize,
    nodes: Vec<TreeNode>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// (benign weight, total weight) -> weighted Gini impurity times total.
fn gini_mass(benign: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = benign / total;
    total * 2.0 * p * (1.0 - p)
}

impl Cart<'_> {
    fn mass(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(b, t), &i| {
            let w = self.weights[i];
            (if self.labels[i].is_benign() { b + w } else { b }, t + w)
        })
    }

    fn best_on(&self, idx: &[usize], feature: usize, total: (f64, f64)) -> Option<SplitChoice> {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| self.data[a][feature].total_cmp(&self.data[b][feature]));
        let mut left = (0.0, 0.0);
        let mut best: Option<SplitChoice> = None;
        for w in 0..order.len() - 1 {
            let i = order[w];
            let wt = self.weights[i];
            left.1 += wt;
            if self.labels[i].is_benign() {
                left.0 += wt;
            }
            let (lo, hi) = (self.data[i][feature], self.data[order[w + 1]][feature]);
            if lo == hi {
                continue;
            }
            let impurity = gini_mass(left.0, left.1) + gini_mass(total.0 - left.0, total.1 - left.1);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(SplitChoice { feature, threshold, impurity });
            }
        }
        best
    }

    fn leaf(&self, idx: &[usize]) -> TreeNode {
        let (benign, total) = self.mass(idx);
        let label = if benign > total - benign { Label::Benign } else { Label::Malware };
        let share = if total > 0.0 { benign.max(total - benign) / total } else { 1.0 };
        TreeNode::Leaf { label, weight: share.clamp(0.0, 1.0) }
    }

    fn grow(&mut self, idx: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let at = self.nodes.len();
        self.nodes.push(self.leaf(idx));
        let total = self.mass(idx);
        let parent = gini_mass(total.0, total.1);
        if depth >= self.max_depth || idx.len() < 2 || parent <= 1e-12 * total.1 {
            return at;
        }
        let mut features: Vec<usize> = (0..self.data[0].len()).collect();
        features.shuffle(rng);
        let mut best: Option<SplitChoice> = None;
        for (n, &f) in features.iter().enumerate() {
            if n >= self.max_features && best.is_some() {
                break;
            }
            if let Some(c) = self.best_on(idx, f, total) {
                if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best.filter(|b| b.impurity < parent - 1e-12 * total.1) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.data[i][best.feature] <= best.threshold);
        let left = self.grow(&l, depth + 1, rng);
        let right = self.grow(&r, depth + 1, rng);
        self.nodes[at] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left, right };
        at
    }
}

fn fit_tree(
    data: &[Vec<f64>],
    labels: &[Label],
    weights: &[f64],
    idx: &[usize],
    max_depth: usize,
    max_features: usize,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let mut cart = Cart { data, labels, weights, max_depth, max_features, nodes: Vec::new() };
    cart.grow(idx, 0, rng);
    DecisionTree { nodes: cart.nodes }
}

/// CART/Gini random forest with bootstrap rows and per-split feature subsampling.
pub fn forest_train(data: &[Vec<f64>], labels: &[Label], cfg: &ForestConfig) -> Result<TreeEnsemble, ModelError> {
    let dim = check_training_data(data, labels)?;
    if cfg.n_trees == 0 {
        return Err(ModelError::Invalid("n_trees must be positive".into()));
    }
    let max_features = cfg.max_features.unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize).clamp(1, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = vec![1.0; data.len()];
    let trees = (0..cfg.n_trees)
        .map(|_| {
            let idx: Vec<usize> = if cfg.bootstrap {
                (0..data.len()).map(|_| rng.gen_range(0..data.len())).collect()
            } else {
                (0..data.len()).collect()
            };
            fit_tree(data, labels, &unit, &idx, cfg.max_depth, max_features, &mut rng)
        })
        .collect();
    Ok(TreeEnsemble { mode: EnsembleMode::RandomForest, n_features: dim, trees, tree_weights: vec![1.0; cfg.n_trees] })
}

/// Binary SAMME boosting of shallow trees fit on reweighted samples.
pub fn adaboost_train(data: &[Vec<f64>], labels: &[Label], cfg: &AdaBoostConfig) -> Result<TreeEnsemble, ModelError> {
    let dim = check_training_data(data, labels)?;
    if cfg.n_stages == 0 {
        return Err(ModelError::Invalid("n_stages must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = data.len();
    let idx: Vec<usize> = (0..n).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut trees = Vec::new();
    let mut tree_weights = Vec::new();
    for _ in 0..cfg.n_stages {
        let tree = fit_tree(data, labels, &w, &idx, cfg.stump_depth.max(1), dim, &mut rng);
        let miss: Vec<bool> = data.iter().zip(labels).map(|(x, &y)| tree.predict(x) != y).collect();
        let err: f64 = w.iter().zip(&miss).filter(|(_, &m)| m).map(|(wi, _)| wi).sum::<f64>() / w.iter().sum::<f64>();
        if err >= 0.5 {
            break;
        }
        let alpha = if err <= 0.0 { MAX_STAGE_WEIGHT } else { ((1.0 - err) / err).ln().min(MAX_STAGE_WEIGHT) };
        trees.push(tree);
        tree_weights.push(alpha);
        if err <= 0.0 {
            break;
        }
        for (wi, &m) in w.iter_mut().zip(&miss) {
            if m {
                *wi *= alpha.exp();
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= s);
    }
    if trees.is_empty() {
        return Err(ModelError::DegenerateData("no weak learner beats chance".into()));
    }
    Ok(TreeEnsemble { mode: EnsembleMode::AdaBoost, n_features: dim, trees, tree_weights })
}
