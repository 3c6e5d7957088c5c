//! CART classification trees grown greedily on Gini impurity.

use super::{EstimatorKind, ModelInfo, Regressor, ScoreModel, TREE_CLIP};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartConfig {
    pub max_depth: usize,
    /// Minimum number of training points in each leaf.
    pub min_leaf: usize,
    /// Nodes with fewer points are not split.
    pub min_split: usize,
    /// Cost-complexity pruning on misclassification counts: a subtree is
    /// collapsed unless each extra leaf saves at least `complexity` times the
    /// root's error count. 0 disables pruning.
    pub complexity: f64,
}

impl Default for CartConfig {
    fn default() -> Self {
        Self {
            max_depth: 10,
            min_leaf: 5,
            min_split: 2,
            complexity: 0.0,
        }
    }
}

impl CartConfig {
    /// R `rpart` defaults: minsplit 20, minbucket 7, cp 0.01.
    pub fn rpart() -> Self {
        Self {
            max_depth: 30,
            min_leaf: 7,
            min_split: 20,
            complexity: 0.01,
        }
    }

    pub(crate) fn describe(&self) -> String {
        format!(
            "max_depth={}*,min_leaf={}*,min_split={}*,complexity={}*",
            self.max_depth, self.min_leaf, self.min_split, self.complexity
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
        n: usize,
        ones: usize,
    },
    Split {
        n: usize,
        ones: usize,
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned binary tree; leaves hold the empirical label frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    dim: usize,
}

/// Gini impurity of a node with `ones` positives among `n`, times `n`.
fn weighted_gini(ones: f64, n: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        let p = ones / n;
        2.0 * n * p * (1.0 - p)
    }
}

struct Grower<'a, R> {
    data: &'a LabeledDataset,
    config: CartConfig,
    /// Features examined per split; `None` means all.
    mtry: Option<usize>,
    rng: Option<&'a mut R>,
    nodes: Vec<Node>,
    features: Vec<usize>,
    pairs: Vec<(f64, u8)>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, indices: &mut [usize], depth: usize) -> usize {
        let n = indices.len();
        let ones = indices.iter().filter(|&&i| self.data.label(i) == 1).count();
        let value = ones as f64 / n as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value, n, ones });

        let splittable = depth < self.config.max_depth
            && n >= self.config.min_split
            && n >= 2 * self.config.min_leaf
            && ones != 0
            && ones != n;
        if !splittable {
            return id;
        }
        let Some(best) = self.best_split(indices, ones) else {
            return id;
        };

        let mut mid = 0;
        for k in 0..n {
            if self.data.row(indices[k])[best.feature] <= best.threshold {
                indices.swap(k, mid);
                mid += 1;
            }
        }
        let (left_idx, right_idx) = indices.split_at_mut(mid);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[id] = Node::Split {
            n,
            ones,
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> usize {
        let d = self.data.dim();
        self.features.clear();
        self.features.extend(0..d);
        match (self.mtry, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                // partial Fisher-Yates
                for k in 0..m {
                    let j = rng.random_range(k..d);
                    self.features.swap(k, j);
                }
                m
            }
            _ => d,
        }
    }

    fn best_split(&mut self, indices: &[usize], ones: usize) -> Option<BestSplit> {
        let n = indices.len();
        let parent = weighted_gini(ones as f64, n as f64);
        let min_leaf = self.config.min_leaf.max(1);
        let count = self.candidate_features();
        let mut best: Option<BestSplit> = None;
        for fi in 0..count {
            let feature = self.features[fi];
            self.pairs.clear();
            self.pairs.extend(
                indices
                    .iter()
                    .map(|&i| (self.data.row(i)[feature], self.data.label(i))),
            );
            self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_ones = 0usize;
            for k in 1..n {
                left_ones += usize::from(self.pairs[k - 1].1);
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let (lo, hi) = (self.pairs[k - 1].0, self.pairs[k].0);
                if lo >= hi {
                    continue;
                }
                let children = weighted_gini(left_ones as f64, k as f64)
                    + weighted_gini((ones - left_ones) as f64, (n - k) as f64);
                let gain = parent - children;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (lo + hi);
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

impl DecisionTree {
    pub(crate) fn grow_with<R: Rng>(
        data: &LabeledDataset,
        config: CartConfig,
        mtry: Option<usize>,
        rng: Option<&mut R>,
    ) -> Result<Self> {
        if data.len() < config.min_leaf.max(1) {
            return Err(Error::InvalidData(format!(
                "{} training points but min_leaf = {}",
                data.len(),
                config.min_leaf
            )));
        }
        let mut grower = Grower {
            data,
            config,
            mtry,
            rng,
            nodes: Vec::new(),
            features: Vec::with_capacity(data.dim()),
            pairs: Vec::with_capacity(data.len()),
        };
        let mut indices: Vec<usize> = (0..data.len()).collect();
        grower.grow(&mut indices, 0);
        let mut tree = Self {
            nodes: grower.nodes,
            dim: data.dim(),
        };
        if config.complexity > 0.0 {
            tree.prune(config.complexity);
        }
        Ok(tree)
    }

    /// Smallest subtree minimizing `errors + alpha * leaves`, with
    /// `alpha = complexity * root errors`.
    fn prune(&mut self, complexity: f64) {
        let (n, ones) = self.counts(0);
        let alpha = complexity * ones.min(n - ones) as f64;
        self.prune_node(0, alpha);
        self.compact();
    }

    fn counts(&self, id: usize) -> (usize, usize) {
        match self.nodes[id] {
            Node::Leaf { n, ones, .. } | Node::Split { n, ones, .. } => (n, ones),
        }
    }

    /// Returns the pruned cost of the subtree at `id`.
    fn prune_node(&mut self, id: usize, alpha: f64) -> f64 {
        let (n, ones) = self.counts(id);
        let as_leaf = ones.min(n - ones) as f64 + alpha;
        if let Node::Split { left, right, .. } = self.nodes[id] {
            let kept = self.prune_node(left, alpha) + self.prune_node(right, alpha);
            if as_leaf <= kept {
                self.nodes[id] = Node::Leaf {
                    value: ones as f64 / n as f64,
                    n,
                    ones,
                };
                as_leaf
            } else {
                kept
            }
        } else {
            as_leaf
        }
    }

    /// Drops nodes no longer reachable from the root.
    fn compact(&mut self) {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        self.copy_reachable(0, &mut nodes);
        self.nodes = nodes;
    }

    fn copy_reachable(&self, id: usize, out: &mut Vec<Node>) -> usize {
        let slot = out.len();
        out.push(self.nodes[id].clone());
        if let Node::Split { left, right, .. } = self.nodes[id] {
            let l = self.copy_reachable(left, out);
            let r = self.copy_reachable(right, out);
            if let Node::Split { left, right, .. } = &mut out[slot] {
                *left = l;
                *right = r;
            }
        }
        slot
    }

    pub fn fit(data: &LabeledDataset, config: CartConfig) -> Result<Self> {
        Self::grow_with::<rand_chacha::ChaCha8Rng>(data, config, None, None)
    }

    /// Raw leaf frequency, in `[0, 1]`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// `(feature, threshold)` of the root split, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug)]
struct ClippedTree(DecisionTree);

impl Regressor for ClippedTree {
    fn eta(&self, x: &[f64]) -> f64 {
        self.0.predict(x).clamp(TREE_CLIP, 1.0 - TREE_CLIP)
    }
}

pub fn fit_cart(data: &LabeledDataset, config: CartConfig) -> Result<ScoreModel> {
    let tree = DecisionTree::fit(data, config)?;
    let info = ModelInfo {
        kind: EstimatorKind::Cart,
        hyperparameters: config.describe(),
        continuous: false,
        converged: true,
    };
    Ok(ScoreModel::new(
        Arc::new(ClippedTree(tree)),
        data.dim(),
        info,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::GenerativeModel;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn pure_labels_make_a_single_leaf() {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [i as f64, (i * 7 % 5) as f64]).collect();
        for label in [0u8, 1] {
            let data = LabeledDataset::from_rows(&rows, vec![label; 30]).unwrap();
            let tree = DecisionTree::fit(&data, CartConfig::default()).unwrap();
            assert_eq!(tree.leaf_count(), 1);
            assert_eq!(tree.predict(&[3.0, 1.0]), f64::from(label));
            let model = fit_cart(&data, CartConfig::default()).unwrap();
            let e = model.eta(&[100.0, -3.0]).unwrap();
            assert!((e - f64::from(label)).abs() <= TREE_CLIP + 1e-12);
            assert!(!model.continuity_flag());
        }
    }

    #[test]
    fn threshold_split_is_found() {
        let mut rng = seeded(3);
        let mut xs: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        let labels: Vec<u8> = xs.iter().map(|&x| u8::from(x > 0.5)).collect();
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        let gap = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let tree = DecisionTree::fit(&data, CartConfig::default()).unwrap();
        let (feature, threshold) = tree.root_split().unwrap();
        assert_eq!(feature, 0);
        assert!((threshold - 0.5).abs() <= gap, "{threshold}");
        assert_eq!(tree.leaf_count(), 2);
    }

    #[test]
    fn leaves_respect_min_leaf() {
        let data = GenerativeModel::model2()
            .sample_labeled(200, &mut seeded(6))
            .unwrap();
        let cfg = CartConfig {
            min_leaf: 9,
            ..Default::default()
        };
        let tree = DecisionTree::fit(&data, cfg).unwrap();
        let mut counts = std::collections::HashMap::new();
        for (x, _) in data.iter() {
            let mut id = 0;
            while let Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } = tree.nodes[id]
            {
                id = if x[feature] <= threshold { left } else { right };
            }
            *counts.entry(id).or_insert(0usize) += 1;
        }
        assert!(counts.values().all(|&c| c >= 9), "{counts:?}");
    }

    #[test]
    fn complexity_prunes() {
        let data = GenerativeModel::model2()
            .sample_labeled(100, &mut seeded(6))
            .unwrap();
        let full = DecisionTree::fit(&data, CartConfig::default()).unwrap();
        let pruned = DecisionTree::fit(&data, CartConfig::rpart()).unwrap();
        assert!(pruned.leaf_count() < full.leaf_count());
        assert!(pruned.leaf_count() >= 2);
    }

    #[test]
    fn too_few_points() {
        let data = LabeledDataset::from_rows(&[[0.0], [1.0]], vec![0, 1]).unwrap();
        assert!(fit_cart(&data, CartConfig::default()).is_err());
    }
}
