//! Bagged CART ensemble with per-split feature subsampling.

use super::tree::{CartConfig, DecisionTree};
use super::{EstimatorKind, ModelInfo, Regressor, ScoreModel, TREE_CLIP};
use crate::data::LabeledDataset;
use crate::error::{check_range, Error, Result};
use crate::rng::{stream, Stage};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features examined at each split; `None` uses `ceil(sqrt(d)) / d`.
    pub feature_fraction: Option<f64>,
    pub bootstrap: bool,
    /// Tree `t` draws from the stream `(seed, t, Fit)`.
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            min_leaf: 5,
            feature_fraction: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    fn features_per_split(&self, dim: usize) -> usize {
        let fraction = self
            .feature_fraction
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() / dim as f64);
        ((fraction * dim as f64).ceil() as usize).clamp(1, dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(data: &LabeledDataset, config: ForestConfig) -> Result<Self> {
        if config.n_trees == 0 {
            return Err(Error::InvalidData("forest needs at least one tree".into()));
        }
        if let Some(f) = config.feature_fraction {
            check_range("feature_fraction", f, "(0, 1]", f > 0.0 && f <= 1.0)?;
        }
        let tree_config = CartConfig {
            max_depth: config.max_depth,
            min_leaf: config.min_leaf,
            ..CartConfig::default()
        };
        let mtry = config.features_per_split(data.dim());
        let n = data.len();
        let trees = (0..config.n_trees)
            .map(|t| {
                let mut rng = stream(config.seed, t as u64, Stage::Fit);
                if config.bootstrap {
                    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    DecisionTree::grow_with(
                        &data.select(&idx),
                        tree_config,
                        Some(mtry),
                        Some(&mut rng),
                    )
                } else {
                    DecisionTree::grow_with(data, tree_config, Some(mtry), Some(&mut rng))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trees })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Mean of the raw leaf frequencies.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

impl Regressor for RandomForest {
    fn eta(&self, x: &[f64]) -> f64 {
        self.predict(x).clamp(TREE_CLIP, 1.0 - TREE_CLIP)
    }
}

pub fn fit_forest(data: &LabeledDataset, config: ForestConfig) -> Result<ScoreModel> {
    let forest = RandomForest::fit(data, config)?;
    let info = ModelInfo {
        kind: EstimatorKind::Forest,
        hyperparameters: format!(
            "n_trees={}*,max_depth={}*,min_leaf={}*,features_per_split={}*,bootstrap={}",
            config.n_trees,
            config.max_depth,
            config.min_leaf,
            config.features_per_split(data.dim()),
            config.bootstrap
        ),
        continuous: false,
        converged: true,
    };
    Ok(ScoreModel::new(Arc::new(forest), data.dim(), info))
}
