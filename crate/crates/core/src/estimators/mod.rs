//! Estimators of the regression function and the score model they produce.
//!
//! Every learner returns a [`ScoreModel`], which exposes
//! `eta(x)`, the score `f(x) = max(eta, 1 - eta)` and the label
//! `s(x) = 1{eta >= 1/2}`. The oracle model wraps the true `eta*`.

mod forest;
mod kernel;
mod logistic;
mod tree;

pub use forest::{fit_forest, ForestConfig, RandomForest};
pub use kernel::{fit_kernel, KernelRule};
pub use logistic::{fit_logistic, LogisticConfig, LogisticRegression};
pub use tree::{fit_cart, CartConfig, DecisionTree};

use crate::distributions::GenerativeModel;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Tree-based estimates are kept away from exact 0/1 before downstream use.
pub const TREE_CLIP: f64 = 1e-6;

/// A fitted (or known) conditional probability `x -> P(Y=1 | X=x)`.
pub trait Regressor: Send + Sync + fmt::Debug {
    /// Caller guarantees `x.len()` equals the model dimension.
    fn eta(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Oracle,
    Logistic,
    Kernel,
    Cart,
    #[serde(rename = "rforest")]
    Forest,
    /// Transformations of another score, used by the Monte Carlo checks.
    Custom,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Oracle => "oracle",
            EstimatorKind::Logistic => "logistic",
            EstimatorKind::Kernel => "kernel",
            EstimatorKind::Cart => "cart",
            EstimatorKind::Forest => "rforest",
            EstimatorKind::Custom => "custom",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(EstimatorKind::Oracle),
            "logistic" => Ok(EstimatorKind::Logistic),
            "kernel" => Ok(EstimatorKind::Kernel),
            "cart" => Ok(EstimatorKind::Cart),
            "rforest" | "forest" => Ok(EstimatorKind::Forest),
            other => Err(Error::InvalidSpec(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Descriptive metadata carried alongside a score model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub kind: EstimatorKind,
    /// Hyperparameters in `key=value` form. Entries not fixed by the
    /// reference experiments are marked with a trailing `*`.
    pub hyperparameters: String,
    /// Whether `f(X)` is expected to have a continuous distribution.
    pub continuous: bool,
    /// `false` when an iterative fit stopped at its iteration cap.
    pub converged: bool,
}

/// Shareable, immutable score model.
#[derive(Clone)]
pub struct ScoreModel {
    regressor: Arc<dyn Regressor>,
    dim: usize,
    info: ModelInfo,
}

impl fmt::Debug for ScoreModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoreModel")
            .field("dim", &self.dim)
            .field("info", &self.info)
            .finish()
    }
}

impl ScoreModel {
    pub fn new(regressor: Arc<dyn Regressor>, dim: usize, info: ModelInfo) -> Self {
        Self {
            regressor,
            dim,
            info,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn info(&self) -> &ModelInfo {
        &self.info
    }

    pub fn kind(&self) -> EstimatorKind {
        self.info.kind
    }

    pub fn continuity_flag(&self) -> bool {
        self.info.continuous
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            })
        }
    }

    pub fn eta(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.eta_unchecked(x))
    }

    pub fn f(&self, x: &[f64]) -> Result<f64> {
        self.eta(x).map(score_of)
    }

    pub fn s(&self, x: &[f64]) -> Result<u8> {
        self.eta(x).map(label_of)
    }

    pub(crate) fn eta_unchecked(&self, x: &[f64]) -> f64 {
        self.regressor.eta(x)
    }

    /// A new model with `eta` replaced by `map(eta)`.
    pub fn map_eta<F>(&self, description: impl Into<String>, continuous: bool, map: F) -> ScoreModel
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mapped = Mapped {
            base: Arc::clone(&self.regressor),
            map: Box::new(map),
            description: description.into(),
        };
        let info = ModelInfo {
            kind: EstimatorKind::Custom,
            hyperparameters: mapped.description.clone(),
            continuous,
            converged: true,
        };
        ScoreModel::new(Arc::new(mapped), self.dim, info)
    }
}

/// `max(eta, 1 - eta)`
pub fn score_of(eta: f64) -> f64 {
    eta.max(1.0 - eta)
}

/// `1{eta >= 1/2}`, the boundary going to label 1.
pub fn label_of(eta: f64) -> u8 {
    u8::from(eta >= 0.5)
}

struct Mapped {
    base: Arc<dyn Regressor>,
    #[allow(clippy::type_complexity)]
    map: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    description: String,
}

impl fmt::Debug for Mapped {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mapped({})", self.description)
    }
}

impl Regressor for Mapped {
    fn eta(&self, x: &[f64]) -> f64 {
        (self.map)(self.base.eta(x))
    }
}

#[derive(Debug)]
struct TrueEta(GenerativeModel);

impl Regressor for TrueEta {
    fn eta(&self, x: &[f64]) -> f64 {
        self.0.eta_star_unchecked(x)
    }
}

/// Score model of the true regression function.
pub fn oracle_score_model(model: &GenerativeModel) -> ScoreModel {
    let info = ModelInfo {
        kind: EstimatorKind::Oracle,
        hyperparameters: format!("model={}", model.name()),
        continuous: model.has_continuous_score(),
        converged: true,
    };
    ScoreModel::new(Arc::new(TrueEta(model.clone())), model.dim(), info)
}
