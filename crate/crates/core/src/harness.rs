//! Seeded, parallel Monte Carlo experiments.
//!
//! Each repetition draws its training, calibration and test samples from
//! independent streams addressed by `(master_seed, repetition, stage)`, fits
//! the estimator once, and evaluates every epsilon on the same calibration and
//! test data. Repetitions run on a rayon pool; results are reduced in
//! repetition order, so reports do not depend on the worker count.

use crate::confset::{calibrate, evaluate_sweep, EvaluationResult};
use crate::data::LabeledDataset;
use crate::distributions::GenerativeModel;
use crate::error::{check_epsilon, Error, Result};
use crate::estimators::{
    fit_cart, fit_forest, fit_kernel, fit_logistic, oracle_score_model, CartConfig, EstimatorKind,
    ForestConfig, LogisticConfig, ModelInfo, ScoreModel,
};
use crate::rng::{derive_seed, stream, Stage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Hyperparameters for each learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSettings {
    pub logistic: LogisticConfig,
    pub kernel_bandwidth: f64,
    /// Defaults to the rpart-style pruned tree.
    pub cart: CartConfig,
    /// The forest seed is replaced per repetition.
    pub forest: ForestConfig,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            logistic: LogisticConfig::default(),
            kernel_bandwidth: 1.0,
            cart: CartConfig::rpart(),
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: GenerativeModel,
    pub estimator: EstimatorKind,
    /// Labeled training size `n`; unused by the oracle.
    #[serde(rename = "n")]
    pub n_train: usize,
    /// Unlabeled calibration size `N`.
    #[serde(rename = "N")]
    pub n_unlabeled: usize,
    /// Labeled test size `K`.
    #[serde(rename = "K")]
    pub n_test: usize,
    pub epsilons: Vec<f64>,
    /// Number of repetitions `B`.
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub settings: EstimatorSettings,
}

impl ExperimentSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: GenerativeModel,
        estimator: EstimatorKind,
        n_train: usize,
        n_unlabeled: usize,
        n_test: usize,
        epsilons: Vec<f64>,
        reps: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            model,
            estimator,
            n_train,
            n_unlabeled,
            n_test,
            epsilons,
            reps,
            master_seed,
            settings: EstimatorSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.reps == 0 {
            return invalid("reps must be at least 1");
        }
        if self.n_train == 0 || self.n_unlabeled == 0 || self.n_test == 0 {
            return invalid("sample sizes must be at least 1");
        }
        if self.epsilons.is_empty() {
            return invalid("no epsilon values");
        }
        for &eps in &self.epsilons {
            check_epsilon(eps)?;
        }
        if self.epsilons.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("epsilons must be strictly increasing");
        }
        if self.estimator == EstimatorKind::Custom {
            return invalid("custom score models cannot be fitted by the harness");
        }
        if !(self.settings.kernel_bandwidth > 0.0 && self.settings.kernel_bandwidth.is_finite()) {
            return invalid("kernel bandwidth must be positive");
        }
        Ok(())
    }
}

/// Outcome of one repetition; `results` is aligned with the spec's epsilons
/// and empty when the fit failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub repetition: usize,
    pub results: Vec<EvaluationResult>,
    pub fit: Option<ModelInfo>,
    pub failure: Option<String>,
}

/// Summary over repetitions at one epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    /// Mean over repetitions with a defined risk; `None` if there are none.
    pub mean_risk: Option<f64>,
    pub sd_risk: Option<f64>,
    pub mean_prop: f64,
    pub sd_prop: f64,
    /// Repetitions in which nothing was classified.
    pub undefined_count: usize,
    /// Repetitions summarized; standard deviations are 0 when this is 1.
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub summaries: Vec<EpsilonSummary>,
    pub records: Vec<RepetitionRecord>,
    pub failed_fits: usize,
    /// Fits that stopped at their iteration cap (kept in the summaries).
    pub unconverged_fits: usize,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (b - 1.0)).sqrt())
}

/// Mean and unbiased standard deviation of risk and proportion.
pub fn aggregate(epsilon: f64, results: &[EvaluationResult]) -> Result<EpsilonSummary> {
    if results.is_empty() {
        return Err(Error::Empty("repetition results"));
    }
    let risks: Vec<f64> = results.iter().filter_map(|r| r.risk_k).collect();
    let props: Vec<f64> = results.iter().map(|r| r.prop_k).collect();
    let (mean_prop, sd_prop) = mean_sd(&props);
    let (mean_risk, sd_risk) = if risks.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_sd(&risks);
        (Some(m), Some(s))
    };
    Ok(EpsilonSummary {
        epsilon,
        mean_risk,
        sd_risk,
        mean_prop,
        sd_prop,
        undefined_count: results.len() - risks.len(),
        records: results.len(),
    })
}

fn fit(spec: &ExperimentSpec, data: &LabeledDataset, repetition: u64) -> Result<ScoreModel> {
    let s = &spec.settings;
    match spec.estimator {
        EstimatorKind::Logistic => fit_logistic(data, s.logistic),
        EstimatorKind::Kernel => fit_kernel(data, s.kernel_bandwidth),
        EstimatorKind::Cart => fit_cart(data, s.cart),
        EstimatorKind::Forest => fit_forest(
            data,
            ForestConfig {
                seed: derive_seed(spec.master_seed, repetition),
                ..s.forest
            },
        ),
        EstimatorKind::Oracle | EstimatorKind::Custom => Err(Error::InvalidSpec(format!(
            "{} is not a fitted estimator",
            spec.estimator
        ))),
    }
}

fn run_repetition(spec: &ExperimentSpec, repetition: usize) -> Result<RepetitionRecord> {
    let r = repetition as u64;
    let seed = spec.master_seed;
    let fitted = if spec.estimator == EstimatorKind::Oracle {
        Ok(oracle_score_model(&spec.model))
    } else {
        let train = spec
            .model
            .sample_labeled(spec.n_train, &mut stream(seed, r, Stage::Train))?;
        fit(spec, &train, r)
    };
    let score_model = match fitted {
        Ok(m) => m,
        Err(e) => {
            return Ok(RepetitionRecord {
                repetition,
                results: Vec::new(),
                fit: None,
                failure: Some(e.to_string()),
            })
        }
    };
    let unlabeled = spec
        .model
        .sample_features(spec.n_unlabeled, &mut stream(seed, r, Stage::Calibrate))?;
    let calibration = calibrate(&score_model, &unlabeled)?;
    let test = spec
        .model
        .sample_labeled(spec.n_test, &mut stream(seed, r, Stage::Test))?;
    let results = evaluate_sweep(&score_model, &calibration, &test, &spec.epsilons)?;
    Ok(RepetitionRecord {
        repetition,
        results,
        fit: Some(score_model.info().clone()),
        failure: None,
    })
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("cannot start worker pool: {e}")))
}

/// Runs every repetition of `spec` on `workers` threads (0 = one per core).
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentReport> {
    spec.validate()?;
    let pool = build_pool(workers)?;
    let records: Vec<RepetitionRecord> = pool.install(|| {
        (0..spec.reps)
            .into_par_iter()
            .map(|r| run_repetition(spec, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let usable: Vec<&RepetitionRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    if usable.is_empty() {
        let reason = records[0].failure.clone().unwrap_or_default();
        return Err(Error::InvalidData(format!(
            "every repetition failed to fit: {reason}"
        )));
    }
    let summaries = spec
        .epsilons
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let at: Vec<EvaluationResult> = usable.iter().map(|r| r.results[i]).collect();
            aggregate(eps, &at)
        })
        .collect::<Result<Vec<_>>>()?;
    let unconverged_fits = usable
        .iter()
        .filter(|r| r.fit.as_ref().is_some_and(|f| !f.converged))
        .count();
    Ok(ExperimentReport {
        spec: spec.clone(),
        summaries,
        failed_fits: records.len() - usable.len(),
        unconverged_fits,
        records,
    })
}

/// Oracle scheme: true `eta*`, score CDF estimated from `N` unlabeled draws.
pub fn run_oracle_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentReport> {
    if spec.estimator != EstimatorKind::Oracle {
        return Err(Error::InvalidSpec(
            "oracle experiment needs estimator = oracle".into(),
        ));
    }
    run_experiment(spec, workers)
}

/// Plug-in scheme: fit on `n` labeled draws, calibrate on `N`, test on `K`.
pub fn run_plugin_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentReport> {
    if spec.estimator == EstimatorKind::Oracle {
        return Err(Error::InvalidSpec(
            "plug-in experiment needs a fitted estimator".into(),
        ));
    }
    run_experiment(spec, workers)
}

/// One report per training size, all sharing the spec's master seed.
pub fn convergence_sweep(
    base: &ExperimentSpec,
    n_values: &[usize],
    workers: usize,
) -> Result<Vec<ExperimentReport>> {
    if n_values.is_empty() {
        return Err(Error::InvalidSpec("no training sizes".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec(
            "training sizes must be strictly increasing".into(),
        ));
    }
    n_values
        .iter()
        .map(|&n| {
            let spec = ExperimentSpec {
                n_train: n,
                ..base.clone()
            };
            run_experiment(&spec, workers)
        })
        .collect()
}
