//! Epsilon-confidence sets.
//!
//! A set either returns the label `s(x) = 1{eta(x) >= 1/2}` or rejects
//! (outputs `{0, 1}`). It classifies `x` when `F(f(x)) >= 1 - epsilon`, where
//! `F` is the CDF of the score `f = max(eta, 1 - eta)`, so under a continuous
//! score law it classifies with probability exactly `epsilon`.

mod montecarlo;

pub use montecarlo::{
    excess_risk_terms, gaussian_competitor, prop5_bound_check, BoundCheck, ExcessRiskTerms,
};

use crate::cdf::EmpiricalCdf;
use crate::data::{LabeledDataset, UnlabeledDataset};
use crate::distributions::{gaussian_score_quantile, GaussianMixtureParams, GenerativeModel};
use crate::error::{check_epsilon, check_range, Error, Result};
use crate::estimators::{label_of, oracle_score_model, score_of, ScoreModel};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Absorbs rounding in `1 - epsilon` so that ties on the calibration grid classify.
const TIE_SLACK: f64 = 1e-12;

fn passes(cdf_value: f64, epsilon: f64) -> bool {
    cdf_value >= 1.0 - epsilon - TIE_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfidenceOutput {
    Label0,
    Label1,
    /// The full set `{0, 1}`.
    Reject,
}

impl ConfidenceOutput {
    pub fn from_label(label: u8) -> Self {
        if label == 1 {
            ConfidenceOutput::Label1
        } else {
            ConfidenceOutput::Label0
        }
    }

    pub fn label(self) -> Option<u8> {
        match self {
            ConfidenceOutput::Label0 => Some(0),
            ConfidenceOutput::Label1 => Some(1),
            ConfidenceOutput::Reject => None,
        }
    }

    pub fn is_classified(self) -> bool {
        self != ConfidenceOutput::Reject
    }

    /// Cardinality of the output set.
    pub fn size(self) -> usize {
        if self.is_classified() {
            1
        } else {
            2
        }
    }
}

/// Any rule mapping a feature vector to `{0}`, `{1}` or `{0, 1}`.
pub trait ConfidenceRule: Send + Sync {
    fn dim(&self) -> usize;

    /// Decision for `x`; the caller guarantees the dimension.
    fn decide(&self, x: &[f64]) -> ConfidenceOutput;

    fn predict(&self, x: &[f64]) -> Result<ConfidenceOutput> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.decide(x))
    }
}

/// Data-driven set: fitted `eta_hat` plus the empirical CDF of `f_hat` on unlabeled data.
#[derive(Debug, Clone)]
pub struct PluginConfidenceSet {
    score_model: ScoreModel,
    calibration: Arc<EmpiricalCdf>,
    epsilon: f64,
}

/// Empirical CDF of `f_hat` over the rows of `unlabeled`.
pub fn calibrate(score_model: &ScoreModel, unlabeled: &UnlabeledDataset) -> Result<EmpiricalCdf> {
    if unlabeled.is_empty() {
        return Err(Error::Empty("unlabeled calibration set"));
    }
    if unlabeled.dim() != score_model.dim() {
        return Err(Error::DimensionMismatch {
            expected: score_model.dim(),
            got: unlabeled.dim(),
        });
    }
    let scores: Vec<f64> = unlabeled
        .rows()
        .map(|x| score_of(score_model.eta_unchecked(x)))
        .collect();
    EmpiricalCdf::from_vec(scores)
}

pub fn build_plugin(
    score_model: ScoreModel,
    unlabeled: &UnlabeledDataset,
    epsilon: f64,
) -> Result<PluginConfidenceSet> {
    check_epsilon(epsilon)?;
    let calibration = calibrate(&score_model, unlabeled)?;
    PluginConfidenceSet::from_calibration(score_model, Arc::new(calibration), epsilon)
}

impl PluginConfidenceSet {
    pub fn from_calibration(
        score_model: ScoreModel,
        calibration: Arc<EmpiricalCdf>,
        epsilon: f64,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        if calibration.is_empty() {
            return Err(Error::Empty("calibration scores"));
        }
        Ok(Self {
            score_model,
            calibration,
            epsilon,
        })
    }

    /// Same model and calibration at another level.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::from_calibration(
            self.score_model.clone(),
            Arc::clone(&self.calibration),
            epsilon,
        )
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn score_model(&self) -> &ScoreModel {
        &self.score_model
    }

    pub fn calibration(&self) -> &EmpiricalCdf {
        &self.calibration
    }
}

impl ConfidenceRule for PluginConfidenceSet {
    fn dim(&self) -> usize {
        self.score_model.dim()
    }

    fn decide(&self, x: &[f64]) -> ConfidenceOutput {
        let eta = self.score_model.eta_unchecked(x);
        if passes(self.calibration.evaluate(score_of(eta)), self.epsilon) {
            ConfidenceOutput::from_label(label_of(eta))
        } else {
            ConfidenceOutput::Reject
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleForm {
    /// Classify iff `F_{f*}(f*(x)) >= 1 - epsilon`.
    CdfTest,
    /// Classify iff `f*(x) >= alpha_epsilon`.
    Threshold,
}

/// Set built from the true `eta*` and its exact score law.
#[derive(Debug, Clone)]
pub struct OracleConfidenceSet {
    model: GenerativeModel,
    score_model: ScoreModel,
    epsilon: f64,
    alpha: f64,
    form: OracleForm,
}

/// `alpha_epsilon = F_{f*}^{-1}(1 - epsilon)` for models with a closed-form score law.
/// `alpha_1 = 1/2`.
pub fn oracle_threshold(model: &GenerativeModel, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if epsilon == 1.0 {
        return Ok(0.5);
    }
    let p = 1.0 - epsilon;
    match model {
        GenerativeModel::GaussianMixture(params) if params.delta() == 0.0 => Ok(0.5),
        GenerativeModel::GaussianMixture(params) => gaussian_score_quantile(params, p),
        GenerativeModel::Model3 => Ok(if p <= 0.5 { 0.6 } else { 0.8 }),
        other => Err(Error::AssumptionViolated(format!(
            "model {} has no closed-form score distribution",
            other.name()
        ))),
    }
}

impl OracleConfidenceSet {
    /// CDF-test form; needs a closed-form score law (Model 3 or the mixture).
    pub fn new(model: GenerativeModel, epsilon: f64) -> Result<Self> {
        let alpha = oracle_threshold(&model, epsilon)?;
        Ok(Self::assemble(model, epsilon, alpha, OracleForm::CdfTest))
    }

    /// Threshold form with the closed-form quantile.
    pub fn threshold_form(model: GenerativeModel, epsilon: f64) -> Result<Self> {
        let alpha = oracle_threshold(&model, epsilon)?;
        Ok(Self::assemble(model, epsilon, alpha, OracleForm::Threshold))
    }

    /// Threshold form with a caller-supplied `alpha_epsilon`, for models
    /// whose score law is only known through simulation.
    pub fn with_alpha(model: GenerativeModel, epsilon: f64, alpha: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_range("alpha", alpha, "[1/2, 1]", (0.5..=1.0).contains(&alpha))?;
        Ok(Self::assemble(model, epsilon, alpha, OracleForm::Threshold))
    }

    pub fn gaussian(params: GaussianMixtureParams, epsilon: f64) -> Result<Self> {
        Self::new(GenerativeModel::gaussian(params), epsilon)
    }

    pub fn gaussian_threshold(params: GaussianMixtureParams, epsilon: f64) -> Result<Self> {
        Self::threshold_form(GenerativeModel::gaussian(params), epsilon)
    }

    fn assemble(model: GenerativeModel, epsilon: f64, alpha: f64, form: OracleForm) -> Self {
        Self {
            score_model: oracle_score_model(&model),
            model,
            epsilon,
            alpha,
            form,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn form(&self) -> OracleForm {
        self.form
    }

    pub fn model(&self) -> &GenerativeModel {
        &self.model
    }

    pub fn score_model(&self) -> &ScoreModel {
        &self.score_model
    }

    fn classifies_score(&self, f: f64) -> bool {
        match self.form {
            OracleForm::Threshold => f >= self.alpha,
            OracleForm::CdfTest => {
                // constructors only admit models with a closed-form law
                let cdf = self.model.score_cdf(f).unwrap_or(1.0);
                passes(cdf, self.epsilon)
            }
        }
    }
}

impl ConfidenceRule for OracleConfidenceSet {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn decide(&self, x: &[f64]) -> ConfidenceOutput {
        let eta = self.model.eta_star_unchecked(x);
        if self.classifies_score(score_of(eta)) {
            ConfidenceOutput::from_label(label_of(eta))
        } else {
            ConfidenceOutput::Reject
        }
    }
}

/// Bayes-type rule with reject option: classify iff `f(x) >= alpha`.
#[derive(Debug, Clone)]
pub struct RejectClassifier {
    score_model: ScoreModel,
    alpha: f64,
}

impl RejectClassifier {
    pub fn new(score_model: ScoreModel, alpha: f64) -> Result<Self> {
        check_range("alpha", alpha, "[1/2, 1]", (0.5..=1.0).contains(&alpha))?;
        Ok(Self { score_model, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn score_model(&self) -> &ScoreModel {
        &self.score_model
    }
}

impl ConfidenceRule for RejectClassifier {
    fn dim(&self) -> usize {
        self.score_model.dim()
    }

    fn decide(&self, x: &[f64]) -> ConfidenceOutput {
        let eta = self.score_model.eta_unchecked(x);
        if score_of(eta) >= self.alpha {
            ConfidenceOutput::from_label(label_of(eta))
        } else {
            ConfidenceOutput::Reject
        }
    }
}

pub fn chow_classify(classifier: &RejectClassifier, x: &[f64]) -> Result<ConfidenceOutput> {
    classifier.predict(x)
}

/// Empirical `L_alpha`: classified errors plus `(1 - alpha)` per rejection, over `K`.
pub fn l_alpha_risk(classifier: &RejectClassifier, test: &LabeledDataset) -> Result<f64> {
    let result = evaluate(classifier, test)?;
    let rejected = result.k - result.n_classified;
    Ok((result.n_errors as f64 + (1.0 - classifier.alpha) * rejected as f64) / result.k as f64)
}

/// Empirical risk and classified proportion on a labeled test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    /// `n_errors / n_classified`; `None` when nothing was classified.
    pub risk_k: Option<f64>,
    /// `n_classified / k`
    pub prop_k: f64,
    pub n_classified: usize,
    pub n_errors: usize,
    pub k: usize,
}

impl EvaluationResult {
    pub fn from_counts(n_classified: usize, n_errors: usize, k: usize) -> Self {
        Self {
            risk_k: (n_classified > 0).then(|| n_errors as f64 / n_classified as f64),
            prop_k: n_classified as f64 / k as f64,
            n_classified,
            n_errors,
            k,
        }
    }
}

fn check_test_set(dim: usize, test: &LabeledDataset) -> Result<()> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if test.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: test.dim(),
        });
    }
    Ok(())
}

pub fn evaluate<C: ConfidenceRule + ?Sized>(
    set: &C,
    test: &LabeledDataset,
) -> Result<EvaluationResult> {
    check_test_set(set.dim(), test)?;
    let (mut classified, mut errors) = (0, 0);
    for (x, y) in test.iter() {
        if let Some(label) = set.decide(x).label() {
            classified += 1;
            errors += usize::from(label != y);
        }
    }
    Ok(EvaluationResult::from_counts(
        classified,
        errors,
        test.len(),
    ))
}

/// Plug-in evaluation at several levels sharing one model and calibration.
/// Equivalent to calling [`evaluate`] on each level's set.
pub fn evaluate_sweep(
    score_model: &ScoreModel,
    calibration: &EmpiricalCdf,
    test: &LabeledDataset,
    epsilons: &[f64],
) -> Result<Vec<EvaluationResult>> {
    check_test_set(score_model.dim(), test)?;
    for &eps in epsilons {
        check_epsilon(eps)?;
    }
    let points: Vec<(f64, bool)> = test
        .iter()
        .map(|(x, y)| {
            let eta = score_model.eta_unchecked(x);
            (calibration.evaluate(score_of(eta)), label_of(eta) != y)
        })
        .collect();
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let (mut classified, mut errors) = (0, 0);
            for &(cdf, wrong) in &points {
                if passes(cdf, eps) {
                    classified += 1;
                    errors += usize::from(wrong);
                }
            }
            EvaluationResult::from_counts(classified, errors, test.len())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{EstimatorKind, ModelInfo, Regressor};
    use crate::rng::seeded;

    /// `eta(x) = x[0]`, so `f(x) = max(x, 1 - x)`.
    #[derive(Debug)]
    struct Identity;

    impl Regressor for Identity {
        fn eta(&self, x: &[f64]) -> f64 {
            x[0]
        }
    }

    fn identity_model() -> ScoreModel {
        let info = ModelInfo {
            kind: EstimatorKind::Custom,
            hyperparameters: "identity".into(),
            continuous: true,
            converged: true,
        };
        ScoreModel::new(Arc::new(Identity), 1, info)
    }

    fn unlabeled(values: &[f64]) -> UnlabeledDataset {
        UnlabeledDataset::new(1, values.to_vec()).unwrap()
    }

    #[test]
    fn plugin_counts_ties_and_thresholds() {
        let cal = unlabeled(&[0.6, 0.7, 0.8, 0.9]);
        let set = build_plugin(identity_model(), &cal, 0.6).unwrap();
        assert_eq!(set.predict(&[0.75]).unwrap(), ConfidenceOutput::Label1);
        assert_eq!(set.predict(&[0.25]).unwrap(), ConfidenceOutput::Label0);
        let strict = set.with_epsilon(0.3).unwrap();
        assert_eq!(strict.predict(&[0.75]).unwrap(), ConfidenceOutput::Reject);
        // F(0.7) = 0.5 >= 1 - 0.5
        let tie = set.with_epsilon(0.5).unwrap();
        assert_eq!(tie.predict(&[0.7]).unwrap(), ConfidenceOutput::Label1);
        // grid tie where 1 - eps rounds above the count ratio
        let cal10 = unlabeled(&[0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99]);
        let set10 = build_plugin(identity_model(), &cal10, 0.7).unwrap();
        assert_eq!(set10.predict(&[0.65]).unwrap(), ConfidenceOutput::Label1);
        let all = set.with_epsilon(1.0).unwrap();
        for v in [0.5, 0.51, 0.0, 1.0] {
            assert!(all.predict(&[v]).unwrap().is_classified());
        }
    }

    #[test]
    fn plugin_errors() {
        let empty = UnlabeledDataset::new(1, vec![]);
        assert!(empty.is_err() || build_plugin(identity_model(), &empty.unwrap(), 0.5).is_err());
        let cal = unlabeled(&[0.6]);
        assert!(build_plugin(identity_model(), &cal, 0.0).is_err());
        let set = build_plugin(identity_model(), &cal, 0.5).unwrap();
        assert!(set.predict(&[0.5, 0.5]).is_err());
        let two_d = UnlabeledDataset::new(2, vec![0.1, 0.2]).unwrap();
        assert!(build_plugin(identity_model(), &two_d, 0.5).is_err());
    }

    #[test]
    fn oracle_model3_cells() {
        let set = OracleConfidenceSet::new(GenerativeModel::Model3, 0.2).unwrap();
        assert_eq!(set.predict(&[0.1]).unwrap(), ConfidenceOutput::Label0);
        assert_eq!(set.predict(&[0.3]).unwrap(), ConfidenceOutput::Reject);
        assert_eq!(set.predict(&[0.6]).unwrap(), ConfidenceOutput::Reject);
        assert_eq!(set.predict(&[0.9]).unwrap(), ConfidenceOutput::Label1);
        assert_eq!(set.alpha(), 0.8);
        let wide = OracleConfidenceSet::threshold_form(GenerativeModel::Model3, 0.5).unwrap();
        for u in [0.1, 0.3, 0.6, 0.9] {
            assert!(wide.predict(&[u]).unwrap().is_classified());
        }
    }

    #[test]
    fn oracle_at_one_is_bayes() {
        let params = GaussianMixtureParams::canonical(2.0).unwrap();
        let model = GenerativeModel::gaussian(params.clone());
        let set = OracleConfidenceSet::gaussian(params, 1.0).unwrap();
        assert_eq!(set.alpha(), 0.5);
        for x in [-3.0, 0.2, 1.0, 1.5, 4.0] {
            let label = label_of(model.eta_star(&[x]).unwrap());
            assert_eq!(
                set.predict(&[x]).unwrap(),
                ConfidenceOutput::from_label(label)
            );
        }
    }

    #[test]
    fn mid_hyperplane_is_rejected() {
        let params = GaussianMixtureParams::canonical(2.0).unwrap();
        for eps in [0.1, 0.5, 0.99] {
            let cdf = OracleConfidenceSet::gaussian(params.clone(), eps).unwrap();
            let thr = OracleConfidenceSet::gaussian_threshold(params.clone(), eps).unwrap();
            assert_eq!(cdf.predict(&[1.0]).unwrap(), ConfidenceOutput::Reject);
            assert_eq!(thr.predict(&[1.0]).unwrap(), ConfidenceOutput::Reject);
        }
    }

    #[test]
    fn oracle_needs_closed_form() {
        assert!(OracleConfidenceSet::new(GenerativeModel::Model1, 0.5).is_err());
        let set = OracleConfidenceSet::with_alpha(GenerativeModel::Model1, 0.5, 0.7).unwrap();
        assert_eq!(set.form(), OracleForm::Threshold);
        assert!(OracleConfidenceSet::with_alpha(GenerativeModel::Model1, 0.5, 0.4).is_err());
    }

    #[test]
    fn chow_extremes() {
        let half = RejectClassifier::new(identity_model(), 0.5).unwrap();
        let one = RejectClassifier::new(identity_model(), 1.0).unwrap();
        let mut rng = seeded(4);
        for _ in 0..1000 {
            let x = [rand::Rng::random::<f64>(&mut rng)];
            assert!(chow_classify(&half, &x).unwrap().is_classified());
            if x[0] > 0.0 {
                assert_eq!(chow_classify(&one, &x).unwrap(), ConfidenceOutput::Reject);
            }
        }
        assert!(RejectClassifier::new(identity_model(), 0.49).is_err());
        assert!(RejectClassifier::new(identity_model(), 1.01).is_err());
    }

    #[test]
    fn evaluation_counts() {
        let test =
            LabeledDataset::from_rows(&[[0.9], [0.8], [0.3], [0.55]], vec![1, 0, 0, 1]).unwrap();
        let never = RejectClassifier::new(identity_model(), 0.5).unwrap();
        let r = evaluate(&never, &test).unwrap();
        assert_eq!((r.n_classified, r.n_errors, r.k), (4, 1, 4));
        assert_eq!(r.prop_k, 1.0);
        assert_eq!(r.risk_k, Some(0.25));

        let always = RejectClassifier::new(identity_model(), 1.0).unwrap();
        let r = evaluate(&always, &test).unwrap();
        assert_eq!(r.prop_k, 0.0);
        assert_eq!(r.risk_k, None);
        assert_eq!(l_alpha_risk(&always, &test).unwrap(), 0.0);

        let strict = RejectClassifier::new(identity_model(), 0.9).unwrap();
        assert!((l_alpha_risk(&strict, &test).unwrap() - 0.075).abs() < 1e-15);
        let mid = RejectClassifier::new(identity_model(), 0.7).unwrap();
        assert!((l_alpha_risk(&mid, &test).unwrap() - (1.0 + 0.3) / 4.0).abs() < 1e-15);
        assert!((l_alpha_risk(&never, &test).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sweep_matches_individual_sets() {
        let model = GenerativeModel::model2();
        let oracle = oracle_score_model(&model);
        let cal = model.sample_features(300, &mut seeded(1)).unwrap();
        let test = model.sample_labeled(500, &mut seeded(2)).unwrap();
        let eps = [0.1, 0.25, 0.5, 0.7, 1.0];
        let calibration = calibrate(&oracle, &cal).unwrap();
        let sweep = evaluate_sweep(&oracle, &calibration, &test, &eps).unwrap();
        for (e, s) in eps.iter().zip(&sweep) {
            let set = build_plugin(oracle.clone(), &cal, *e).unwrap();
            assert_eq!(evaluate(&set, &test).unwrap(), *s);
        }
        assert_eq!(sweep.last().unwrap().prop_k, 1.0);
    }

    #[test]
    fn output_helpers() {
        assert_eq!(ConfidenceOutput::Reject.size(), 2);
        assert_eq!(ConfidenceOutput::Label0.size(), 1);
        assert_eq!(ConfidenceOutput::Label1.label(), Some(1));
        assert_eq!(ConfidenceOutput::Reject.label(), None);
    }
}
