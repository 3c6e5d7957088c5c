//! Monte Carlo checks of the excess-risk decomposition and the plug-in bound.
//!
//! Errors are averaged in expectation over `Y | X` (using `eta*`) rather than
//! drawn, which removes the label noise from every estimate.

use super::{
    build_plugin, oracle_threshold, ConfidenceOutput, ConfidenceRule, OracleConfidenceSet,
    RejectClassifier,
};
use crate::cdf::EmpiricalCdf;
use crate::distributions::{gaussian_eta_cdf, GaussianMixtureParams, GenerativeModel};
use crate::error::{check_epsilon, Error, Result};
use crate::estimators::{label_of, oracle_score_model, ScoreModel};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Running mean and variance (Welford).
#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn se(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0) / self.n).sqrt()
        }
    }
}

/// Conditional error probability of an output given `eta*`; 0 when rejected.
fn expected_error(output: ConfidenceOutput, eta_star: f64) -> f64 {
    match output {
        ConfidenceOutput::Label1 => 1.0 - eta_star,
        ConfidenceOutput::Label0 => eta_star,
        ConfidenceOutput::Reject => 0.0,
    }
}

/// Estimated excess risk of a competitor over the oracle set, and the three
/// terms of its decomposition. All quantities carry the `1/epsilon` factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskTerms {
    /// `R(competitor) - R(oracle)`
    pub lhs: f64,
    pub lhs_se: f64,
    /// `E|2 eta* - 1| 1_C`
    pub c_term: f64,
    /// `E|eta* - alpha| 1_{A0 u B0}`
    pub a0b0_term: f64,
    /// `E|1 - eta* - alpha| 1_{A1 u B1}`
    pub a1b1_term: f64,
    /// Standard error of the sum of the three terms.
    pub rhs_se: f64,
    /// Classified proportion of the competitor over all draws.
    pub competitor_proportion: f64,
}

impl ExcessRiskTerms {
    pub fn rhs(&self) -> f64 {
        self.c_term + self.a0b0_term + self.a1b1_term
    }

    pub fn combined_se(&self) -> f64 {
        self.lhs_se.hypot(self.rhs_se)
    }
}

/// Monte Carlo estimate of both sides of the excess-risk decomposition.
///
/// The two sides use independent batches of `draws` points each. The
/// competitor must classify with probability `epsilon`; a sample proportion
/// more than three standard errors away is reported as an error.
pub fn excess_risk_terms<C, R>(
    reference: &OracleConfidenceSet,
    competitor: &C,
    draws: usize,
    rng: &mut R,
) -> Result<ExcessRiskTerms>
where
    C: ConfidenceRule + ?Sized,
    R: Rng + ?Sized,
{
    let model = reference.model();
    if competitor.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: competitor.dim(),
        });
    }
    if draws < 2 {
        return Err(Error::InvalidData(
            "need at least two Monte Carlo draws".into(),
        ));
    }
    let eps = reference.epsilon();
    let alpha = reference.alpha();
    let mut classified = 0usize;

    let mut lhs = Moments::default();
    let batch = model.sample_features(draws, rng)?;
    for x in batch.rows() {
        let eta = model.eta_star_unchecked(x);
        let ours = competitor.decide(x);
        classified += usize::from(ours.is_classified());
        let diff = expected_error(ours, eta) - expected_error(reference.decide(x), eta);
        lhs.push(diff / eps);
    }

    let (mut c, mut a0b0, mut a1b1, mut rhs) = (
        Moments::default(),
        Moments::default(),
        Moments::default(),
        Moments::default(),
    );
    let batch = model.sample_features(draws, rng)?;
    for x in batch.rows() {
        let eta = model.eta_star_unchecked(x);
        let bayes = label_of(eta);
        let ref_in = reference.decide(x).is_classified();
        let ours = competitor.decide(x);
        classified += usize::from(ours.is_classified());
        let (mut tc, mut t0, mut t1) = (0.0, 0.0, 0.0);
        match (ref_in, ours.label()) {
            (true, Some(s)) if s != bayes => tc = (2.0 * eta - 1.0).abs(),
            // A_y: oracle classifies, competitor rejects, Bayes label differs from y
            (true, None) if bayes == 1 => t0 = (eta - alpha).abs(),
            (true, None) => t1 = (1.0 - eta - alpha).abs(),
            // B_y: only the competitor classifies, with label differing from y
            (false, Some(1)) => t0 = (eta - alpha).abs(),
            (false, Some(_)) => t1 = (1.0 - eta - alpha).abs(),
            _ => {}
        }
        c.push(tc / eps);
        a0b0.push(t0 / eps);
        a1b1.push(t1 / eps);
        rhs.push((tc + t0 + t1) / eps);
    }

    let total = 2 * draws;
    let proportion = classified as f64 / total as f64;
    let se = (eps * (1.0 - eps) / total as f64).sqrt();
    if (proportion - eps).abs() > 3.0 * se {
        return Err(Error::AssumptionViolated(format!(
            "competitor classifies {proportion:.6} of draws, expected {eps} (3 SE = {:.2e})",
            3.0 * se
        )));
    }
    Ok(ExcessRiskTerms {
        lhs: lhs.mean,
        lhs_se: lhs.se(),
        c_term: c.mean,
        a0b0_term: a0b0.mean,
        a1b1_term: a1b1.mean,
        rhs_se: rhs.se(),
        competitor_proportion: proportion,
    })
}

/// Smallest `e` in `[0, 1]` with `h(e) >= c`, or `None`.
fn lower_preimage(h: &dyn Fn(f64) -> f64, c: f64) -> Option<f64> {
    if h(0.0) >= c {
        return Some(0.0);
    }
    if h(1.0) < c {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) >= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Largest `e` in `[0, 1]` with `h(e) <= c`, or `None`.
fn upper_preimage(h: &dyn Fn(f64) -> f64, c: f64) -> Option<f64> {
    if h(1.0) <= c {
        return Some(1.0);
    }
    if h(0.0) > c {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Threshold rule on the score of `transform(eta*)` under the mixture, with its
/// threshold set from the exact law so that it classifies with probability
/// `epsilon`. `transform` must be continuous and non-decreasing on `[0, 1]`.
pub fn gaussian_competitor<F>(
    params: &GaussianMixtureParams,
    description: &str,
    transform: F,
    epsilon: f64,
) -> Result<RejectClassifier>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    check_epsilon(epsilon)?;
    if params.delta() == 0.0 {
        return Err(Error::DegenerateMixture);
    }
    let h: &dyn Fn(f64) -> f64 = &transform;
    // P(g <= t) = P(1 - t <= h(eta*) <= t)
    let score_cdf = |t: f64| -> Result<f64> {
        match (lower_preimage(h, 1.0 - t), upper_preimage(h, t)) {
            (Some(a), Some(b)) if a <= b => {
                Ok(gaussian_eta_cdf(params, b)? - gaussian_eta_cdf(params, a)?)
            }
            _ => Ok(0.0),
        }
    };
    let target = 1.0 - epsilon;
    let alpha = if epsilon == 1.0 {
        0.5
    } else {
        let (mut lo, mut hi) = (0.5, 1.0);
        if score_cdf(lo)? >= target {
            hi = lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if score_cdf(mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if hi > lo && score_cdf(hi)? - score_cdf(lo)? > 1e-9 {
            return Err(Error::AssumptionViolated(format!(
                "score of `{description}` has an atom at its {target} quantile"
            )));
        }
        hi
    };
    let oracle = oracle_score_model(&GenerativeModel::gaussian(params.clone()));
    RejectClassifier::new(oracle.map_eta(description, true, transform), alpha)
}

/// Monte Carlo estimates of both sides of the oracle/plug-in bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `R(tilde Gamma) - R(Gamma*)`
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub alpha: f64,
    /// `alpha |F_{f_hat}(alpha) - F_{f*}(alpha)| / epsilon`, included in `rhs`.
    pub cdf_term: f64,
}

impl BoundCheck {
    pub fn combined_se(&self) -> f64 {
        self.lhs_se.hypot(self.rhs_se)
    }

    /// `0 <= lhs <= rhs`, each side allowed `k` combined standard errors.
    pub fn holds(&self, k: f64) -> bool {
        let tol = k * self.combined_se();
        self.lhs >= -tol && self.lhs <= self.rhs + tol
    }
}

/// Compares the set built from `eta_hat` with its own exact score law against
/// the oracle set, using three independent batches of `draws` points:
/// calibration, left side, right side.
///
/// The law of `f_hat` is estimated on the calibration batch, except when
/// `eta_hat` coincides with `eta*` on every calibration draw; then it is the
/// known law of `f*` and both sides vanish exactly.
pub fn prop5_bound_check<R: Rng + ?Sized>(
    model: &GenerativeModel,
    eta_hat: &ScoreModel,
    epsilon: f64,
    draws: usize,
    rng: &mut R,
) -> Result<BoundCheck> {
    check_epsilon(epsilon)?;
    if !model.has_continuous_score() || !eta_hat.continuity_flag() {
        return Err(Error::AssumptionViolated(
            "both score distributions must be continuous".into(),
        ));
    }
    if eta_hat.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: eta_hat.dim(),
        });
    }
    if draws < 2 {
        return Err(Error::InvalidData(
            "need at least two Monte Carlo draws".into(),
        ));
    }

    let calibration = model.sample_features(draws, rng)?;
    let identical = calibration
        .rows()
        .all(|x| eta_hat.eta_unchecked(x) == model.eta_star_unchecked(x));

    let (alpha, true_cdf) = match oracle_threshold(model, epsilon) {
        Ok(a) => (
            a,
            model
                .score_cdf(a)
                .map(|v| if epsilon == 1.0 { 0.0 } else { v }),
        ),
        Err(_) => {
            let oracle = oracle_score_model(model);
            let star = super::calibrate(&oracle, &calibration)?;
            let a = star.quantile(1.0 - epsilon)?.max(0.5);
            (if epsilon == 1.0 { 0.5 } else { a }, Some(star.evaluate(a)))
        }
    };
    let oracle = OracleConfidenceSet::with_alpha(model.clone(), epsilon, alpha)?;

    let (tilde, cdf_term, cdf_se): (Box<dyn ConfidenceRule>, f64, f64) = if identical {
        (Box::new(oracle.clone()), 0.0, 0.0)
    } else {
        let set = build_plugin(eta_hat.clone(), &calibration, epsilon)?;
        let hat_cdf: &EmpiricalCdf = set.calibration();
        let f_hat = hat_cdf.evaluate(alpha);
        let f_star = true_cdf.unwrap_or(1.0 - epsilon);
        let term = alpha * (f_hat - f_star).abs() / epsilon;
        let se = alpha / epsilon * (f_hat * (1.0 - f_hat) / draws as f64).sqrt();
        (Box::new(set), term, se)
    };

    let mut lhs = Moments::default();
    let batch = model.sample_features(draws, rng)?;
    for x in batch.rows() {
        let eta = model.eta_star_unchecked(x);
        let diff = expected_error(tilde.decide(x), eta) - expected_error(oracle.decide(x), eta);
        lhs.push(diff / epsilon);
    }

    let mut rhs = Moments::default();
    let batch = model.sample_features(draws, rng)?;
    for x in batch.rows() {
        let eta = model.eta_star_unchecked(x);
        let gap = (eta_hat.eta_unchecked(x) - eta).abs();
        let upper = (eta - alpha).abs();
        let lower = (1.0 - eta - alpha).abs();
        let mut v = 0.0;
        if gap >= upper {
            v += upper;
        }
        if gap >= lower {
            v += lower;
        }
        rhs.push(v / epsilon);
    }

    Ok(BoundCheck {
        lhs: lhs.mean,
        lhs_se: lhs.se(),
        rhs: rhs.mean + cdf_term,
        rhs_se: rhs.se().hypot(cdf_se),
        alpha,
        cdf_term,
    })
}
