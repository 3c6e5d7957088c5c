//! Synthetic generative models with known regression function.
//!
//! Three simulation models plus a two-class Gaussian mixture with shared
//! covariance and equal class priors. For the mixture and for the
//! piecewise-constant model the distribution of the score `f*(X)` is known in
//! closed form, which makes them the reference cases for the oracle sets.

use crate::data::{LabeledDataset, Sample, UnlabeledDataset};
use crate::error::{check_epsilon, check_range, Error, Result};
use crate::normal::{logit, phi, sigmoid};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Logit scale of Model 2 that reproduces the published simulation tables.
pub const MODEL2_TABLE_LOGIT_SCALE: f64 = 0.5;

/// Parameters of `X | Y=y ~ N(mu_y, sigma)` with `P(Y=1) = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct GaussianMixtureParams {
    mu0: DVector<f64>,
    mu1: DVector<f64>,
    sigma: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    /// `sigma^{-1} (mu1 - mu0)`
    direction: DVector<f64>,
    midpoint: DVector<f64>,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct MixtureRepr {
    mu0: Vec<f64>,
    mu1: Vec<f64>,
    sigma: Vec<Vec<f64>>,
}

impl TryFrom<MixtureRepr> for GaussianMixtureParams {
    type Error = Error;

    fn try_from(r: MixtureRepr) -> Result<Self> {
        GaussianMixtureParams::new(r.mu0, r.mu1, r.sigma)
    }
}

impl From<GaussianMixtureParams> for MixtureRepr {
    fn from(p: GaussianMixtureParams) -> Self {
        let d = p.dim();
        MixtureRepr {
            mu0: p.mu0.iter().copied().collect(),
            mu1: p.mu1.iter().copied().collect(),
            sigma: (0..d)
                .map(|i| (0..d).map(|j| p.sigma[(i, j)]).collect())
                .collect(),
        }
    }
}

impl GaussianMixtureParams {
    pub fn new(mu0: Vec<f64>, mu1: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        let d = mu0.len();
        if d == 0 {
            return Err(Error::Empty("mean vector"));
        }
        if mu1.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: mu1.len(),
            });
        }
        if sigma.len() != d || sigma.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidData(format!("covariance must be {d}x{d}")));
        }
        let all = mu0.iter().chain(&mu1).chain(sigma.iter().flatten());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mixture parameters"));
        }
        let asymmetric = (0..d)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .any(|(i, j)| (sigma[i][j] - sigma[j][i]).abs() > 1e-12 * (1.0 + sigma[i][j].abs()));
        if asymmetric {
            return Err(Error::InvalidData("covariance is not symmetric".into()));
        }
        let sigma = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
        let mu0 = DVector::from_vec(mu0);
        let mu1 = DVector::from_vec(mu1);
        let chol = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let diff = &mu1 - &mu0;
        let direction = chol.solve(&diff);
        let delta = diff.dot(&direction).max(0.0).sqrt();
        let midpoint = (&mu0 + &mu1) * 0.5;
        Ok(Self {
            chol_lower: chol.l(),
            mu0,
            mu1,
            sigma,
            direction,
            midpoint,
            delta,
        })
    }

    /// One-dimensional mixture `N(0,1)` vs `N(delta,1)`.
    pub fn canonical(delta: f64) -> Result<Self> {
        check_range(
            "delta",
            delta,
            "[0, inf)",
            delta >= 0.0 && delta.is_finite(),
        )?;
        Self::new(vec![0.0], vec![delta], vec![vec![1.0]])
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    /// Mahalanobis distance between the class means.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu0(&self) -> &[f64] {
        self.mu0.as_slice()
    }

    pub fn mu1(&self) -> &[f64] {
        self.mu1.as_slice()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// `log p1(x) - log p0(x)`; linear in `x` because the covariance is shared.
    pub fn log_odds(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.midpoint.iter())
            .zip(self.direction.iter())
            .map(|((xi, mi), wi)| wi * (xi - mi))
            .sum()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) -> u8 {
        let y = u8::from(rng.random_bool(0.5));
        let mean = if y == 1 { &self.mu1 } else { &self.mu0 };
        let z: Vec<f64> = (0..self.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        for i in 0..self.dim() {
            let mut v = mean[i];
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                v += self.chol_lower[(i, j)] * zj;
            }
            out.push(v);
        }
        y
    }
}

/// A data-generating distribution with known `eta*(x) = P(Y=1 | X=x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum GenerativeModel {
    /// Ten iid uniforms on `[0,1]`, `logit eta* = x1 - x2 - x3 + x9`.
    Model1,
    /// Three iid standard normals,
    /// `logit eta* = scale * (x1^2 + x2/2 + sin(x1 + x3) + 3 x3)`.
    Model2 {
        logit_scale: f64,
    },
    /// One uniform on `[0,1]`, `eta*` piecewise constant in `{1/5, 2/5, 3/5, 4/5}`.
    Model3,
    GaussianMixture(GaussianMixtureParams),
}

impl GenerativeModel {
    /// Model 2 as used for the simulation tables.
    pub fn model2() -> Self {
        GenerativeModel::Model2 {
            logit_scale: MODEL2_TABLE_LOGIT_SCALE,
        }
    }

    /// Model 2 with the unscaled logit.
    pub fn model2_unscaled() -> Self {
        GenerativeModel::Model2 { logit_scale: 1.0 }
    }

    pub fn gaussian(params: GaussianMixtureParams) -> Self {
        GenerativeModel::GaussianMixture(params)
    }

    pub fn dim(&self) -> usize {
        match self {
            GenerativeModel::Model1 => 10,
            GenerativeModel::Model2 { .. } => 3,
            GenerativeModel::Model3 => 1,
            GenerativeModel::GaussianMixture(p) => p.dim(),
        }
    }

    /// Short identifier used in reports.
    pub fn name(&self) -> String {
        match self {
            GenerativeModel::Model1 => "1".into(),
            GenerativeModel::Model2 { logit_scale } if *logit_scale == MODEL2_TABLE_LOGIT_SCALE => {
                "2".into()
            }
            GenerativeModel::Model2 { logit_scale } => format!("2[scale={logit_scale}]"),
            GenerativeModel::Model3 => "3".into(),
            GenerativeModel::GaussianMixture(p) => format!("gauss[delta={}]", p.delta()),
        }
    }

    /// Whether `f*(X)` has a continuous distribution.
    pub fn has_continuous_score(&self) -> bool {
        match self {
            GenerativeModel::Model3 => false,
            GenerativeModel::GaussianMixture(p) => p.delta() > 0.0,
            _ => true,
        }
    }

    pub fn eta_star(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.eta_star_unchecked(x))
    }

    pub(crate) fn eta_star_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            GenerativeModel::Model1 => sigmoid(x[0] - x[1] - x[2] + x[8]),
            GenerativeModel::Model2 { logit_scale } => {
                let l = x[0] * x[0] + x[1] / 2.0 + (x[0] + x[2]).sin() + 3.0 * x[2];
                sigmoid(logit_scale * l)
            }
            GenerativeModel::Model3 => {
                let u = x[0];
                if u <= 0.25 {
                    0.2
                } else if u <= 0.5 {
                    0.4
                } else if u <= 0.75 {
                    0.6
                } else {
                    0.8
                }
            }
            GenerativeModel::GaussianMixture(p) => sigmoid(p.log_odds(x)),
        }
    }

    fn draw_features<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) -> Option<u8> {
        match self {
            GenerativeModel::Model1 | GenerativeModel::Model3 => {
                out.extend((0..self.dim()).map(|_| rng.random::<f64>()));
                None
            }
            GenerativeModel::Model2 { .. } => {
                out.extend((0..3).map(|_| rng.sample::<f64, _>(StandardNormal)));
                None
            }
            GenerativeModel::GaussianMixture(p) => Some(p.draw(rng, out)),
        }
    }

    /// `count` iid labeled draws.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<Sample>> {
        let data = self.sample_labeled(count, rng)?;
        Ok(data
            .iter()
            .map(|(x, y)| Sample {
                x: x.to_vec(),
                y: Some(y),
            })
            .collect())
    }

    pub fn sample_labeled<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<LabeledDataset> {
        if count == 0 {
            return Err(Error::Empty("sample count"));
        }
        let d = self.dim();
        let mut features = Vec::with_capacity(count * d);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let y = match self.draw_features(rng, &mut features) {
                Some(y) => y,
                None => {
                    let eta = self.eta_star_unchecked(&features[features.len() - d..]);
                    u8::from(rng.random::<f64>() < eta)
                }
            };
            labels.push(y);
        }
        LabeledDataset::new(d, features, labels)
    }

    /// `count` iid feature vectors (labels are not drawn, or discarded for the mixture).
    pub fn sample_features<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<UnlabeledDataset> {
        if count == 0 {
            return Err(Error::Empty("sample count"));
        }
        let mut features = Vec::with_capacity(count * self.dim());
        for _ in 0..count {
            self.draw_features(rng, &mut features);
        }
        UnlabeledDataset::new(self.dim(), features)
    }

    /// Exact `F_{f*}(alpha)` where a closed form exists (Model 3 and the mixture).
    pub fn score_cdf(&self, alpha: f64) -> Option<f64> {
        match self {
            GenerativeModel::Model3 => Some(model3_score_cdf(alpha)),
            GenerativeModel::GaussianMixture(p) => {
                if alpha < 0.5 {
                    Some(0.0)
                } else if alpha >= 1.0 {
                    Some(1.0)
                } else if p.delta() == 0.0 {
                    // f* is identically 1/2
                    Some(1.0)
                } else {
                    Some(score_cdf_at_log_odds(p.delta(), logit(alpha)))
                }
            }
            _ => None,
        }
    }
}

/// `f*` takes the values 3/5 and 4/5 with probability 1/2 each.
fn model3_score_cdf(alpha: f64) -> f64 {
    const TOL: f64 = 1e-9;
    if alpha < 0.6 - TOL {
        0.0
    } else if alpha < 0.8 - TOL {
        0.5
    } else {
        1.0
    }
}

/// `P(|log-odds| <= t)` under the mixture, `t >= 0`.
fn score_cdf_at_log_odds(delta: f64, t: f64) -> f64 {
    (phi(delta / 2.0 + t / delta) - phi(delta / 2.0 - t / delta)).clamp(0.0, 1.0)
}

/// Closed-form CDF of `f*(X)` under the mixture.
pub fn gaussian_score_cdf(params: &GaussianMixtureParams, alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, "[1/2, 1)", (0.5..1.0).contains(&alpha))?;
    if params.delta() == 0.0 {
        return Err(Error::DegenerateMixture);
    }
    if alpha == 0.5 {
        return Ok(0.0);
    }
    Ok(score_cdf_at_log_odds(params.delta(), logit(alpha)))
}

/// Generalized inverse of [`gaussian_score_cdf`]: the smallest `alpha` with
/// `F(alpha) >= p`. `p = 0` maps to `1/2`.
pub fn gaussian_score_quantile(params: &GaussianMixtureParams, p: f64) -> Result<f64> {
    check_range("p", p, "[0, 1)", (0.0..1.0).contains(&p))?;
    let delta = params.delta();
    if delta == 0.0 {
        return Err(Error::DegenerateMixture);
    }
    if p == 0.0 {
        return Ok(0.5);
    }
    // bracket in log-odds space
    let mut lo = 0.0;
    let mut hi = 1.0;
    while score_cdf_at_log_odds(delta, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if score_cdf_at_log_odds(delta, mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(sigmoid(hi))
}

/// `P(eta*(X) <= p)` under the mixture. The log-odds is
/// `N(+-delta^2/2, delta^2)` given the class.
pub fn gaussian_eta_cdf(params: &GaussianMixtureParams, p: f64) -> Result<f64> {
    check_range("p", p, "[0, 1]", (0.0..=1.0).contains(&p))?;
    let delta = params.delta();
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    if delta == 0.0 {
        return Ok(if p >= 0.5 { 1.0 } else { 0.0 });
    }
    let t = logit(p) / delta;
    Ok(0.5 * (phi(t - delta / 2.0) + phi(t + delta / 2.0)))
}

/// Risk of the oracle epsilon-confidence set under the mixture:
/// `P(Phi(Z) + Phi(Z + delta) <= epsilon) / epsilon`.
///
/// The map `z -> Phi(z) + Phi(z + delta)` is strictly increasing, so the event
/// is `{Z <= z*}` with `z*` found by bisection.
pub fn gaussian_oracle_risk(params: &GaussianMixtureParams, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let delta = params.delta();
    if delta == 0.0 {
        // eta* = 1/2 everywhere
        return Ok(0.5);
    }
    let g = |z: f64| phi(z) + phi(z + delta);
    let (mut lo, mut hi) = (-40.0 - delta, 40.0);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = if (g(lo) - epsilon).abs() < (g(hi) - epsilon).abs() {
        lo
    } else {
        hi
    };
    Ok(phi(z) / epsilon)
}

/// `(classified proportion, risk)` of the oracle set for Model 3.
pub fn model3_oracle(epsilon: f64) -> Result<(f64, f64)> {
    check_epsilon(epsilon)?;
    if epsilon >= 0.5 {
        Ok((1.0, 0.3))
    } else {
        Ok((0.5, 0.2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    fn mixture(delta: f64) -> GaussianMixtureParams {
        GaussianMixtureParams::canonical(delta).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(GenerativeModel::Model1.dim(), 10);
        assert_eq!(GenerativeModel::model2().dim(), 3);
        assert_eq!(GenerativeModel::Model3.dim(), 1);
        let p = GaussianMixtureParams::new(vec![0.0; 4], vec![1.0; 4], identity(4)).unwrap();
        assert_eq!(GenerativeModel::gaussian(p).dim(), 4);
    }

    fn identity(d: usize) -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect())
            .collect()
    }

    #[test]
    fn covariance_must_be_positive_definite() {
        let bad = GaussianMixtureParams::new(
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        );
        assert_eq!(bad.unwrap_err(), Error::NotPositiveDefinite);
        let asym = GaussianMixtureParams::new(
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![vec![1.0, 0.5], vec![0.0, 1.0]],
        );
        assert!(asym.is_err());
    }

    #[test]
    fn delta_is_mahalanobis_norm() {
        let p = GaussianMixtureParams::new(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![vec![2.0, 0.5], vec![0.5, 1.0]],
        )
        .unwrap();
        // inverse of [[2, .5], [.5, 1]] is [[1, -.5], [-.5, 2]] / 1.75
        let expected = ((1.0 - 0.5 - 0.5 + 2.0) / 1.75f64).sqrt();
        assert_abs_diff_eq!(p.delta(), expected, epsilon = 1e-14);
    }

    #[test]
    fn eta_star_examples() {
        assert_eq!(GenerativeModel::Model1.eta_star(&[0.0; 10]).unwrap(), 0.5);
        assert_eq!(GenerativeModel::Model3.eta_star(&[0.3]).unwrap(), 0.4);
        assert_eq!(GenerativeModel::Model3.eta_star(&[0.25]).unwrap(), 0.2);
        assert_eq!(GenerativeModel::Model3.eta_star(&[0.6]).unwrap(), 0.6);
        assert_eq!(GenerativeModel::Model3.eta_star(&[0.9]).unwrap(), 0.8);
        // mpmath: 1 / (1 + exp(-(1 + sin 1)))
        let v = GenerativeModel::model2_unscaled()
            .eta_star(&[1.0, 0.0, 0.0])
            .unwrap();
        assert_abs_diff_eq!(v, 0.863122585339241, epsilon = 1e-12);
        let v = GenerativeModel::model2()
            .eta_star(&[1.0, 0.0, 0.0])
            .unwrap();
        assert_abs_diff_eq!(v, 0.715191943642480, epsilon = 1e-12);
        assert!(matches!(
            GenerativeModel::Model1.eta_star(&[0.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 10,
                got: 3
            })
        ));
    }

    #[test]
    fn gaussian_eta_survives_extreme_separation() {
        let p = mixture(60.0);
        let m = GenerativeModel::gaussian(p);
        let e = m.eta_star(&[60.0]).unwrap();
        assert_eq!(e, 1.0);
        let e = m.eta_star(&[0.0]).unwrap();
        assert!((0.0..1e-300).contains(&e));
        assert_eq!(m.eta_star(&[30.0]).unwrap(), 0.5);
    }

    #[test]
    fn eta_star_is_deterministic() {
        let m = GenerativeModel::model2();
        let x = [0.3, -1.2, 0.7];
        assert_eq!(
            m.eta_star(&x).unwrap().to_bits(),
            m.eta_star(&x).unwrap().to_bits()
        );
    }

    #[test]
    fn model3_samples_on_support() {
        let mut rng = seeded(11);
        let s = GenerativeModel::Model3.sample(4, &mut rng).unwrap();
        assert_eq!(s.len(), 4);
        for d in s {
            assert!((0.0..=1.0).contains(&d.x[0]));
            assert!(matches!(d.y, Some(0) | Some(1)));
        }
        assert!(GenerativeModel::Model3.sample(0, &mut rng).is_err());
    }

    #[test]
    fn symmetric_mixture_has_balanced_labels() {
        let m = GenerativeModel::gaussian(mixture(0.0));
        let d = m.sample_labeled(100_000, &mut seeded(3)).unwrap();
        let in_region: Vec<u8> = d
            .iter()
            .filter(|(x, _)| x[0] > 0.5)
            .map(|(_, y)| y)
            .collect();
        let freq = in_region.iter().map(|&y| f64::from(y)).sum::<f64>() / in_region.len() as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn model1_is_hard() {
        let m = GenerativeModel::Model1;
        let x = m.sample_features(100_000, &mut seeded(5)).unwrap();
        let frac = x
            .rows()
            .filter(|r| (0.4..=0.6).contains(&m.eta_star(r).unwrap()))
            .count() as f64
            / x.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn labels_follow_eta_in_bins() {
        for m in [
            GenerativeModel::Model1,
            GenerativeModel::model2(),
            GenerativeModel::Model3,
        ] {
            let d = m.sample_labeled(200_000, &mut seeded(21)).unwrap();
            let mut ones = [0.0f64; 10];
            let mut count = [0.0f64; 10];
            let mut eta_sum = [0.0f64; 10];
            for (x, y) in d.iter() {
                let e = m.eta_star(x).unwrap();
                let b = ((e * 10.0) as usize).min(9);
                ones[b] += f64::from(y);
                count[b] += 1.0;
                eta_sum[b] += e;
            }
            for b in 0..10 {
                if count[b] < 100.0 {
                    continue;
                }
                let p = eta_sum[b] / count[b];
                let se = (p * (1.0 - p) / count[b]).sqrt();
                let freq = ones[b] / count[b];
                assert!(
                    (freq - p).abs() <= 3.0 * se + 1e-12,
                    "{} bin {b}: {freq} vs {p}",
                    m.name()
                );
            }
        }
    }

    #[test]
    fn score_cdf_examples() {
        let p = mixture(2.0);
        assert_eq!(gaussian_score_cdf(&p, 0.5).unwrap(), 0.0);
        // mpmath: ncdf(1 + ln 9 / 2) - ncdf(1 - ln 9 / 2)
        assert_abs_diff_eq!(
            gaussian_score_cdf(&p, 0.9).unwrap(),
            0.521351397581956,
            epsilon = 1e-12
        );
        assert!(gaussian_score_cdf(&p, 1.0 - 1e-15).unwrap() > 1.0 - 1e-9);
        assert!(gaussian_score_cdf(&p, 1.0).is_err());
        assert!(gaussian_score_cdf(&p, 0.49).is_err());
        assert_eq!(
            gaussian_score_cdf(&mixture(0.0), 0.7).unwrap_err(),
            Error::DegenerateMixture
        );
    }

    #[test]
    fn score_cdf_monotone_on_grid() {
        for delta in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let p = mixture(delta);
            let mut prev = 0.0;
            for i in 0..1000 {
                let a = 0.5 + 0.5 * i as f64 / 1000.0;
                let v = gaussian_score_cdf(&p, a).unwrap();
                assert!(v >= prev, "delta {delta} alpha {a}");
                prev = v;
            }
        }
    }

    #[test]
    fn score_quantile_inverts_cdf() {
        let p = mixture(2.0);
        assert_eq!(gaussian_score_quantile(&p, 0.0).unwrap(), 0.5);
        for q in [0.01, 0.1, 0.5, 0.9, 0.999] {
            let a = gaussian_score_quantile(&p, q).unwrap();
            assert_abs_diff_eq!(gaussian_score_cdf(&p, a).unwrap(), q, epsilon = 1e-10);
        }
    }

    #[test]
    fn empirical_score_distribution_matches_closed_form() {
        let p = mixture(2.0);
        let m = GenerativeModel::gaussian(p.clone());
        let x = m.sample_features(1_000_000, &mut seeded(9)).unwrap();
        let mut f: Vec<f64> = x
            .rows()
            .map(|r| {
                let e = m.eta_star(r).unwrap();
                e.max(1.0 - e)
            })
            .collect();
        f.sort_by(f64::total_cmp);
        let n = f.len() as f64;
        let mut sup: f64 = 0.0;
        for (i, &v) in f.iter().enumerate() {
            let v = v.min(1.0 - 1e-16);
            let c = gaussian_score_cdf(&p, v).unwrap();
            sup = sup
                .max((c - i as f64 / n).abs())
                .max((c - (i + 1) as f64 / n).abs());
        }
        assert!(sup < 0.005, "sup distance {sup}");
    }

    #[test]
    fn oracle_risk_examples() {
        for eps in [0.05, 0.3, 0.77, 1.0] {
            assert_eq!(gaussian_oracle_risk(&mixture(0.0), eps).unwrap(), 0.5);
        }
        for delta in [0.5, 1.0, 2.0, 4.0] {
            let r = gaussian_oracle_risk(&mixture(delta), 1.0).unwrap();
            assert_abs_diff_eq!(r, 1.0 - phi(delta / 2.0), epsilon = 1e-12);
        }
        // mpmath: ncdf(1) complement
        assert_abs_diff_eq!(
            gaussian_oracle_risk(&mixture(2.0), 1.0).unwrap(),
            0.158655253931457,
            epsilon = 1e-12
        );
        // numpy Monte Carlo, 1e7 draws: 0.040538 with standard error 8.9125e-5
        let r = gaussian_oracle_risk(&mixture(2.0), 0.5).unwrap();
        assert!((r - 0.040538).abs() <= 3.0 * 8.9125e-5, "{r}");
        assert!(gaussian_oracle_risk(&mixture(2.0), 0.0).is_err());
        assert!(gaussian_oracle_risk(&mixture(2.0), 1.5).is_err());
    }

    #[test]
    fn oracle_risk_monotone_in_epsilon_and_delta() {
        let deltas = [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0];
        for (k, &delta) in deltas.iter().enumerate() {
            let p = mixture(delta);
            let mut prev = 0.0;
            for i in 1..=100 {
                let eps = i as f64 / 100.0;
                let r = gaussian_oracle_risk(&p, eps).unwrap();
                assert!(r >= prev - 1e-12, "delta {delta} eps {eps}");
                prev = r;
                if k > 0 {
                    let wider = gaussian_oracle_risk(&mixture(deltas[k - 1]), eps).unwrap();
                    assert!(r <= wider + 1e-12, "delta {delta} eps {eps}");
                }
            }
        }
    }

    #[test]
    fn eta_law_matches_score_law() {
        // F_{f*}(a) = P(1 - a <= eta* <= a) for a continuous law
        let p = mixture(2.0);
        for a in [0.55, 0.7, 0.9, 0.99] {
            let via_eta = gaussian_eta_cdf(&p, a).unwrap() - gaussian_eta_cdf(&p, 1.0 - a).unwrap();
            assert_abs_diff_eq!(via_eta, gaussian_score_cdf(&p, a).unwrap(), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(gaussian_eta_cdf(&p, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(gaussian_eta_cdf(&mixture(0.0), 0.4).unwrap(), 0.0);
        assert!(gaussian_eta_cdf(&p, 1.2).is_err());
    }

    #[test]
    fn model3_oracle_regimes() {
        assert_eq!(model3_oracle(0.7).unwrap(), (1.0, 0.3));
        assert_eq!(model3_oracle(0.2).unwrap(), (0.5, 0.2));
        assert_eq!(model3_oracle(0.5).unwrap(), (1.0, 0.3));
        assert!(model3_oracle(0.0).is_err());
    }

    #[test]
    fn model3_score_cdf_has_two_atoms() {
        let m = GenerativeModel::Model3;
        assert_eq!(m.score_cdf(0.59), Some(0.0));
        assert_eq!(m.score_cdf(1.0 - 0.4), Some(0.5));
        assert_eq!(m.score_cdf(1.0 - 0.2), Some(1.0));
        assert_eq!(GenerativeModel::Model1.score_cdf(0.7), None);
    }
}
