//! Ridge-penalized logistic regression fitted by damped Newton steps.

use super::{EstimatorKind, ModelInfo, Regressor, ScoreModel};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::normal::{sigmoid, softplus};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub max_iters: usize,
    /// Stop once the gradient norm of the mean penalized loss is below this.
    pub tolerance: f64,
    /// Penalty `ridge / 2 * |theta|^2`, intercept included.
    pub ridge: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tolerance: 1e-8,
            ridge: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized mean loss before the first step and after every accepted step.
    pub loss_history: Vec<f64>,
}

impl Regressor for LogisticRegression {
    fn eta(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear(x))
    }
}

impl LogisticRegression {
    fn linear(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn fit(data: &LabeledDataset, config: LogisticConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if data.features().as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let d = data.dim();
        let p = d + 1;
        let objective = Objective {
            data,
            ridge: config.ridge,
        };
        let mut theta = DVector::<f64>::zeros(p);
        let mut loss = objective.loss(&theta);
        let mut history = vec![loss];
        let mut converged = false;
        let mut iterations = 0;

        while iterations < config.max_iters {
            let (grad, hess) = objective.grad_hess(&theta);
            if grad.norm() <= config.tolerance {
                converged = true;
                break;
            }
            iterations += 1;
            let direction = match hess.cholesky() {
                Some(chol) => -chol.solve(&grad),
                None => -grad.clone(),
            };
            let slope = grad.dot(&direction);
            let direction = if slope < 0.0 {
                direction
            } else {
                -grad.clone()
            };
            let slope = grad.dot(&direction);

            // Armijo backtracking keeps the loss sequence non-increasing.
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let candidate = &theta + &direction * step;
                let l = objective.loss(&candidate);
                if l <= loss + 1e-4 * step * slope {
                    accepted = Some((candidate, l));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((candidate, l)) => {
                    theta = candidate;
                    loss = l;
                    history.push(loss);
                }
                None => {
                    // no representable decrease left
                    converged = grad.norm() <= config.tolerance.sqrt();
                    break;
                }
            }
        }

        Ok(Self {
            weights: theta.as_slice()[..d].to_vec(),
            bias: theta[d],
            iterations,
            converged,
            loss_history: history,
        })
    }
}

struct Objective<'a> {
    data: &'a LabeledDataset,
    ridge: f64,
}

impl Objective<'_> {
    fn linear(theta: &DVector<f64>, x: &[f64]) -> f64 {
        let d = x.len();
        theta[d] + x.iter().zip(theta.iter()).map(|(a, b)| a * b).sum::<f64>()
    }

    fn loss(&self, theta: &DVector<f64>) -> f64 {
        let n = self.data.len() as f64;
        let nll: f64 = self
            .data
            .iter()
            .map(|(x, y)| {
                let z = Self::linear(theta, x);
                softplus(z) - f64::from(y) * z
            })
            .sum();
        nll / n + 0.5 * self.ridge * theta.norm_squared()
    }

    fn grad_hess(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let p = theta.len();
        let n = self.data.len() as f64;
        let mut grad = DVector::<f64>::zeros(p);
        let mut hess = DMatrix::<f64>::zeros(p, p);
        let mut row = vec![0.0; p];
        for (x, y) in self.data.iter() {
            row[..p - 1].copy_from_slice(x);
            row[p - 1] = 1.0;
            let mu = sigmoid(Self::linear(theta, x));
            let r = mu - f64::from(y);
            let w = mu * (1.0 - mu);
            for i in 0..p {
                grad[i] += r * row[i];
                for j in 0..=i {
                    hess[(i, j)] += w * row[i] * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                hess[(j, i)] = hess[(i, j)];
            }
        }
        grad /= n;
        hess /= n;
        grad += theta * self.ridge;
        for i in 0..p {
            hess[(i, i)] += self.ridge;
        }
        (grad, hess)
    }
}

pub fn fit_logistic(data: &LabeledDataset, config: LogisticConfig) -> Result<ScoreModel> {
    let fit = LogisticRegression::fit(data, config)?;
    let info = ModelInfo {
        kind: EstimatorKind::Logistic,
        hyperparameters: format!(
            "ridge={}*,tolerance={}*,max_iters={}*",
            config.ridge, config.tolerance, config.max_iters
        ),
        continuous: true,
        converged: fit.converged,
    };
    Ok(ScoreModel::new(Arc::new(fit), data.dim(), info))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::GenerativeModel;
    use crate::rng::seeded;

    #[test]
    fn identical_labels_give_finite_weights() {
        let rows: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 / 10.0, (i % 7) as f64]).collect();
        let data = LabeledDataset::from_rows(&rows, vec![1; 50]).unwrap();
        let fit = LogisticRegression::fit(
            &data,
            LogisticConfig {
                ridge: 1e-3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fit.weights.iter().all(|w| w.is_finite()));
        assert!(fit.bias.is_finite());
        let model = fit_logistic(
            &data,
            LogisticConfig {
                ridge: 1e-3,
                ..Default::default()
            },
        )
        .unwrap();
        for r in &rows {
            assert!(model.eta(r).unwrap() > 0.9);
        }
    }

    #[test]
    fn symmetric_data_has_zero_intercept() {
        // y = 1{x > 0} on a grid symmetric about 0, with mirrored label noise
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 1..=50 {
            let x = i as f64 / 10.0;
            let flip = i % 5 == 0;
            rows.push([x]);
            labels.push(u8::from(!flip));
            rows.push([-x]);
            labels.push(u8::from(flip));
        }
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let fit = LogisticRegression::fit(&data, LogisticConfig::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.bias.abs() <= 1e-3, "bias {}", fit.bias);
        assert!(fit.weights[0] > 0.0);
    }

    #[test]
    fn loss_is_non_increasing() {
        for seed in 0..5 {
            let data = GenerativeModel::model2()
                .sample_labeled(300, &mut seeded(seed))
                .unwrap();
            let fit = LogisticRegression::fit(&data, LogisticConfig::default()).unwrap();
            for w in fit.loss_history.windows(2) {
                assert!(w[1] <= w[0], "{:?}", fit.loss_history);
            }
            assert!(fit.converged);
        }
    }

    #[test]
    fn recovers_linear_logit() {
        // Model 1 is well specified for logistic regression
        let data = GenerativeModel::Model1
            .sample_labeled(20_000, &mut seeded(4))
            .unwrap();
        let fit = LogisticRegression::fit(&data, LogisticConfig::default()).unwrap();
        let truth = [1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        for (w, t) in fit.weights.iter().zip(truth) {
            assert!((w - t).abs() < 0.15, "{:?}", fit.weights);
        }
        assert!(fit.bias.abs() < 0.15);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let data = GenerativeModel::model2()
            .sample_labeled(200, &mut seeded(1))
            .unwrap();
        let model = fit_logistic(
            &data,
            LogisticConfig {
                max_iters: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!model.info().converged);
    }
}
