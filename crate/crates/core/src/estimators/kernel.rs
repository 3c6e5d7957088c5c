//! Nadaraya-Watson classifier with a Gaussian kernel.

use super::{EstimatorKind, ModelInfo, Regressor, ScoreModel};
use crate::data::LabeledDataset;
use crate::error::{check_range, Result};
use std::cmp::Ordering;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRule {
    dim: usize,
    bandwidth: f64,
    /// Training rows in canonical (lexicographic) order.
    points: Vec<f64>,
    labels: Vec<u8>,
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

impl KernelRule {
    /// Training data are stored in a canonical order so that the kernel sums,
    /// and therefore the predictions, do not depend on the input order.
    pub fn fit(data: &LabeledDataset, bandwidth: f64) -> Result<Self> {
        check_range(
            "bandwidth",
            bandwidth,
            "(0, inf)",
            bandwidth > 0.0 && bandwidth.is_finite(),
        )?;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| {
            data.row(a)
                .iter()
                .zip(data.row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
                .then(data.label(a).cmp(&data.label(b)))
        });
        let sorted = data.select(&order);
        Ok(Self {
            dim: data.dim(),
            bandwidth,
            points: sorted.features().as_slice().to_vec(),
            labels: sorted.labels().to_vec(),
        })
    }
}

impl Regressor for KernelRule {
    fn eta(&self, x: &[f64]) -> f64 {
        let scale = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let dist: Vec<f64> = self
            .points
            .chunks_exact(self.dim)
            .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * scale)
            .collect();
        // shift by the nearest point so the largest weight is exactly 1
        let nearest = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let mut total = CompensatedSum::default();
        let mut positive = CompensatedSum::default();
        for (d, &y) in dist.iter().zip(&self.labels) {
            let w = (nearest - d).exp();
            total.add(w);
            if y == 1 {
                positive.add(w);
            }
        }
        (positive.value() / total.value()).clamp(0.0, 1.0)
    }
}

pub fn fit_kernel(data: &LabeledDataset, bandwidth: f64) -> Result<ScoreModel> {
    let rule = KernelRule::fit(data, bandwidth)?;
    let info = ModelInfo {
        kind: EstimatorKind::Kernel,
        hyperparameters: format!("kernel=gaussian,bandwidth={bandwidth}"),
        continuous: true,
        converged: true,
    };
    Ok(ScoreModel::new(Arc::new(rule), data.dim(), info))
}
