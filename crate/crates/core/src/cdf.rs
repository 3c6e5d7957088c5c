//! Empirical CDF of score samples.
//!
//! Ties are counted with `<=`, so `evaluate(t) = #{i : s_i <= t} / N` exactly,
//! and `quantile` is the generalized inverse restricted to observed scores.

use crate::error::{check_range, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    /// Sort a copy of `scores`. Input order is irrelevant.
    pub fn build(scores: &[f64]) -> Result<Self> {
        Self::from_vec(scores.to_vec())
    }

    pub fn from_vec(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Empty("score sample"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("score sample"));
        }
        scores.sort_by(f64::total_cmp);
        Ok(Self { sorted: scores })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_scores(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of scores `<= t`.
    pub fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|&s| s <= t)
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.sorted.len() as f64
    }

    /// Smallest observed score `t` with `evaluate(t) >= p`; the minimum for `p = 0`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_range("p", p, "[0, 1]", (0.0..=1.0).contains(&p))?;
        let n = self.sorted.len();
        // smallest k in 1..=n with k/n >= p, using the same division as evaluate
        let (mut lo, mut hi) = (1usize, n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if mid as f64 / n as f64 >= p {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(self.sorted[lo - 1])
    }
}

/// DKW radius: `P(sup |F_N - F| >= gamma) <= delta` for
/// `gamma = sqrt(ln(2/delta) / (2N))`.
pub fn dkw_radius(n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Empty("sample size"));
    }
    check_range("delta", delta, "(0, 1)", delta > 0.0 && delta < 1.0)?;
    Ok(((2.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Inverse of [`dkw_radius`]: `2 exp(-2 N gamma^2)`.
pub fn dkw_confidence(n: usize, radius: f64) -> f64 {
    2.0 * (-2.0 * n as f64 * radius * radius).exp()
}
