//! Row-major feature matrices with and without labels.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One draw from a generative model. `y` is `None` for unlabeled draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Option<u8>,
}

/// `n` feature vectors of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledDataset {
    dim: usize,
    features: Vec<f64>,
}

impl UnlabeledDataset {
    pub fn new(dim: usize, features: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData(
                "feature dimension must be positive".into(),
            ));
        }
        if features.is_empty() {
            return Err(Error::Empty("feature matrix"));
        }
        if !features.len().is_multiple_of(dim) {
            return Err(Error::InvalidData(format!(
                "{} values do not form rows of dimension {dim}",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(Self { dim, features })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .ok_or(Error::Empty("feature matrix"))?
            .as_ref()
            .len();
        let mut features = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::new(dim, features)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.features.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.features
    }
}

/// Feature matrix plus binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: UnlabeledDataset,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let features = UnlabeledDataset::new(dim, features)?;
        if labels.len() != features.len() {
            return Err(Error::InvalidData(format!(
                "{} labels for {} rows",
                labels.len(),
                features.len()
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidData("labels must be 0 or 1".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: Vec<u8>) -> Result<Self> {
        let features = UnlabeledDataset::from_rows(rows)?;
        let dim = features.dim();
        Self::new(dim, features.features, labels)
    }

    /// Collect labeled samples; fails if any sample lacks a label.
    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("sample list"))?;
        let dim = first.x.len();
        let mut features = Vec::with_capacity(dim * samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for s in samples {
            if s.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.x.len(),
                });
            }
            features.extend_from_slice(&s.x);
            labels.push(s.y.ok_or_else(|| Error::InvalidData("unlabeled sample".into()))?);
        }
        Self::new(dim, features, labels)
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn features(&self) -> &UnlabeledDataset {
        &self.features
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], u8)> + '_ {
        self.features.rows().zip(self.labels.iter().copied())
    }

    /// Drop the labels.
    pub fn into_unlabeled(self) -> UnlabeledDataset {
        self.features
    }

    /// Rows selected by index, in the given order (duplicates allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        let dim = self.dim();
        let mut features = Vec::with_capacity(indices.len() * dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            features: UnlabeledDataset { dim, features },
            labels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            UnlabeledDataset::new(2, vec![]),
            Err(Error::Empty(_))
        ));
        assert!(UnlabeledDataset::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(matches!(
            UnlabeledDataset::new(1, vec![f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(LabeledDataset::new(1, vec![0.0, 1.0], vec![0, 2]).is_err());
        assert!(LabeledDataset::new(1, vec![0.0, 1.0], vec![0]).is_err());
        assert!(LabeledDataset::from_rows(&[vec![0.0, 1.0], vec![1.0]], vec![0, 1]).is_err());
    }

    #[test]
    fn rows_and_select() {
        let d = LabeledDataset::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], vec![0, 1, 1])
            .unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.row(1), &[3.0, 4.0]);
        let s = d.select(&[2, 2, 0]);
        assert_eq!(s.labels(), &[1, 1, 0]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.row(2), &[1.0, 2.0]);
    }
}
