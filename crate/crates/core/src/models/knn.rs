use serde::{Deserialize, Serialize};

use super::{check_training_data, Label, ModelError};

/// Euclidean k-nearest-neighbor classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub k: usize,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl KnnModel {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>, k: usize) -> Result<Self, ModelError> {
        let m = Self { rows, labels, k };
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        check_training_data(&self.rows, &self.labels).map_err(|e| ModelError::Invalid(e.to_string()))?;
        let benign = self.labels.iter().filter(|l| l.is_benign()).count();
        let smallest = benign.min(self.labels.len() - benign);
        if self.k == 0 || self.k > smallest {
            return Err(ModelError::Invalid(format!("k = {} but the smallest class has {smallest} row(s)", self.k)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// The k smallest distances to malware rows and to benign rows, each
    /// ascending.
    pub fn distances(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        self.check_dim(x)?;
        let mut malware = Vec::new();
        let mut benign = Vec::new();
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let d = euclidean(row, x);
            if label.is_benign() {
                benign.push(d);
            } else {
                malware.push(d);
            }
        }
        for v in [&mut malware, &mut benign] {
            v.sort_by(f64::total_cmp);
            v.truncate(self.k);
        }
        Ok((malware, benign))
    }

    /// Majority label among the k nearest rows; ties in the vote go to
    /// malware, ties in distance to the lower row index.
    pub fn predict(&self, x: &[f64]) -> Result<Label, ModelError> {
        self.check_dim(x)?;
        let mut scored: Vec<(f64, usize)> = self.rows.iter().enumerate().map(|(i, r)| (euclidean(r, x), i)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let benign = scored[..self.k].iter().filter(|(_, i)| self.labels[*i].is_benign()).count();
        Ok(if 2 * benign > self.k { Label::Benign } else { Label::Malware })
    }
}
