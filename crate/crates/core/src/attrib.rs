//! Permutation-sampling Shapley attribution for black-box scores.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::Label;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttribError {
    #[error("dimension mismatch: baseline has {baseline} features, input has {input}")]
    DimensionMismatch { baseline: usize, input: usize },
    #[error("n_samples must be at least 1")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub values: Vec<f64>,
    pub baseline: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl AttributionVector {
    /// Σ φ_i·(after_i − before_i).
    pub fn weighted_delta(&self, before: &[f64], after: &[f64]) -> f64 {
        self.values.iter().zip(before.iter().zip(after)).map(|(p, (b, a))| p * (a - b)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    BenignMean,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapleyConfig {
    pub n_samples: usize,
    pub baseline: BaselineKind,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        Self { n_samples: 200, baseline: BaselineKind::BenignMean }
    }
}

/// Element-wise mean of the benign rows; zeros if there are none.
pub fn benign_centroid(data: &[Vec<f64>], labels: &[Label]) -> Vec<f64> {
    let dim = data.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for (row, _) in data.iter().zip(labels).filter(|(_, l)| l.is_benign()) {
        sum.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    sum
}

pub fn make_baseline(kind: BaselineKind, data: &[Vec<f64>], labels: &[Label]) -> Vec<f64> {
    match kind {
        BaselineKind::BenignMean => benign_centroid(data, labels),
        BaselineKind::Zero => vec![0.0; data.first().map_or(0, Vec::len)],
    }
}

/// Averages marginal contributions over `n_samples` permutations. Odd-numbered
/// samples reuse the previous permutation reversed. Features equal to the
/// baseline contribute exactly zero and are never evaluated. Each permutation
/// telescopes to f(x) − f(baseline), so the estimate is efficient by
/// construction.
pub fn shapley_estimate<F>(
    f: F,
    baseline: &[f64],
    x: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<AttributionVector, AttribError>
where
    F: Fn(&[f64]) -> f64,
{
    if baseline.len() != x.len() {
        return Err(AttribError::DimensionMismatch { baseline: baseline.len(), input: x.len() });
    }
    if n_samples == 0 {
        return Err(AttribError::NoSamples);
    }
    let mut values = vec![0.0; x.len()];
    let mut active: Vec<usize> = (0..x.len()).filter(|&i| x[i] != baseline[i]).collect();
    if !active.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f_base = f(baseline);
        let mut point = baseline.to_vec();
        for s in 0..n_samples {
            if s % 2 == 0 {
                active.shuffle(&mut rng);
            } else {
                active.reverse();
            }
            point.copy_from_slice(baseline);
            let mut prev = f_base;
            for &i in &active {
                point[i] = x[i];
                let cur = f(&point);
                values[i] += cur - prev;
                prev = cur;
            }
        }
        values.iter_mut().for_each(|v| *v /= n_samples as f64);
    }
    Ok(AttributionVector { values, baseline: baseline.to_vec(), n_samples, seed })
}
