use serde::{Deserialize, Serialize};

use crate::attrib::AttributionVector;
use crate::models::{sat_count, Constraint, KnnModel, Label, MlpModel, ModelError, TreeEnsemble};

/// Two f1 values closer than this are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Fitness of one individual. `f2` is absent for tree ensembles, where ties
/// on `f1` go to the individual with fewer ops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessScore {
    pub f1: f64,
    pub f2: Option<f64>,
    pub ops: usize,
}

impl FitnessScore {
    /// Ranks below every real score.
    pub fn worst(ops: usize) -> Self {
        Self { f1: f64::MIN, f2: None, ops }
    }
}

/// Lexicographic dominance: higher f1, or tied f1 and higher f2.
pub fn dominates(a: &FitnessScore, b: &FitnessScore) -> bool {
    if a.f1 > b.f1 + TIE_TOLERANCE {
        return true;
    }
    if (a.f1 - b.f1).abs() > TIE_TOLERANCE {
        return false;
    }
    match (a.f2, b.f2) {
        (Some(x), Some(y)) => x > y,
        (None, None) => a.ops < b.ops,
        (Some(_), None) => true,
        (None, Some(_)) => false,
    }
}

/// Index of the first element no other element dominates.
pub fn best_index(scores: &[FitnessScore]) -> Option<usize> {
    best_among(scores, (0..scores.len()).collect::<Vec<_>>().as_slice())
}

pub(crate) fn best_among(scores: &[FitnessScore], candidates: &[usize]) -> Option<usize> {
    candidates.iter().copied().find(|&i| !candidates.iter().any(|&j| j != i && dominates(&scores[j], &scores[i])))
}

/// The classifier under attack.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Mlp(&'a MlpModel),
    /// KNN target; attributions come from `surrogate`.
    Knn {
        model: &'a KnnModel,
        surrogate: &'a MlpModel,
    },
    Ensemble {
        model: &'a TreeEnsemble,
        constraints: &'a [Constraint],
    },
}

impl Target<'_> {
    pub fn predict(&self, x: &[f64]) -> Result<Label, ModelError> {
        match self {
            Target::Mlp(m) => Ok(if m.predict(x)? >= 0.5 { Label::Benign } else { Label::Malware }),
            Target::Knn { model, .. } => model.predict(x),
            Target::Ensemble { model, .. } => model.predict(x),
        }
    }

    /// Model whose benign probability is attributed, if the mode uses f2.
    pub fn attribution_model(&self) -> Option<&MlpModel> {
        match self {
            Target::Mlp(m) => Some(m),
            Target::Knn { surrogate, .. } => Some(surrogate),
            Target::Ensemble { .. } => None,
        }
    }

    /// The first fitness component at embedding `x`.
    pub fn f1(&self, x: &[f64]) -> Result<f64, ModelError> {
        match self {
            Target::Mlp(m) => m.predict(x),
            Target::Knn { model, .. } => {
                let (malware, benign) = model.distances(x)?;
                Ok(knn_f1(&malware, &benign))
            }
            Target::Ensemble { model, constraints } => {
                if x.len() != model.n_features {
                    return Err(ModelError::DimensionMismatch { expected: model.n_features, got: x.len() });
                }
                Ok(sat_count(constraints, x) as f64)
            }
        }
    }
}

/// (1/k)·Σ (d_malware,i − d_benign,i) over the k nearest of each class.
pub fn knn_f1(malware: &[f64], benign: &[f64]) -> f64 {
    let k = malware.len().min(benign.len());
    if k == 0 {
        return 0.0;
    }
    malware.iter().zip(benign).map(|(m, b)| m - b).sum::<f64>() / k as f64
}

/// Σ φ_i·(after_i − before_i).
pub fn interpretation_fitness(phi: &AttributionVector, before: &[f64], after: &[f64]) -> f64 {
    phi.weighted_delta(before, after)
}

/// Full score at `after`, given the unperturbed embedding `before`.
pub fn score(
    target: &Target<'_>,
    phi: Option<&AttributionVector>,
    before: &[f64],
    after: &[f64],
    ops: usize,
) -> Result<FitnessScore, ModelError> {
    let f1 = target.f1(after)?;
    let f2 = match target {
        Target::Ensemble { .. } => None,
        _ => Some(phi.map_or(0.0, |p| interpretation_fitness(p, before, after))),
    };
    Ok(FitnessScore { f1, f2, ops })
}
