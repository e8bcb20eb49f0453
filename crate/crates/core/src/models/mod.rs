//! Desk-scale classifiers over feature vectors.
//!
//! Every model answers the same question: is this embedding benign? The MLP
//! reports a benign probability, KNN exposes per-class neighbor distances,
//! and tree ensembles expose their decision paths as interval constraints.

mod constraint;
mod knn;
mod mlp;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use constraint::{extract_benign_constraints, sat_count, Constraint, Interval};
pub use knn::KnnModel;
pub use mlp::{Activation, Layer, MlpConfig, MlpModel, TrainReport};
pub use tree::{
    adaboost_train, forest_train, AdaBoostConfig, DecisionTree, EnsembleMode, ForestConfig, TreeEnsemble, TreeNode,
};

/// Current model file version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Malware,
    Benign,
}

impl Label {
    pub fn is_benign(self) -> bool {
        self == Label::Benign
    }

    /// 1.0 for benign, 0.0 for malware.
    pub fn target(self) -> f64 {
        if self.is_benign() {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model parse error: {0}")]
    Parse(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Checks that a labeled matrix is rectangular, finite and has both classes.
pub(crate) fn check_training_data(data: &[Vec<f64>], labels: &[Label]) -> Result<usize, ModelError> {
    if data.len() != labels.len() {
        return Err(ModelError::DegenerateData(format!("{} rows but {} labels", data.len(), labels.len())));
    }
    let dim = data.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(ModelError::DegenerateData("no features".into()));
    }
    if let Some(row) = data.iter().find(|r| r.len() != dim) {
        return Err(ModelError::DimensionMismatch { expected: dim, got: row.len() });
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ModelError::DegenerateData("non-finite feature value".into()));
    }
    let benign = labels.iter().filter(|l| l.is_benign()).count();
    if benign == 0 || benign == labels.len() {
        return Err(ModelError::DegenerateData("both classes must be present".into()));
    }
    Ok(dim)
}

/// Any trained classifier, as stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Mlp(MlpModel),
    Knn(KnnModel),
    Ensemble(TreeEnsemble),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Mlp(_) => "mlp",
            Model::Knn(_) => "knn",
            Model::Ensemble(e) => match e.mode {
                EnsembleMode::RandomForest => "random_forest",
                EnsembleMode::AdaBoost => "adaboost",
            },
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Mlp(m) => m.input_dim,
            Model::Knn(m) => m.dim(),
            Model::Ensemble(e) => e.n_features,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label, ModelError> {
        match self {
            Model::Mlp(m) => Ok(if m.predict(x)? >= 0.5 { Label::Benign } else { Label::Malware }),
            Model::Knn(m) => m.predict(x),
            Model::Ensemble(e) => e.predict(x),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match self {
            Model::Mlp(m) => m.validate(),
            Model::Knn(m) => m.validate(),
            Model::Ensemble(e) => e.validate(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    kind: String,
    version: u32,
    payload: serde_json::Value,
}

pub fn model_save(model: &Model) -> Vec<u8> {
    let payload = match model {
        Model::Mlp(m) => serde_json::to_value(m),
        Model::Knn(m) => serde_json::to_value(m),
        Model::Ensemble(e) => serde_json::to_value(e),
    }
    .expect("model serialization cannot fail");
    let env = Envelope { kind: model.kind().to_owned(), version: MODEL_FORMAT_VERSION, payload };
    let mut out = serde_json::to_vec(&env).expect("model serialization cannot fail");
    out.push(b'\n');
    out
}

pub fn model_load(bytes: &[u8]) -> Result<Model, ModelError> {
    let env: Envelope = serde_json::from_slice(bytes).map_err(|e| ModelError::Parse(e.to_string()))?;
    if env.version != MODEL_FORMAT_VERSION {
        return Err(ModelError::VersionMismatch { found: env.version, expected: MODEL_FORMAT_VERSION });
    }
    let parse = |e: serde_json::Error| ModelError::Parse(e.to_string());
    let model = match env.kind.as_str() {
        "mlp" => Model::Mlp(serde_json::from_value(env.payload).map_err(parse)?),
        "knn" => Model::Knn(serde_json::from_value(env.payload).map_err(parse)?),
        "random_forest" | "adaboost" => {
            let e: TreeEnsemble = serde_json::from_value(env.payload).map_err(parse)?;
            if e.mode.kind() != env.kind {
                return Err(ModelError::Parse(format!("kind `{}` disagrees with payload mode", env.kind)));
            }
            Model::Ensemble(e)
        }
        other => return Err(ModelError::Parse(format!("unknown model kind `{other}`"))),
    };
    model.validate()?;
    Ok(model)
}
