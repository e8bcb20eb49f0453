//! Training targets and attacking batches of samples.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attrib::{make_baseline, BaselineKind};
use crate::embed::{AbstractionMap, EmbedError, Embedder, KatzParams, Scheme};
use crate::graph::{identify_critical_area, FunctionCallGraph, SensitiveApiIndex};
use crate::metrics::{MetricsReport, SampleRow};
use crate::models::{
    adaboost_train, extract_benign_constraints, forest_train, model_load, model_save, AdaBoostConfig, Constraint,
    ForestConfig, KnnModel, Label, MlpConfig, MlpModel, Model, ModelError,
};
use crate::search::{run_attack, run_random_baseline, AttackConfig, AttackContext, AttackResult, SearchError, Target};
use crate::synth::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Mlp,
    Knn,
    RandomForest,
    AdaBoost,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Mlp => "mlp",
            TargetKind::Knn => "knn",
            TargetKind::RandomForest => "random_forest",
            TargetKind::AdaBoost => "adaboost",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [TargetKind::Mlp, TargetKind::Knn, TargetKind::RandomForest, TargetKind::AdaBoost]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown model kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub kind: TargetKind,
    pub mlp: MlpConfig,
    pub knn_k: usize,
    pub forest: ForestConfig,
    pub adaboost: AdaBoostConfig,
    /// MLP trained on the same data to attribute a KNN target.
    pub surrogate: MlpConfig,
    pub baseline: BaselineKind,
    /// Drop benign-path constraints that contradict a malicious path of the
    /// same tree.
    pub eliminate_conflicts: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: TargetKind::Mlp,
            mlp: MlpConfig::default(),
            knn_k: 1,
            forest: ForestConfig::default(),
            adaboost: AdaBoostConfig::default(),
            surrogate: MlpConfig::default(),
            baseline: BaselineKind::BenignMean,
            eliminate_conflicts: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("target file: {0}")]
    Format(String),
}

/// Confusion counts with malware as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Self {
        let mut c = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t.is_benign(), p.is_benign()) {
                (false, false) => c.tp += 1,
                (true, false) => c.fp += 1,
                (true, true) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    fn ratio(a: usize, b: usize) -> f64 {
        if b == 0 {
            0.0
        } else {
            a as f64 / b as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        Self::ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// A trained classifier plus everything an attack on it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedTarget {
    /// The embedding the model was trained on.
    pub embedder: Embedder,
    pub model: Model,
    pub surrogate: Option<MlpModel>,
    pub attribution_baseline: Vec<f64>,
    /// Derived from `model`; empty unless it is a tree ensemble.
    pub constraints: Vec<Constraint>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    scheme: String,
    apis: Vec<String>,
    abstraction: Option<String>,
    katz: KatzParams,
    attribution_baseline: Vec<f64>,
    eliminate_conflicts: bool,
    model: serde_json::Value,
    surrogate: Option<serde_json::Value>,
}

fn as_value(model: &Model) -> serde_json::Value {
    serde_json::from_slice(&model_save(model)).expect("model envelope is JSON")
}

fn from_value(v: serde_json::Value) -> Result<Model, ModelError> {
    model_load(&serde_json::to_vec(&v).expect("value serializes"))
}

impl TrainedTarget {
    pub fn target(&self) -> Target<'_> {
        match &self.model {
            Model::Mlp(m) => Target::Mlp(m),
            Model::Knn(model) => {
                Target::Knn { model, surrogate: self.surrogate.as_ref().expect("knn targets always carry a surrogate") }
            }
            Model::Ensemble(model) => Target::Ensemble { model, constraints: &self.constraints },
        }
    }

    /// Serialized with the conflict flag so constraints can be re-derived.
    pub fn to_json(&self, eliminate_conflicts: bool) -> Vec<u8> {
        let doc = TargetDoc {
            scheme: self.embedder.scheme.name().to_owned(),
            apis: self.embedder.apis.iter().map(str::to_owned).collect(),
            abstraction: self.embedder.abstraction.as_ref().map(AbstractionMap::to_text),
            katz: self.embedder.katz,
            attribution_baseline: self.attribution_baseline.clone(),
            eliminate_conflicts,
            model: as_value(&self.model),
            surrogate: self.surrogate.clone().map(|m| as_value(&Model::Mlp(m))),
        };
        let mut out = serde_json::to_vec(&doc).expect("target serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ExperimentError> {
        let doc: TargetDoc = serde_json::from_slice(bytes).map_err(|e| ExperimentError::Format(e.to_string()))?;
        let scheme: Scheme = doc.scheme.parse().map_err(ExperimentError::Format)?;
        let apis = SensitiveApiIndex::new(doc.apis).map_err(|e| ExperimentError::Format(e.to_string()))?;
        let mut embedder = Embedder::new(scheme, apis);
        embedder.katz = doc.katz;
        if let Some(text) = doc.abstraction {
            embedder = embedder.with_abstraction(AbstractionMap::parse(&text)?);
        }
        let model = from_value(doc.model)?;
        let surrogate = match doc.surrogate.map(from_value).transpose()? {
            None => None,
            Some(Model::Mlp(m)) => Some(m),
            Some(_) => return Err(ExperimentError::Format("surrogate must be an mlp".into())),
        };
        if matches!(model, Model::Knn(_)) && surrogate.is_none() {
            return Err(ExperimentError::Format("knn target needs a surrogate".into()));
        }
        let dims_ok = embedder.dim() == model.input_dim()
            && doc.attribution_baseline.len() == model.input_dim()
            && surrogate.as_ref().is_none_or(|s| s.input_dim == model.input_dim());
        if !dims_ok {
            return Err(ExperimentError::Format("model, surrogate and baseline dimensions disagree".into()));
        }
        let constraints = match &model {
            Model::Ensemble(e) => extract_benign_constraints(e, doc.eliminate_conflicts),
            _ => Vec::new(),
        };
        Ok(Self { embedder, model, surrogate, attribution_baseline: doc.attribution_baseline, constraints })
    }
}

pub fn embed_all(embedder: &Embedder, graphs: &[&FunctionCallGraph]) -> Result<Vec<Vec<f64>>, EmbedError> {
    graphs.iter().map(|g| embedder.embed(g).map(|v| v.values)).collect()
}

pub fn train_target(
    embedder: &Embedder,
    data: &[Vec<f64>],
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<TrainedTarget, ExperimentError> {
    let model = match cfg.kind {
        TargetKind::Mlp => Model::Mlp(MlpModel::train(data, labels, &cfg.mlp)?.0),
        TargetKind::Knn => Model::Knn(KnnModel::new(data.to_vec(), labels.to_vec(), cfg.knn_k)?),
        TargetKind::RandomForest => Model::Ensemble(forest_train(data, labels, &cfg.forest)?),
        TargetKind::AdaBoost => Model::Ensemble(adaboost_train(data, labels, &cfg.adaboost)?),
    };
    let surrogate = match cfg.kind {
        TargetKind::Knn => Some(MlpModel::train(data, labels, &cfg.surrogate)?.0),
        _ => None,
    };
    let constraints = match &model {
        Model::Ensemble(e) => extract_benign_constraints(e, cfg.eliminate_conflicts),
        _ => Vec::new(),
    };
    Ok(TrainedTarget {
        embedder: embedder.clone(),
        model,
        surrogate,
        attribution_baseline: make_baseline(cfg.baseline, data, labels),
        constraints,
    })
}

pub fn evaluate_model(model: &Model, data: &[Vec<f64>], labels: &[Label]) -> Result<Confusion, ModelError> {
    let predicted = data.iter().map(|x| model.predict(x)).collect::<Result<Vec<_>, _>>()?;
    Ok(Confusion::from_predictions(labels, &predicted))
}

/// Splits off the first `n` malware graphs as attack seeds; everything else
/// is training data.
pub fn holdout_malware(corpus: &Corpus, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut held = Vec::new();
    let mut train = Vec::new();
    for (i, g) in corpus.graphs.iter().enumerate() {
        if !g.label.is_benign() && held.len() < n {
            held.push(i);
        } else {
            train.push(i);
        }
    }
    (held, train)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Genetic,
    Random,
}

/// Per-sample rng seed: the run seed xor the sample index.
pub fn sample_seed(run_seed: u64, index: usize) -> u64 {
    run_seed ^ index as u64
}

pub struct SampleOutcome {
    pub name: String,
    pub seed: u64,
    pub result: Result<AttackResult, SearchError>,
}

/// Attacks every sample and reports in sample order. Failures become error
/// rows; the batch always completes. Seeds depend only on the sample index,
/// so `parallel` changes wall time and nothing else.
pub fn attack_batch(
    name: &str,
    samples: &[(String, &FunctionCallGraph)],
    target: &TrainedTarget,
    cfg: &AttackConfig,
    mode: SearchMode,
    parallel: bool,
) -> (MetricsReport, Vec<SampleOutcome>) {
    let run = |i: usize| attack_one(i, &samples[i], target, cfg, mode);
    let outcomes: Vec<SampleOutcome> = if parallel {
        (0..samples.len()).into_par_iter().map(run).collect()
    } else {
        (0..samples.len()).map(run).collect()
    };
    let rows = outcomes
        .iter()
        .map(|o| match &o.result {
            Ok(r) => SampleRow::from_result(o.name.clone(), o.seed, r),
            Err(e) => SampleRow::failed(o.name.clone(), o.seed, e),
        })
        .collect();
    (MetricsReport::from_rows(name, rows), outcomes)
}

fn attack_one(
    index: usize,
    (sample, graph): &(String, &FunctionCallGraph),
    target: &TrainedTarget,
    cfg: &AttackConfig,
    mode: SearchMode,
) -> SampleOutcome {
    let seed = sample_seed(cfg.seed, index);
    let run_cfg = AttackConfig { seed, ..cfg.clone() };
    let embedder = &target.embedder;
    let area = identify_critical_area(graph, &embedder.apis);
    let ctx = AttackContext {
        base: graph,
        area: &area,
        embedder,
        target: target.target(),
        attribution_baseline: &target.attribution_baseline,
    };
    let result = match mode {
        SearchMode::Genetic => run_attack(&run_cfg, &ctx),
        SearchMode::Random => run_random_baseline(&run_cfg, &ctx),
    };
    if let Err(e) = &result {
        log::error!("sample {sample}: {e}");
    }
    SampleOutcome { name: sample.clone(), seed, result }
}
