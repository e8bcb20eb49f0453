//! Labeled synthetic call graphs for training and attack experiments.
//!
//! Both classes share one background process: a random call tree over user
//! functions with a few extra forward calls, and sparse calls into a fixed
//! system API universe. Class signal comes only from motifs, each of which
//! makes two user functions call several APIs from that class's pattern set.
//! With zero motifs for both classes the classes are indistinguishable.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    load_fcg, save_fcg, FunctionCallGraph, GraphError, GraphFormat, NodeId, NodeKind, SensitiveApiIndex,
};
use crate::models::Label;

/// Sensitive APIs whose call density marks the malware class.
pub const MALWARE_PATTERN_APIS: [&str; 6] = [
    "android.telephony.SmsManager.sendTextMessage",
    "android.telephony.TelephonyManager.getDeviceId",
    "android.telephony.TelephonyManager.getSubscriberId",
    "java.lang.Runtime.exec",
    "android.location.LocationManager.getLastKnownLocation",
    "dalvik.system.DexClassLoader.loadClass",
];

/// Sensitive APIs whose call density marks the benign class.
pub const BENIGN_PATTERN_APIS: [&str; 6] = [
    "android.app.Activity.setContentView",
    "android.app.Activity.startActivity",
    "android.widget.Toast.makeText",
    "android.content.SharedPreferences.getString",
    "android.view.View.setOnClickListener",
    "android.app.NotificationManager.notify",
];

/// System APIs outside the feature index.
pub const COMMON_APIS: [&str; 6] = [
    "android.util.Log.d",
    "java.lang.String.format",
    "java.lang.StringBuilder.append",
    "java.util.ArrayList.add",
    "java.lang.Integer.parseInt",
    "java.util.HashMap.put",
];

/// Calls per motif source into the pattern set.
const MOTIF_FANOUT: usize = 3;
const MOTIF_SOURCES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_graphs: usize,
    /// Inclusive range of total node counts, system nodes included.
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub malware_motifs: usize,
    pub benign_motifs: usize,
    pub malware_fraction: f64,
    /// Probability that a user function calls one random system API.
    pub background_call_rate: f64,
    /// Extra user-to-user calls per user function.
    pub extra_call_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_graphs: 200,
            min_nodes: 40,
            max_nodes: 80,
            malware_motifs: 4,
            benign_motifs: 4,
            malware_fraction: 0.5,
            background_call_rate: 0.5,
            extra_call_rate: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth configuration: {0}")]
    Config(String),
    #[error("corpus I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corpus format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_owned()));
        if self.n_graphs == 0 {
            return bad("n_graphs must be at least 1");
        }
        if self.min_nodes < 3 || self.min_nodes > self.max_nodes {
            return bad("node range must satisfy 3 <= min_nodes <= max_nodes");
        }
        for p in [self.malware_fraction, self.background_call_rate, self.extra_call_rate] {
            if !(0.0..=1.0).contains(&p) {
                return bad("rates and fractions must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub name: String,
    pub label: Label,
    pub graph: FunctionCallGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub apis: SensitiveApiIndex,
    pub graphs: Vec<LabeledGraph>,
}

impl Corpus {
    pub fn labels(&self) -> Vec<Label> {
        self.graphs.iter().map(|g| g.label).collect()
    }
}

/// The feature index used by generated corpora: malware pattern APIs, then
/// benign pattern APIs.
pub fn sensitive_api_index() -> SensitiveApiIndex {
    let apis = MALWARE_PATTERN_APIS.iter().chain(&BENIGN_PATTERN_APIS).map(|s| s.to_string()).collect();
    SensitiveApiIndex::new(apis).expect("pattern lists are disjoint")
}

fn universe() -> Vec<&'static str> {
    MALWARE_PATTERN_APIS.iter().chain(&BENIGN_PATTERN_APIS).chain(&COMMON_APIS).copied().collect()
}

/// One graph with exactly `n` nodes.
pub fn generate_graph<R: Rng + ?Sized>(cfg: &SynthConfig, n: usize, label: Label, rng: &mut R) -> FunctionCallGraph {
    let universe = universe();
    // Keep at least two thirds of the nodes as user functions.
    let n_system = (n / 3).clamp(1, universe.len());
    let mut system_labels: Vec<&str> = universe.iter().copied().choose_multiple(rng, n_system);
    system_labels.sort_by_key(|l| universe.iter().position(|u| u == l));
    let n_user = n - n_system;

    let mut g = FunctionCallGraph::new();
    let users: Vec<NodeId> = (0..n_user).map(|i| g.add_node(NodeKind::User, format!("app.fn{i}"))).collect();
    let system: Vec<(NodeId, &str)> = system_labels.iter().map(|&l| (g.add_node(NodeKind::System, l), l)).collect();

    for i in 1..n_user {
        let caller = users[rng.gen_range(0..i)];
        g.add_edge(caller, users[i]).expect("tree edge is fresh");
    }
    for i in 0..n_user {
        if n_user > 1 && rng.gen_bool(cfg.extra_call_rate) {
            let j = rng.gen_range(0..n_user);
            if j != i {
                let _ = g.add_edge(users[i], users[j]);
            }
        }
        if rng.gen_bool(cfg.background_call_rate) {
            let (api, _) = system[rng.gen_range(0..system.len())];
            let _ = g.add_edge(users[i], api);
        }
    }

    let (motifs, pattern) = match label {
        Label::Malware => (cfg.malware_motifs, &MALWARE_PATTERN_APIS),
        Label::Benign => (cfg.benign_motifs, &BENIGN_PATTERN_APIS),
    };
    let targets: Vec<NodeId> = system.iter().filter(|(_, l)| pattern.contains(l)).map(|&(id, _)| id).collect();
    if !targets.is_empty() {
        for _ in 0..motifs {
            for _ in 0..MOTIF_SOURCES {
                let src = users[rng.gen_range(0..n_user)];
                for &api in targets.choose_multiple(rng, MOTIF_FANOUT.min(targets.len())) {
                    let _ = g.add_edge(src, api);
                }
            }
        }
    }
    g
}

/// Deterministic for a given configuration. Labels alternate in a shuffled
/// order so the malware fraction is exact up to rounding.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<Corpus, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_malware = (cfg.n_graphs as f64 * cfg.malware_fraction).round() as usize;
    let mut labels: Vec<Label> =
        (0..cfg.n_graphs).map(|i| if i < n_malware { Label::Malware } else { Label::Benign }).collect();
    labels.shuffle(&mut rng);
    let graphs = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let n = rng.gen_range(cfg.min_nodes..=cfg.max_nodes);
            LabeledGraph { name: format!("g{i:04}"), label, graph: generate_graph(cfg, n, label, &mut rng) }
        })
        .collect();
    Ok(Corpus { apis: sensitive_api_index(), graphs })
}

pub const MANIFEST_FILE: &str = "corpus.json";
pub const APIS_FILE: &str = "sensitive_apis.txt";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    file: String,
    label: Label,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    graphs: Vec<ManifestEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SynthError + '_ {
    move |source| SynthError::Io { path: path.to_owned(), source }
}

/// Writes `corpus.json`, `sensitive_apis.txt` and one JSON graph per entry.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<(), SynthError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::with_capacity(corpus.graphs.len());
    for g in &corpus.graphs {
        let file = format!("{}.json", g.name);
        let path = dir.join(&file);
        fs::write(&path, save_fcg(&g.graph, GraphFormat::JsonGraph)).map_err(io_err(&path))?;
        entries.push(ManifestEntry { file, label: g.label });
    }
    let path = dir.join(APIS_FILE);
    fs::write(&path, corpus.apis.to_text()).map_err(io_err(&path))?;
    let path = dir.join(MANIFEST_FILE);
    let mut doc = serde_json::to_vec_pretty(&Manifest { graphs: entries }).expect("manifest serializes");
    doc.push(b'\n');
    fs::write(&path, doc).map_err(io_err(&path))
}

/// Reads a corpus written by [`write_corpus`]. Graph files are resolved
/// relative to `dir` and may not escape it.
pub fn read_corpus(dir: &Path) -> Result<Corpus, SynthError> {
    let path = dir.join(APIS_FILE);
    let apis = SensitiveApiIndex::parse(&fs::read_to_string(&path).map_err(io_err(&path))?)?;
    let path = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| SynthError::Format { path: path.clone(), message: e.to_string() })?;
    let mut graphs = Vec::with_capacity(manifest.graphs.len());
    for entry in manifest.graphs {
        let rel = Path::new(&entry.file);
        if rel.components().count() != 1 || rel.file_name().is_none() {
            return Err(SynthError::Format {
                path,
                message: format!("graph path `{}` must be a plain file name", entry.file),
            });
        }
        let gpath = dir.join(rel);
        let graph = load_fcg(&fs::read(&gpath).map_err(io_err(&gpath))?, GraphFormat::JsonGraph)?;
        let name = entry.file.trim_end_matches(".json").to_owned();
        graphs.push(LabeledGraph { name, label: entry.label, graph });
    }
    Ok(Corpus { apis, graphs })
}
