//! Graph embeddings: centrality features over sensitive APIs and Markov
//! transition features over abstracted call states.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FunctionCallGraph, NodeId, SensitiveApiIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("graph has {nodes} node(s); at least 2 are required")]
    DegenerateGraph { nodes: usize },
    #[error("katz iteration did not converge within {max_iter} iterations")]
    NonConvergent { max_iter: usize },
    #[error("katz alpha {alpha} exceeds the safe bound {bound} (spectral radius estimate {lambda})")]
    AlphaTooLarge { alpha: f64, bound: f64, lambda: f64 },
    #[error("scheme {0} requires an abstraction map")]
    MissingAbstraction(Scheme),
    #[error("abstraction map: {0}")]
    Abstraction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Degree,
    Katz,
    Harmonic,
    Closeness,
    Average,
    Concentrate,
    MamaFamily,
    ApiGraphCluster,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::Degree,
        Scheme::Katz,
        Scheme::Harmonic,
        Scheme::Closeness,
        Scheme::Average,
        Scheme::Concentrate,
        Scheme::MamaFamily,
        Scheme::ApiGraphCluster,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Degree => "degree",
            Scheme::Katz => "katz",
            Scheme::Harmonic => "harmonic",
            Scheme::Closeness => "closeness",
            Scheme::Average => "average",
            Scheme::Concentrate => "concentrate",
            Scheme::MamaFamily => "mama_family",
            Scheme::ApiGraphCluster => "api_graph_cluster",
        }
    }

    pub fn is_markov(self) -> bool {
        matches!(self, Scheme::MamaFamily | Scheme::ApiGraphCluster)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| format!("unknown embedding scheme `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub scheme: Scheme,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

// ---------------------------------------------------------------------------
// Dense index over the graph, built once per embedding call.

struct Dense {
    index: HashMap<NodeId, usize>,
    pred: Vec<Vec<usize>>,
}

impl Dense {
    fn new(g: &FunctionCallGraph) -> Self {
        let index: HashMap<NodeId, usize> = g.node_ids().enumerate().map(|(i, id)| (id, i)).collect();
        let pred = g.node_ids().map(|id| g.predecessors(id).map(|u| index[&u]).collect()).collect();
        Self { index, pred }
    }

    fn len(&self) -> usize {
        self.pred.len()
    }

    /// Inbound BFS distances to `target`: (sum of distances, reachable count
    /// excluding target, harmonic sum).
    fn inbound(&self, target: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) -> (f64, usize, f64) {
        const UNSEEN: u32 = u32::MAX;
        dist.fill(UNSEEN);
        dist[target] = 0;
        queue.clear();
        queue.push_back(target);
        let (mut sum, mut reached, mut harmonic) = (0u64, 0usize, 0.0);
        while let Some(v) = queue.pop_front() {
            let d = dist[v] + 1;
            for &u in &self.pred[v] {
                if dist[u] == UNSEEN {
                    dist[u] = d;
                    sum += u64::from(d);
                    reached += 1;
                    harmonic += 1.0 / f64::from(d);
                    queue.push_back(u);
                }
            }
        }
        (sum as f64, reached, harmonic)
    }
}

fn require_two(g: &FunctionCallGraph) -> Result<(), EmbedError> {
    if g.node_count() < 2 {
        return Err(EmbedError::DegenerateGraph { nodes: g.node_count() });
    }
    Ok(())
}

/// C_D(v) = (in + out degree) / (N - 1).
pub fn degree_centrality(g: &FunctionCallGraph, apis: &SensitiveApiIndex) -> Result<FeatureVector, EmbedError> {
    require_two(g)?;
    let norm = (g.node_count() - 1) as f64;
    let values = apis
        .locate(g)
        .into_iter()
        .map(|slot| slot.map_or(0.0, |id| (g.in_degree(id) + g.out_degree(id)) as f64 / norm))
        .collect();
    Ok(FeatureVector { scheme: Scheme::Degree, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatzParams {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KatzParams {
    fn default() -> Self {
        Self { alpha: 0.005, tol: 1e-9, max_iter: 1000 }
    }
}

/// Estimates the spectral radius of the adjacency matrix from the growth of
/// `‖(Aᵀ)^t 1‖₁`. Returns exactly 0 for acyclic graphs.
fn spectral_radius_estimate(dense: &Dense) -> f64 {
    const STEPS: usize = 64;
    let n = dense.len();
    let mut y = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut log_growth = Vec::with_capacity(STEPS);
    for _ in 0..STEPS {
        for (v, slot) in next.iter_mut().enumerate() {
            *slot = dense.pred[v].iter().map(|&u| y[u]).sum();
        }
        let before: f64 = y.iter().sum();
        let after: f64 = next.iter().sum();
        if after == 0.0 {
            return 0.0;
        }
        log_growth.push((after / before).ln());
        let scale = n as f64 / after;
        for (dst, src) in y.iter_mut().zip(&next) {
            *dst = src * scale;
        }
    }
    // Discard the transient half.
    let tail = &log_growth[STEPS / 2..];
    (tail.iter().sum::<f64>() / tail.len() as f64).exp()
}

/// C_K(v) = Σ_k Σ_i α^k (A^k)_{iv}, via the fixed point x = α Aᵀ (x + 1).
pub fn katz_centrality(
    g: &FunctionCallGraph,
    apis: &SensitiveApiIndex,
    params: KatzParams,
) -> Result<FeatureVector, EmbedError> {
    let dense = Dense::new(g);
    let lambda = spectral_radius_estimate(&dense);
    if params.alpha.is_nan() || params.alpha <= 0.0 || params.alpha * lambda >= 0.9 {
        return Err(EmbedError::AlphaTooLarge {
            alpha: params.alpha,
            bound: if lambda > 0.0 { 0.9 / lambda } else { f64::INFINITY },
            lambda,
        });
    }
    let n = dense.len();
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut converged = n == 0;
    for _ in 0..params.max_iter {
        let mut delta: f64 = 0.0;
        for (v, slot) in next.iter_mut().enumerate() {
            let s: f64 = dense.pred[v].iter().map(|&u| x[u] + 1.0).sum();
            *slot = params.alpha * s;
            delta = delta.max((*slot - x[v]).abs());
        }
        std::mem::swap(&mut x, &mut next);
        if delta < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(EmbedError::NonConvergent { max_iter: params.max_iter });
    }
    let values = apis.locate(g).into_iter().map(|slot| slot.map_or(0.0, |id| x[dense.index[&id]])).collect();
    Ok(FeatureVector { scheme: Scheme::Katz, values })
}

/// C_H(v) = Σ_{u≠v} 1/d(u,v) over nodes with a directed path to v.
pub fn harmonic_centrality(g: &FunctionCallGraph, apis: &SensitiveApiIndex) -> FeatureVector {
    let dense = Dense::new(g);
    let mut dist = vec![0; dense.len()];
    let mut queue = VecDeque::new();
    let values = apis
        .locate(g)
        .into_iter()
        .map(|slot| slot.map_or(0.0, |id| dense.inbound(dense.index[&id], &mut dist, &mut queue).2))
        .collect();
    FeatureVector { scheme: Scheme::Harmonic, values }
}

/// C_C(v) = (N_r − 1)² / (Σ d(u,v) · (N − 1)), inbound distances; 0 when the
/// distance sum is 0.
pub fn closeness_centrality(g: &FunctionCallGraph, apis: &SensitiveApiIndex) -> Result<FeatureVector, EmbedError> {
    require_two(g)?;
    let dense = Dense::new(g);
    let norm = (g.node_count() - 1) as f64;
    let mut dist = vec![0; dense.len()];
    let mut queue = VecDeque::new();
    let values = apis
        .locate(g)
        .into_iter()
        .map(|slot| {
            slot.map_or(0.0, |id| {
                let (sum, reached, _) = dense.inbound(dense.index[&id], &mut dist, &mut queue);
                if sum == 0.0 {
                    0.0
                } else {
                    let r = reached as f64; // N_r - 1
                    r * r / (sum * norm)
                }
            })
        })
        .collect();
    Ok(FeatureVector { scheme: Scheme::Closeness, values })
}

fn four_blocks(g: &FunctionCallGraph, apis: &SensitiveApiIndex, katz: KatzParams) -> Result<[Vec<f64>; 4], EmbedError> {
    Ok([
        degree_centrality(g, apis)?.values,
        katz_centrality(g, apis, katz)?.values,
        harmonic_centrality(g, apis).values,
        closeness_centrality(g, apis)?.values,
    ])
}

/// Element-wise mean of the four centralities.
pub fn average_centrality(
    g: &FunctionCallGraph,
    apis: &SensitiveApiIndex,
    katz: KatzParams,
) -> Result<FeatureVector, EmbedError> {
    let [d, k, h, c] = four_blocks(g, apis, katz)?;
    let values = (0..d.len()).map(|i| (d[i] + k[i] + h[i] + c[i]) / 4.0).collect();
    Ok(FeatureVector { scheme: Scheme::Average, values })
}

/// Degree ‖ Katz ‖ Harmonic ‖ Closeness.
pub fn concentrate_centrality(
    g: &FunctionCallGraph,
    apis: &SensitiveApiIndex,
    katz: KatzParams,
) -> Result<FeatureVector, EmbedError> {
    let values = four_blocks(g, apis, katz)?.concat();
    Ok(FeatureVector { scheme: Scheme::Concentrate, values })
}

// ---------------------------------------------------------------------------
// Markov transition features

/// Longest-prefix map from function labels to abstract states. Labels that
/// match nothing fall into the reserved self-defined state (max id + 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractionMap {
    prefixes: HashMap<String, usize>,
    state_count: usize,
}

impl AbstractionMap {
    pub fn new(entries: impl IntoIterator<Item = (String, usize)>) -> Result<Self, EmbedError> {
        let mut prefixes = HashMap::new();
        let mut max_id = None::<usize>;
        for (prefix, state) in entries {
            if prefix.is_empty() {
                return Err(EmbedError::Abstraction("empty prefix".into()));
            }
            if let Some(prev) = prefixes.insert(prefix.clone(), state) {
                if prev != state {
                    return Err(EmbedError::Abstraction(format!("prefix `{prefix}` mapped twice")));
                }
            }
            max_id = Some(max_id.map_or(state, |m| m.max(state)));
        }
        let state_count = max_id.map_or(1, |m| m + 2);
        if state_count > 4096 {
            return Err(EmbedError::Abstraction(format!("{state_count} states is too many")));
        }
        Ok(Self { prefixes, state_count })
    }

    /// Lines of `prefix<TAB>state_id`; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Result<Self, EmbedError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (prefix, state) =
                line.split_once('\t').ok_or_else(|| EmbedError::Abstraction(format!("line {}: missing tab", i + 1)))?;
            let state =
                state.trim().parse::<usize>().map_err(|e| EmbedError::Abstraction(format!("line {}: {e}", i + 1)))?;
            entries.push((prefix.to_owned(), state));
        }
        Self::new(entries)
    }

    /// Inverse of [`AbstractionMap::parse`], sorted by prefix.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(&String, &usize)> = self.prefixes.iter().collect();
        lines.sort();
        lines.into_iter().map(|(p, s)| format!("{p}\t{s}\n")).collect()
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn self_defined_state(&self) -> usize {
        self.state_count - 1
    }

    pub fn state_of(&self, label: &str) -> usize {
        let mut end = label.len();
        loop {
            if let Some(&s) = self.prefixes.get(&label[..end]) {
                return s;
            }
            match label[..end].char_indices().next_back() {
                Some((i, _)) if i > 0 => end = i,
                _ => return self.self_defined_state(),
            }
        }
    }
}

/// Row-major flattening of P_jk = O_jk / Σ_i O_ji, with all-zero rows for
/// states that have no outgoing transitions.
pub fn markov_embedding(g: &FunctionCallGraph, abstraction: &AbstractionMap, scheme: Scheme) -> FeatureVector {
    let s = abstraction.state_count();
    let states: HashMap<NodeId, usize> = g.nodes().map(|r| (r.id, abstraction.state_of(&r.label))).collect();
    let mut counts = vec![0u64; s * s];
    for (u, v) in g.edges() {
        counts[states[&u] * s + states[&v]] += 1;
    }
    let mut values = vec![0.0; s * s];
    for j in 0..s {
        let row = &counts[j * s..(j + 1) * s];
        let total: u64 = row.iter().sum();
        if total > 0 {
            for (k, &c) in row.iter().enumerate() {
                values[j * s + k] = c as f64 / total as f64;
            }
        }
    }
    FeatureVector { scheme, values }
}

// ---------------------------------------------------------------------------

/// Scheme plus the inputs it needs; the single entry point used by training
/// and attack evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    pub scheme: Scheme,
    pub apis: SensitiveApiIndex,
    pub abstraction: Option<AbstractionMap>,
    pub katz: KatzParams,
}

impl Embedder {
    pub fn new(scheme: Scheme, apis: SensitiveApiIndex) -> Self {
        Self { scheme, apis, abstraction: None, katz: KatzParams::default() }
    }

    pub fn with_abstraction(mut self, map: AbstractionMap) -> Self {
        self.abstraction = Some(map);
        self
    }

    pub fn dim(&self) -> usize {
        match self.scheme {
            Scheme::Concentrate => 4 * self.apis.len(),
            Scheme::MamaFamily | Scheme::ApiGraphCluster => {
                self.abstraction.as_ref().map_or(0, |a| a.state_count().pow(2))
            }
            _ => self.apis.len(),
        }
    }

    pub fn embed(&self, g: &FunctionCallGraph) -> Result<FeatureVector, EmbedError> {
        match self.scheme {
            Scheme::Degree => degree_centrality(g, &self.apis),
            Scheme::Katz => katz_centrality(g, &self.apis, self.katz),
            Scheme::Harmonic => Ok(harmonic_centrality(g, &self.apis)),
            Scheme::Closeness => closeness_centrality(g, &self.apis),
            Scheme::Average => average_centrality(g, &self.apis, self.katz),
            Scheme::Concentrate => concentrate_centrality(g, &self.apis, self.katz),
            Scheme::MamaFamily | Scheme::ApiGraphCluster => {
                let map = self.abstraction.as_ref().ok_or(EmbedError::MissingAbstraction(self.scheme))?;
                Ok(markov_embedding(g, map, self.scheme))
            }
        }
    }
}
