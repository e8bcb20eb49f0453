//! Function call graph model, on-disk formats, and critical-area extraction.
//!
//! A [`FunctionCallGraph`] is a simple directed graph over [`NodeId`]s. System
//! nodes (SDK APIs) are callee-only; user nodes and nodes synthesized by
//! perturbations may call anything. All containers are ordered so iteration,
//! serialization and every derived computation are deterministic.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque node identifier. Labels are metadata; identity is the id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Edge = (NodeId, NodeId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    System,
    User,
    /// Created by a perturbation. Behaves as a user node for operator
    /// eligibility.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
}

impl NodeRecord {
    pub fn is_system(&self) -> bool {
        self.kind == NodeKind::System
    }

    /// User or synthetic.
    pub fn is_user(&self) -> bool {
        self.kind != NodeKind::System
    }

    pub fn synthesized(&self) -> bool {
        self.kind == NodeKind::Synthetic
    }
}

/// Label given to nodes created by perturbation operators.
pub fn synthetic_label(id: NodeId) -> String {
    format!("synthetic.fn{}", id.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

/// Sorted, duplicate-free adjacency list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Adjacency(Vec<NodeId>);

impl Adjacency {
    fn insert(&mut self, v: NodeId) -> bool {
        match self.0.binary_search(&v) {
            Ok(_) => false,
            Err(i) => {
                self.0.insert(i, v);
                true
            }
        }
    }

    fn remove(&mut self, v: NodeId) -> bool {
        match self.0.binary_search(&v) {
            Ok(i) => {
                self.0.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    record: NodeRecord,
    succ: Adjacency,
    pred: Adjacency,
}

/// Simple directed graph with sorted adjacency in both directions. Node
/// iteration is by ascending id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FunctionCallGraph {
    nodes: FxHashMap<NodeId, Entry>,
    edge_count: usize,
    next_id: u64,
}

impl FunctionCallGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node with a freshly allocated id.
    pub fn add_node(&mut self, kind: NodeKind, label: impl Into<String>) -> NodeId {
        let id = NodeId(self.next_id);
        self.insert_node(NodeRecord { id, kind, label: label.into() }).expect("fresh id cannot collide");
        id
    }

    /// Inserts a node with a caller-chosen id.
    pub fn insert_node(&mut self, record: NodeRecord) -> Result<(), GraphError> {
        let id = record.id;
        if self.nodes.contains_key(&id) {
            return Err(GraphError::Validation(format!("duplicate node id {id}")));
        }
        self.nodes.insert(id, Entry { record, succ: Adjacency::default(), pred: Adjacency::default() });
        self.next_id = self.next_id.max(id.0 + 1);
        Ok(())
    }

    /// Adds a call edge. Returns `Ok(false)` if the edge already existed.
    pub fn add_edge(&mut self, caller: NodeId, callee: NodeId) -> Result<bool, GraphError> {
        if !self.nodes.contains_key(&callee) {
            return Err(GraphError::Validation(format!("edge ({caller},{callee}): missing callee")));
        }
        let Some(entry) = self.nodes.get_mut(&caller) else {
            return Err(GraphError::Validation(format!("edge ({caller},{callee}): missing caller")));
        };
        if caller == callee {
            return Err(GraphError::Validation(format!("self-loop on {caller}")));
        }
        if entry.record.is_system() {
            return Err(GraphError::Validation(format!(
                "system node {caller} ({}) cannot be a caller",
                entry.record.label
            )));
        }
        let fresh = entry.succ.insert(callee);
        if fresh {
            self.nodes.get_mut(&callee).expect("checked above").pred.insert(caller);
            self.edge_count += 1;
        }
        Ok(fresh)
    }

    pub fn remove_edge(&mut self, caller: NodeId, callee: NodeId) -> bool {
        let removed = self.nodes.get_mut(&caller).is_some_and(|e| e.succ.remove(callee));
        if removed {
            self.nodes.get_mut(&callee).expect("edges join live nodes").pred.remove(caller);
            self.edge_count -= 1;
        }
        removed
    }

    /// Removes a node together with all incident edges.
    pub fn remove_node(&mut self, id: NodeId) -> Option<NodeRecord> {
        let entry = self.nodes.remove(&id)?;
        for &v in &entry.succ.0 {
            self.nodes.get_mut(&v).expect("edges join live nodes").pred.remove(id);
        }
        for &u in &entry.pred.0 {
            self.nodes.get_mut(&u).expect("edges join live nodes").succ.remove(id);
        }
        self.edge_count -= entry.succ.0.len() + entry.pred.0.len();
        Some(entry.record)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn contains_edge(&self, caller: NodeId, callee: NodeId) -> bool {
        self.nodes.get(&caller).is_some_and(|e| e.succ.contains(callee))
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id).map(|e| &e.record)
    }

    pub fn is_user(&self, id: NodeId) -> bool {
        self.node(id).is_some_and(NodeRecord::is_user)
    }

    pub fn is_system(&self, id: NodeId) -> bool {
        self.node(id).is_some_and(NodeRecord::is_system)
    }

    fn sorted_entries(&self) -> Vec<&Entry> {
        let mut entries: Vec<&Entry> = self.nodes.values().collect();
        entries.sort_unstable_by_key(|e| e.record.id);
        entries
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.sorted_entries().into_iter().map(|e| &e.record)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.sorted_entries().into_iter().map(|e| e.record.id)
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.sorted_entries().into_iter().flat_map(|e| e.succ.0.iter().map(move |&v| (e.record.id, v)))
    }

    pub fn successors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.get(&id).into_iter().flat_map(|e| e.succ.0.iter().copied())
    }

    pub fn predecessors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.get(&id).into_iter().flat_map(|e| e.pred.0.iter().copied())
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.nodes.get(&id).map_or(0, |e| e.succ.0.len())
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.nodes.get(&id).map_or(0, |e| e.pred.0.len())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Smallest id guaranteed unused by this graph.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn synthetic_count(&self) -> usize {
        self.nodes.values().filter(|e| e.record.synthesized()).count()
    }

    /// System nodes in ascending id order.
    pub fn system_nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        let mut out: Vec<&NodeRecord> = self.nodes.values().map(|e| &e.record).filter(|r| r.is_system()).collect();
        out.sort_unstable_by_key(|r| r.id);
        out.into_iter()
    }

    /// Checks every structural invariant. Graphs built through the public API
    /// always pass; this exists for externally assembled data and tests.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut count = 0;
        for (&u, e) in &self.nodes {
            if e.record.id != u {
                return Err(GraphError::Validation(format!("node {u} stored under a different id")));
            }
            if e.record.is_system() && !e.succ.0.is_empty() {
                return Err(GraphError::Validation(format!("system node {u} has out-edges")));
            }
            for &v in &e.succ.0 {
                if u == v {
                    return Err(GraphError::Validation(format!("self-loop on {u}")));
                }
                if !self.nodes.get(&v).is_some_and(|t| t.pred.contains(u)) {
                    return Err(GraphError::Validation(format!("edge ({u},{v}) not mirrored")));
                }
                count += 1;
            }
            if e.pred.0.iter().any(|&p| !self.contains_edge(p, u)) {
                return Err(GraphError::Validation(format!("stale predecessor of {u}")));
            }
        }
        if count != self.edge_count {
            return Err(GraphError::Validation("edge count out of sync".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Serialization

/// On-disk graph formats.
#[derive(Debug, Clone, Copy)]
pub enum GraphFormat<'a> {
    /// `{"nodes": [{"id", "kind", "label"}], "edges": [[caller, callee]]}`.
    JsonGraph,
    /// One `caller callee` label pair per line. Node kinds are inferred from
    /// the supplied system package prefixes.
    EdgeList { system_prefixes: &'a [String] },
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: u64,
    kind: NodeKind,
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGraphDoc {
    nodes: Vec<JsonNode>,
    edges: Vec<(u64, u64)>,
}

pub fn load_fcg(source: &[u8], format: GraphFormat<'_>) -> Result<FunctionCallGraph, GraphError> {
    match format {
        GraphFormat::JsonGraph => load_json(source),
        GraphFormat::EdgeList { system_prefixes } => load_edge_list(source, system_prefixes),
    }
}

fn load_json(source: &[u8]) -> Result<FunctionCallGraph, GraphError> {
    let doc: JsonGraphDoc = serde_json::from_slice(source).map_err(|e| GraphError::Parse(e.to_string()))?;
    let mut g = FunctionCallGraph::new();
    for n in doc.nodes {
        g.insert_node(NodeRecord { id: NodeId(n.id), kind: n.kind, label: n.label })?;
    }
    let mut dups = 0usize;
    for (u, v) in doc.edges {
        if !g.add_edge(NodeId(u), NodeId(v))? {
            dups += 1;
        }
    }
    if dups > 0 {
        log::warn!("collapsed {dups} duplicate edge(s)");
    }
    Ok(g)
}

fn load_edge_list(source: &[u8], system_prefixes: &[String]) -> Result<FunctionCallGraph, GraphError> {
    let text = std::str::from_utf8(source).map_err(|e| GraphError::Parse(e.to_string()))?;
    let mut g = FunctionCallGraph::new();
    let mut by_label: HashMap<String, NodeId> = HashMap::new();
    let mut intern = |g: &mut FunctionCallGraph, label: &str| -> NodeId {
        if let Some(&id) = by_label.get(label) {
            return id;
        }
        let kind = if system_prefixes.iter().any(|p| label.starts_with(p.as_str())) {
            NodeKind::System
        } else {
            NodeKind::User
        };
        let id = g.add_node(kind, label);
        by_label.insert(label.to_owned(), id);
        id
    };
    let mut dups = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(GraphError::Parse(format!("line {}: expected `caller callee`", lineno + 1)));
        };
        let u = intern(&mut g, a);
        let v = intern(&mut g, b);
        if !g.add_edge(u, v)? {
            dups += 1;
        }
    }
    if dups > 0 {
        log::warn!("collapsed {dups} duplicate edge(s)");
    }
    Ok(g)
}

/// Deterministic serialization: nodes sorted by id, edges lexicographically.
///
/// The edge-list format carries no node ids or isolated nodes; only the JSON
/// format round-trips exactly.
pub fn save_fcg(g: &FunctionCallGraph, format: GraphFormat<'_>) -> Vec<u8> {
    match format {
        GraphFormat::JsonGraph => {
            let doc = JsonGraphDoc {
                nodes: g.nodes().map(|r| JsonNode { id: r.id.0, kind: r.kind, label: r.label.clone() }).collect(),
                edges: g.edges().map(|(u, v)| (u.0, v.0)).collect(),
            };
            let mut out = serde_json::to_vec(&doc).expect("graph serialization cannot fail");
            out.push(b'\n');
            out
        }
        GraphFormat::EdgeList { .. } => {
            let mut out = String::new();
            for (u, v) in g.edges() {
                out.push_str(&g.node(u).unwrap().label);
                out.push(' ');
                out.push_str(&g.node(v).unwrap().label);
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

/// Parses a newline-separated prefix list (system packages).
pub fn parse_prefix_list(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_owned).collect()
}

// ---------------------------------------------------------------------------
// Sensitive APIs

/// Ordered list of sensitive API signatures; line order fixes feature
/// positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveApiIndex {
    apis: Vec<String>,
    position: HashMap<String, usize>,
}

impl SensitiveApiIndex {
    pub fn new(apis: Vec<String>) -> Result<Self, GraphError> {
        let mut position = HashMap::with_capacity(apis.len());
        for (i, a) in apis.iter().enumerate() {
            if position.insert(a.clone(), i).is_some() {
                return Err(GraphError::Parse(format!("duplicate sensitive API `{a}`")));
            }
        }
        Ok(Self { apis, position })
    }

    /// One signature per line. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = self.apis.join("\n");
        s.push('\n');
        s
    }

    pub fn len(&self) -> usize {
        self.apis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apis.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.position.get(label).copied()
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.apis.get(i).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.apis.iter().map(String::as_str)
    }

    /// Maps each feature position to the system node carrying that label in
    /// `g`, if any.
    pub fn locate(&self, g: &FunctionCallGraph) -> Vec<Option<NodeId>> {
        let mut out = vec![None; self.apis.len()];
        for rec in g.system_nodes() {
            if let Some(i) = self.position(&rec.label) {
                out[i] = Some(rec.id);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Critical area

/// Nodes and edges that can reach a sensitive API present in the graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CriticalArea {
    pub node_ids: BTreeSet<NodeId>,
    pub edge_ids: BTreeSet<Edge>,
    pub anchor_apis: BTreeSet<NodeId>,
}

impl CriticalArea {
    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node_ids.contains(&id)
    }
}

/// Reverse reachability from every sensitive system node in `g`.
pub fn identify_critical_area(g: &FunctionCallGraph, apis: &SensitiveApiIndex) -> CriticalArea {
    let anchor_apis: BTreeSet<NodeId> = apis.locate(g).into_iter().flatten().collect();
    let mut node_ids = anchor_apis.clone();
    let mut queue: VecDeque<NodeId> = anchor_apis.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for u in g.predecessors(v) {
            if node_ids.insert(u) {
                queue.push_back(u);
            }
        }
    }
    let edge_ids = node_ids.iter().flat_map(|&v| g.predecessors(v).map(move |u| (u, v))).collect();
    CriticalArea { node_ids, edge_ids, anchor_apis }
}
