use indexmap::IndexSet;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::graph::{CriticalArea, FunctionCallGraph, NodeId};

use super::{apply_op, check_op, PerturbationOp, ValidityError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    AddNode,
    AddEdge,
    Rewire,
    RemoveNode,
    AddSparseNodes,
    AddDenseNodes,
    AddLongEdges,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::AddNode,
        OpKind::AddEdge,
        OpKind::Rewire,
        OpKind::RemoveNode,
        OpKind::AddSparseNodes,
        OpKind::AddDenseNodes,
        OpKind::AddLongEdges,
    ];
}

/// Relative draw frequency of each operator kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpWeights {
    pub add_node: f64,
    pub add_edge: f64,
    pub rewire: f64,
    pub remove_node: f64,
    pub add_sparse_nodes: f64,
    pub add_dense_nodes: f64,
    pub add_long_edges: f64,
}

impl Default for OpWeights {
    fn default() -> Self {
        Self::only(&OpKind::ALL)
    }
}

impl OpWeights {
    /// Unit weight on `kinds`, zero elsewhere.
    pub fn only(kinds: &[OpKind]) -> Self {
        let w = |k| if kinds.contains(&k) { 1.0 } else { 0.0 };
        Self {
            add_node: w(OpKind::AddNode),
            add_edge: w(OpKind::AddEdge),
            rewire: w(OpKind::Rewire),
            remove_node: w(OpKind::RemoveNode),
            add_sparse_nodes: w(OpKind::AddSparseNodes),
            add_dense_nodes: w(OpKind::AddDenseNodes),
            add_long_edges: w(OpKind::AddLongEdges),
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.add_node,
            self.add_edge,
            self.rewire,
            self.remove_node,
            self.add_sparse_nodes,
            self.add_dense_nodes,
            self.add_long_edges,
        ]
    }
}

/// Size ranges (inclusive) for the multi-node operators and the retry bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpParams {
    pub k_min: usize,
    pub k_max: usize,
    pub long_m_min: usize,
    pub long_m_max: usize,
    pub long_k_min: usize,
    pub long_k_max: usize,
    pub max_attempts: usize,
}

impl Default for OpParams {
    fn default() -> Self {
        Self { k_min: 2, k_max: 16, long_m_min: 1, long_m_max: 4, long_k_min: 2, long_k_max: 8, max_attempts: 64 }
    }
}

/// Hands out synthetic node ids that no graph of the run has used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdAllocator {
    next: u64,
}

impl IdAllocator {
    pub fn new(start: u64) -> Self {
        Self { next: start }
    }

    pub fn for_graph(g: &FunctionCallGraph) -> Self {
        Self::new(g.next_id())
    }

    pub fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        id
    }

    pub fn fresh_n(&mut self, k: usize) -> Vec<NodeId> {
        (0..k).map(|_| self.fresh()).collect()
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

/// Insertion-ordered node set; order is deterministic for a given history.
pub type NodePool = IndexSet<NodeId, FxBuildHasher>;

/// A graph under construction together with the nodes perturbations may
/// target: critical-area nodes plus every synthetic node created so far.
#[derive(Debug, Clone)]
pub struct WorkingState {
    graph: FunctionCallGraph,
    user_pool: NodePool,
    callee_pool: NodePool,
    anchors: Vec<NodeId>,
}

impl WorkingState {
    pub fn new(graph: FunctionCallGraph, area: &CriticalArea) -> Self {
        let mut user_pool = NodePool::default();
        let mut callee_pool = NodePool::default();
        for &id in &area.node_ids {
            if let Some(rec) = graph.node(id) {
                callee_pool.insert(id);
                if rec.is_user() {
                    user_pool.insert(id);
                }
            }
        }
        for rec in graph.nodes().filter(|r| r.synthesized()) {
            callee_pool.insert(rec.id);
            user_pool.insert(rec.id);
        }
        let anchors = area.anchor_apis.iter().copied().filter(|&a| graph.contains_node(a)).collect();
        Self { graph, user_pool, callee_pool, anchors }
    }

    pub fn graph(&self) -> &FunctionCallGraph {
        &self.graph
    }

    pub fn into_graph(self) -> FunctionCallGraph {
        self.graph
    }

    pub fn user_pool(&self) -> &NodePool {
        &self.user_pool
    }

    pub fn callee_pool(&self) -> &NodePool {
        &self.callee_pool
    }

    pub fn anchors(&self) -> &[NodeId] {
        &self.anchors
    }

    /// Applies `op` and keeps the pools in step with the graph.
    pub fn apply(&mut self, op: &PerturbationOp) -> Result<(), ValidityError> {
        apply_op(&mut self.graph, op)?;
        if let PerturbationOp::RemoveNode { target } = op {
            self.user_pool.swap_remove(target);
            self.callee_pool.swap_remove(target);
        }
        for id in op.new_ids() {
            self.user_pool.insert(id);
            self.callee_pool.insert(id);
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("no valid perturbation found after {attempts} attempts")]
pub struct NoValidOp {
    pub attempts: usize,
}

fn pick<R: Rng + ?Sized>(pool: &NodePool, rng: &mut R) -> Option<NodeId> {
    (!pool.is_empty()).then(|| pool[rng.gen_range(0..pool.len())])
}

fn draw(
    kind: OpKind,
    s: &WorkingState,
    params: &OpParams,
    alloc: &mut IdAllocator,
    rng: &mut (impl Rng + ?Sized),
) -> Option<PerturbationOp> {
    let g = &s.graph;
    let caller = pick(&s.user_pool, rng)?;
    let op = match kind {
        OpKind::AddNode => PerturbationOp::AddNode { caller, new_id: alloc.fresh() },
        OpKind::AddEdge => {
            let callee = pick(&s.callee_pool, rng)?;
            if callee == caller || g.contains_edge(caller, callee) {
                return None;
            }
            PerturbationOp::AddEdge { caller, callee }
        }
        OpKind::Rewire => {
            let succ: Vec<NodeId> = g.successors(caller).filter(|v| s.callee_pool.contains(v)).collect();
            if succ.is_empty() {
                return None;
            }
            let callee = succ[rng.gen_range(0..succ.len())];
            let mid = pick(&s.user_pool, rng)?;
            let op = PerturbationOp::Rewire { caller, callee, mid };
            check_op(g, &op).ok()?;
            op
        }
        OpKind::RemoveNode => {
            if g.in_degree(caller) == 0 {
                return None;
            }
            PerturbationOp::RemoveNode { target: caller }
        }
        OpKind::AddSparseNodes | OpKind::AddDenseNodes => {
            let k = rng.gen_range(params.k_min..=params.k_max);
            let new_ids = alloc.fresh_n(k);
            if kind == OpKind::AddSparseNodes {
                PerturbationOp::AddSparseNodes { anchor: caller, new_ids }
            } else {
                PerturbationOp::AddDenseNodes { anchor: caller, new_ids }
            }
        }
        OpKind::AddLongEdges => {
            if s.anchors.is_empty() {
                return None;
            }
            let target = s.anchors[rng.gen_range(0..s.anchors.len())];
            let m = rng.gen_range(params.long_m_min..=params.long_m_max);
            let chains = (0..m)
                .map(|_| {
                    let k = rng.gen_range(params.long_k_min..=params.long_k_max);
                    alloc.fresh_n(k)
                })
                .collect();
            PerturbationOp::AddLongEdges { source: caller, target, chains }
        }
    };
    check_op(g, &op).ok().map(|_| op)
}

/// Draws one op valid against the state, targeting only pool nodes.
pub fn random_op<R: Rng + ?Sized>(
    state: &WorkingState,
    weights: &OpWeights,
    params: &OpParams,
    alloc: &mut IdAllocator,
    rng: &mut R,
) -> Result<PerturbationOp, NoValidOp> {
    let fail = NoValidOp { attempts: 0 };
    if state.user_pool.is_empty() {
        return Err(fail);
    }
    let Ok(dist) = WeightedIndex::new(weights.as_array()) else {
        return Err(fail);
    };
    for _ in 0..params.max_attempts {
        if let Some(op) = draw(OpKind::ALL[dist.sample(rng)], state, params, alloc, rng) {
            return Ok(op);
        }
    }
    Err(NoValidOp { attempts: params.max_attempts })
}
