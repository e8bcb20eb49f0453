//! The seven call-graph perturbation operators.
//!
//! Every operator is checked in full against the current graph before any
//! mutation, so a failed [`apply_op`] leaves the graph untouched. New nodes are
//! always [`NodeKind::Synthetic`] and labeled with [`synthetic_label`].

mod random;
mod script;
mod usedef;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{synthetic_label, Edge, FunctionCallGraph, NodeId, NodeKind, NodeRecord};

pub use random::{random_op, IdAllocator, NoValidOp, NodePool, OpKind, OpParams, OpWeights, WorkingState};
pub use script::{directive_count, translate_to_script, SCRIPT_HEADER};
pub use usedef::{has_dependency, resolved_use_def, use_def, Footprint, UseDefSet};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PerturbationOp {
    AddNode {
        caller: NodeId,
        new_id: NodeId,
    },
    AddEdge {
        caller: NodeId,
        callee: NodeId,
    },
    /// Replaces `caller → callee` with `caller → mid → callee`.
    Rewire {
        caller: NodeId,
        callee: NodeId,
        mid: NodeId,
    },
    /// Deletes `target` and connects each of its callers to each of its callees.
    RemoveNode {
        target: NodeId,
    },
    AddSparseNodes {
        anchor: NodeId,
        new_ids: Vec<NodeId>,
    },
    /// Sparse nodes plus `v_i → v_j` for every `i < j`.
    AddDenseNodes {
        anchor: NodeId,
        new_ids: Vec<NodeId>,
    },
    /// One chain `source → v_1 → … → v_k → target` per entry of `chains`.
    AddLongEdges {
        source: NodeId,
        target: NodeId,
        chains: Vec<Vec<NodeId>>,
    },
}

impl PerturbationOp {
    pub fn kind(&self) -> OpKind {
        match self {
            PerturbationOp::AddNode { .. } => OpKind::AddNode,
            PerturbationOp::AddEdge { .. } => OpKind::AddEdge,
            PerturbationOp::Rewire { .. } => OpKind::Rewire,
            PerturbationOp::RemoveNode { .. } => OpKind::RemoveNode,
            PerturbationOp::AddSparseNodes { .. } => OpKind::AddSparseNodes,
            PerturbationOp::AddDenseNodes { .. } => OpKind::AddDenseNodes,
            PerturbationOp::AddLongEdges { .. } => OpKind::AddLongEdges,
        }
    }

    /// Node ids this op creates, in creation order.
    pub fn new_ids(&self) -> Vec<NodeId> {
        match self {
            PerturbationOp::AddNode { new_id, .. } => vec![*new_id],
            PerturbationOp::AddSparseNodes { new_ids, .. } | PerturbationOp::AddDenseNodes { new_ids, .. } => {
                new_ids.clone()
            }
            PerturbationOp::AddLongEdges { chains, .. } => chains.iter().flatten().copied().collect(),
            _ => Vec::new(),
        }
    }

    /// Existing nodes the op refers to, excluding the ids it creates.
    pub fn referenced_nodes(&self) -> Vec<NodeId> {
        match *self {
            PerturbationOp::AddNode { caller, .. } => vec![caller],
            PerturbationOp::AddEdge { caller, callee } => vec![caller, callee],
            PerturbationOp::Rewire { caller, callee, mid } => vec![caller, callee, mid],
            PerturbationOp::RemoveNode { target } => vec![target],
            PerturbationOp::AddSparseNodes { anchor, .. } | PerturbationOp::AddDenseNodes { anchor, .. } => {
                vec![anchor]
            }
            PerturbationOp::AddLongEdges { source, target, .. } => vec![source, target],
        }
    }

    /// Applies `f` to every node id the op mentions, created ids included.
    pub fn map_ids(&self, mut f: impl FnMut(NodeId) -> NodeId) -> PerturbationOp {
        match self {
            PerturbationOp::AddNode { caller, new_id } => {
                PerturbationOp::AddNode { caller: f(*caller), new_id: f(*new_id) }
            }
            PerturbationOp::AddEdge { caller, callee } => {
                PerturbationOp::AddEdge { caller: f(*caller), callee: f(*callee) }
            }
            PerturbationOp::Rewire { caller, callee, mid } => {
                PerturbationOp::Rewire { caller: f(*caller), callee: f(*callee), mid: f(*mid) }
            }
            PerturbationOp::RemoveNode { target } => PerturbationOp::RemoveNode { target: f(*target) },
            PerturbationOp::AddSparseNodes { anchor, new_ids } => {
                PerturbationOp::AddSparseNodes { anchor: f(*anchor), new_ids: new_ids.iter().map(|&v| f(v)).collect() }
            }
            PerturbationOp::AddDenseNodes { anchor, new_ids } => {
                PerturbationOp::AddDenseNodes { anchor: f(*anchor), new_ids: new_ids.iter().map(|&v| f(v)).collect() }
            }
            PerturbationOp::AddLongEdges { source, target, chains } => PerturbationOp::AddLongEdges {
                source: f(*source),
                target: f(*target),
                chains: chains.iter().map(|c| c.iter().map(|&v| f(v)).collect()).collect(),
            },
        }
    }

    /// Net (nodes, edges) this op adds to `g`; negative for removals.
    pub fn size_delta(&self, g: &FunctionCallGraph) -> (i64, i64) {
        match self {
            PerturbationOp::AddNode { .. } => (1, 1),
            PerturbationOp::AddEdge { .. } => (0, 1),
            PerturbationOp::Rewire { .. } => (0, 1),
            PerturbationOp::RemoveNode { target } => {
                let (callers, callees, bridged) = bridge_plan(g, *target);
                (-1, bridged.len() as i64 - callers.len() as i64 - callees.len() as i64)
            }
            PerturbationOp::AddSparseNodes { new_ids, .. } => (new_ids.len() as i64, new_ids.len() as i64),
            PerturbationOp::AddDenseNodes { new_ids, .. } => {
                let k = new_ids.len() as i64;
                (k, k + k * (k - 1) / 2)
            }
            PerturbationOp::AddLongEdges { chains, .. } => {
                let nodes: i64 = chains.iter().map(|c| c.len() as i64).sum();
                (nodes, nodes + chains.len() as i64)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidityError {
    #[error("node {0} does not exist")]
    MissingNode(NodeId),
    #[error("edge {}→{} does not exist", .0.0, .0.1)]
    MissingEdge(Edge),
    #[error("edge {}→{} already exists", .0.0, .0.1)]
    DuplicateEdge(Edge),
    #[error("node {0} already exists")]
    DuplicateNode(NodeId),
    #[error("node {node}: {reason}")]
    KindViolation { node: NodeId, reason: String },
}

fn kind_violation(node: NodeId, reason: &str) -> ValidityError {
    ValidityError::KindViolation { node, reason: reason.to_owned() }
}

/// An op failing at position `index` of a sequence.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("op {index} is invalid: {error}")]
pub struct SequenceError {
    pub index: usize,
    pub error: ValidityError,
}

fn require_node(g: &FunctionCallGraph, id: NodeId) -> Result<&NodeRecord, ValidityError> {
    g.node(id).ok_or(ValidityError::MissingNode(id))
}

fn require_user(g: &FunctionCallGraph, id: NodeId, role: &str) -> Result<(), ValidityError> {
    if require_node(g, id)?.is_user() {
        Ok(())
    } else {
        Err(ValidityError::KindViolation { node: id, reason: format!("{role} must be a user function") })
    }
}

fn require_absent_edge(g: &FunctionCallGraph, e: Edge) -> Result<(), ValidityError> {
    if g.contains_edge(e.0, e.1) {
        Err(ValidityError::DuplicateEdge(e))
    } else {
        Ok(())
    }
}

fn require_fresh(g: &FunctionCallGraph, ids: &[NodeId]) -> Result<(), ValidityError> {
    let mut seen = BTreeSet::new();
    for &id in ids {
        if g.contains_node(id) || !seen.insert(id) {
            return Err(ValidityError::DuplicateNode(id));
        }
    }
    Ok(())
}

/// (user callers, callees, bridged edges not already present) for removing `d`.
pub(crate) fn bridge_plan(g: &FunctionCallGraph, d: NodeId) -> (Vec<NodeId>, Vec<NodeId>, Vec<Edge>) {
    let callers: Vec<NodeId> = g.predecessors(d).collect();
    let callees: Vec<NodeId> = g.successors(d).collect();
    let mut bridged = Vec::new();
    for &h in &callers {
        for &c in &callees {
            if h != c && !g.contains_edge(h, c) {
                bridged.push((h, c));
            }
        }
    }
    (callers, callees, bridged)
}

/// Checks `op` against `g` without modifying it.
pub fn check_op(g: &FunctionCallGraph, op: &PerturbationOp) -> Result<(), ValidityError> {
    match op {
        PerturbationOp::AddNode { caller, new_id } => {
            require_user(g, *caller, "caller")?;
            require_fresh(g, &[*new_id])
        }
        PerturbationOp::AddEdge { caller, callee } => {
            require_user(g, *caller, "caller")?;
            require_node(g, *callee)?;
            if caller == callee {
                return Err(kind_violation(*caller, "self-calls are not allowed"));
            }
            require_absent_edge(g, (*caller, *callee))
        }
        PerturbationOp::Rewire { caller, callee, mid } => {
            require_node(g, *caller)?;
            require_node(g, *callee)?;
            require_user(g, *mid, "mid")?;
            if !g.contains_edge(*caller, *callee) {
                return Err(ValidityError::MissingEdge((*caller, *callee)));
            }
            if mid == caller || mid == callee {
                return Err(kind_violation(*mid, "mid must differ from both endpoints"));
            }
            require_absent_edge(g, (*caller, *mid))?;
            require_absent_edge(g, (*mid, *callee))
        }
        PerturbationOp::RemoveNode { target } => {
            require_user(g, *target, "removal target")?;
            // Bridging callers to callees keeps every path through the target,
            // so only a target without callers could cut an entry point off.
            if g.in_degree(*target) == 0 {
                return Err(kind_violation(*target, "removal target has no caller to inline into"));
            }
            Ok(())
        }
        PerturbationOp::AddSparseNodes { anchor, new_ids } | PerturbationOp::AddDenseNodes { anchor, new_ids } => {
            require_user(g, *anchor, "anchor")?;
            if new_ids.is_empty() {
                return Err(kind_violation(*anchor, "k must be at least 1"));
            }
            require_fresh(g, new_ids)
        }
        PerturbationOp::AddLongEdges { source, target, chains } => {
            require_user(g, *source, "source")?;
            if !require_node(g, *target)?.is_system() {
                return Err(kind_violation(*target, "long-edge target must be a system function"));
            }
            if chains.is_empty() || chains.iter().any(Vec::is_empty) {
                return Err(kind_violation(*source, "m and k must be at least 1"));
            }
            let ids: Vec<NodeId> = chains.iter().flatten().copied().collect();
            require_fresh(g, &ids)
        }
    }
}

fn add_synthetic(g: &mut FunctionCallGraph, id: NodeId) {
    g.insert_node(NodeRecord { id, kind: NodeKind::Synthetic, label: synthetic_label(id) })
        .expect("fresh id checked before mutation");
}

fn link(g: &mut FunctionCallGraph, u: NodeId, v: NodeId) {
    g.add_edge(u, v).expect("edge checked before mutation");
}

/// Applies `op` in place. On error `g` is unchanged.
pub fn apply_op(g: &mut FunctionCallGraph, op: &PerturbationOp) -> Result<(), ValidityError> {
    check_op(g, op)?;
    match op {
        PerturbationOp::AddNode { caller, new_id } => {
            add_synthetic(g, *new_id);
            link(g, *caller, *new_id);
        }
        PerturbationOp::AddEdge { caller, callee } => link(g, *caller, *callee),
        PerturbationOp::Rewire { caller, callee, mid } => {
            g.remove_edge(*caller, *callee);
            link(g, *caller, *mid);
            link(g, *mid, *callee);
        }
        PerturbationOp::RemoveNode { target } => {
            let (_, _, bridged) = bridge_plan(g, *target);
            g.remove_node(*target);
            for (h, c) in bridged {
                link(g, h, c);
            }
        }
        PerturbationOp::AddSparseNodes { anchor, new_ids } => {
            for &v in new_ids {
                add_synthetic(g, v);
                link(g, *anchor, v);
            }
        }
        PerturbationOp::AddDenseNodes { anchor, new_ids } => {
            for &v in new_ids {
                add_synthetic(g, v);
                link(g, *anchor, v);
            }
            for (i, &u) in new_ids.iter().enumerate() {
                for &v in &new_ids[i + 1..] {
                    link(g, u, v);
                }
            }
        }
        PerturbationOp::AddLongEdges { source, target, chains } => {
            for chain in chains {
                let mut prev = *source;
                for &v in chain {
                    add_synthetic(g, v);
                    link(g, prev, v);
                    prev = v;
                }
                link(g, prev, *target);
            }
        }
    }
    Ok(())
}

/// Left fold of [`apply_op`] over a copy of `g`.
pub fn apply_sequence(g: &FunctionCallGraph, ops: &[PerturbationOp]) -> Result<FunctionCallGraph, SequenceError> {
    let mut out = g.clone();
    for (index, op) in ops.iter().enumerate() {
        apply_op(&mut out, op).map_err(|error| SequenceError { index, error })?;
    }
    Ok(out)
}
