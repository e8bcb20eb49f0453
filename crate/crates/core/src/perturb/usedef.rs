use std::collections::BTreeSet;

use crate::graph::{Edge, FunctionCallGraph, NodeId};

use super::{bridge_plan, PerturbationOp};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Footprint {
    pub nodes: BTreeSet<NodeId>,
    pub edges: BTreeSet<Edge>,
}

impl Footprint {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    pub fn intersects(&self, other: &Footprint) -> bool {
        !self.nodes.is_disjoint(&other.nodes) || !self.edges.is_disjoint(&other.edges)
    }

    pub fn extend(&mut self, other: &Footprint) {
        self.nodes.extend(other.nodes.iter().copied());
        self.edges.extend(other.edges.iter().copied());
    }
}

/// Elements an op creates, requires to pre-exist, and removes.
/// `kills ⊆ uses`, and no node is both defined and used.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UseDefSet {
    pub defines: Footprint,
    pub uses: Footprint,
    pub kills: Footprint,
}

impl UseDefSet {
    /// True when `later` needs something this set defines or kills.
    pub fn feeds(&self, later: &UseDefSet) -> bool {
        later.uses.intersects(&self.defines) || later.uses.intersects(&self.kills)
    }

    pub fn extend(&mut self, other: &UseDefSet) {
        self.defines.extend(&other.defines);
        self.uses.extend(&other.uses);
        self.kills.extend(&other.kills);
    }
}

fn chain_edges(start: NodeId, ids: &[NodeId]) -> impl Iterator<Item = Edge> + '_ {
    std::iter::once(start).chain(ids.iter().copied()).zip(ids.iter().copied())
}

/// Use-def sets from the op's parameters alone.
pub fn use_def(op: &PerturbationOp) -> UseDefSet {
    let mut s = UseDefSet::default();
    match op {
        PerturbationOp::AddNode { caller, new_id } => {
            s.uses.nodes.insert(*caller);
            s.defines.nodes.insert(*new_id);
            s.defines.edges.insert((*caller, *new_id));
        }
        PerturbationOp::AddEdge { caller, callee } => {
            s.uses.nodes.extend([*caller, *callee]);
            s.defines.edges.insert((*caller, *callee));
        }
        PerturbationOp::Rewire { caller, callee, mid } => {
            s.uses.nodes.extend([*caller, *callee, *mid]);
            s.uses.edges.insert((*caller, *callee));
            s.kills.edges.insert((*caller, *callee));
            s.defines.edges.extend([(*caller, *mid), (*mid, *callee)]);
        }
        PerturbationOp::RemoveNode { target } => {
            s.uses.nodes.insert(*target);
            s.kills.nodes.insert(*target);
        }
        PerturbationOp::AddSparseNodes { anchor, new_ids } => {
            s.uses.nodes.insert(*anchor);
            s.defines.nodes.extend(new_ids.iter().copied());
            s.defines.edges.extend(new_ids.iter().map(|&v| (*anchor, v)));
        }
        PerturbationOp::AddDenseNodes { anchor, new_ids } => {
            s.uses.nodes.insert(*anchor);
            s.defines.nodes.extend(new_ids.iter().copied());
            s.defines.edges.extend(new_ids.iter().map(|&v| (*anchor, v)));
            for (i, &u) in new_ids.iter().enumerate() {
                s.defines.edges.extend(new_ids[i + 1..].iter().map(|&v| (u, v)));
            }
        }
        PerturbationOp::AddLongEdges { source, target, chains } => {
            s.uses.nodes.extend([*source, *target]);
            for chain in chains {
                s.defines.nodes.extend(chain.iter().copied());
                s.defines.edges.extend(chain_edges(*source, chain));
                if let Some(&last) = chain.last() {
                    s.defines.edges.insert((last, *target));
                }
            }
        }
    }
    s
}

/// [`use_def`] completed against the graph the op is applied to: a removal
/// also uses and kills the target's incident edges and defines the bridging
/// edges it creates.
pub fn resolved_use_def(g: &FunctionCallGraph, op: &PerturbationOp) -> UseDefSet {
    let mut s = use_def(op);
    if let PerturbationOp::RemoveNode { target } = op {
        let (callers, callees, bridged) = bridge_plan(g, *target);
        let incident = callers.iter().map(|&h| (h, *target)).chain(callees.iter().map(|&c| (*target, c)));
        for e in incident {
            s.uses.edges.insert(e);
            s.kills.edges.insert(e);
        }
        s.defines.edges.extend(bridged);
    }
    s
}

/// `later.uses ∩ (earlier.defines ∪ earlier.kills) ≠ ∅`, per node and per edge.
pub fn has_dependency(earlier: &PerturbationOp, later: &PerturbationOp) -> bool {
    use_def(earlier).feeds(&use_def(later))
}
