//! Shared generators and brute-force oracles for the integration tests.
//!
//! Nothing here calls into the code it checks except to build inputs: every
//! expected value is recomputed from the edge list with plain loops.

#![allow(dead_code)]

pub mod criteria;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use fcgprobe::graph::{Edge, FunctionCallGraph, NodeId, NodeKind, SensitiveApiIndex};
use fcgprobe::perturb::PerturbationOp;
use rand::seq::SliceRandom;
use rand::Rng;

pub const USER_PREFIXES: [&str; 3] = ["app.ui.", "app.net.", "lib.util."];

/// Random call graph with `2..=max_nodes` nodes. About a third are system
/// nodes labeled `sdk.api{i}`; users call each other and the SDK with
/// probability `p` per ordered pair.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize, p: f64) -> FunctionCallGraph {
    let n = rng.gen_range(2..=max_nodes);
    let n_sys = rng.gen_range(1..=(n / 3).max(1));
    let mut g = FunctionCallGraph::new();
    let users: Vec<NodeId> = (0..n - n_sys)
        .map(|i| {
            let prefix = USER_PREFIXES[rng.gen_range(0..USER_PREFIXES.len())];
            g.add_node(NodeKind::User, format!("{prefix}f{i}"))
        })
        .collect();
    let all: Vec<NodeId> =
        users.iter().copied().chain((0..n_sys).map(|i| g.add_node(NodeKind::System, format!("sdk.api{i}")))).collect();
    for &u in &users {
        for &v in &all {
            if u != v && rng.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// Sensitive APIs for graphs from [`random_graph`]: the first `k` SDK labels
/// plus one label no graph carries.
pub fn sensitive_apis(k: usize) -> SensitiveApiIndex {
    let mut apis: Vec<String> = (0..k).map(|i| format!("sdk.api{i}")).collect();
    apis.push("sdk.absent".into());
    SensitiveApiIndex::new(apis).unwrap()
}

// ---------------------------------------------------------------------------
// Centrality oracles

/// Edge list view with dense indices in node-id order.
pub struct Plain {
    pub ids: Vec<NodeId>,
    pub labels: Vec<String>,
    pub system: Vec<bool>,
    pub edges: Vec<(usize, usize)>,
}

impl Plain {
    pub fn of(g: &FunctionCallGraph) -> Self {
        let mut recs: Vec<_> = g.nodes().cloned().collect();
        recs.sort_by_key(|r| r.id);
        let pos: BTreeMap<NodeId, usize> = recs.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        let edges = g.edges().map(|(u, v)| (pos[&u], pos[&v])).collect();
        Self {
            ids: recs.iter().map(|r| r.id).collect(),
            labels: recs.iter().map(|r| r.label.clone()).collect(),
            system: recs.iter().map(|r| r.kind == NodeKind::System).collect(),
            edges,
        }
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Index of the system node labeled `api`.
    pub fn find_api(&self, api: &str) -> Option<usize> {
        (0..self.n()).find(|&i| self.system[i] && self.labels[i] == api)
    }

    /// BFS distances from `s` along edge direction; `None` if unreachable.
    pub fn distances_from(&self, s: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n()];
        out[s] = Some(0);
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &(a, b) in &self.edges {
                if a == u && out[b].is_none() {
                    out[b] = Some(out[u].unwrap() + 1);
                    q.push_back(b);
                }
            }
        }
        out
    }
}

pub fn degree_oracle(p: &Plain, v: usize) -> f64 {
    let touching = p.edges.iter().filter(|&&(a, b)| a == v || b == v).count();
    touching as f64 / (p.n() - 1) as f64
}

pub fn harmonic_oracle(p: &Plain, v: usize) -> f64 {
    (0..p.n()).filter(|&u| u != v).filter_map(|u| p.distances_from(u)[v]).map(|d| 1.0 / d as f64).sum()
}

pub fn closeness_oracle(p: &Plain, v: usize) -> f64 {
    let dists: Vec<usize> = (0..p.n()).filter(|&u| u != v).filter_map(|u| p.distances_from(u)[v]).collect();
    let total: usize = dists.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let r = dists.len() as f64;
    r * r / (total as f64 * (p.n() - 1) as f64)
}

/// Σ_{k=1..terms} α^k · (column v of A^k summed over rows), by dense
/// matrix powers.
pub fn katz_oracle(p: &Plain, alpha: f64, terms: usize) -> Vec<f64> {
    let n = p.n();
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in &p.edges {
        a[u][v] = 1.0;
    }
    let mut power = a.clone();
    let mut scale = alpha;
    let mut out = vec![0.0; n];
    for _ in 0..terms {
        for v in 0..n {
            out[v] += scale * (0..n).map(|i| power[i][v]).sum::<f64>();
        }
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                if power[i][k] != 0.0 {
                    for j in 0..n {
                        next[i][j] += power[i][k] * a[k][j];
                    }
                }
            }
        }
        power = next;
        scale *= alpha;
    }
    out
}

/// Longest listed prefix of `label`, else the reserved state `max + 1`.
pub fn state_oracle(entries: &[(String, usize)], label: &str) -> usize {
    let reserved = entries.iter().map(|e| e.1).max().map_or(0, |m| m + 1);
    entries.iter().filter(|(p, _)| label.starts_with(p.as_str())).max_by_key(|(p, _)| p.len()).map_or(reserved, |e| e.1)
}

/// Count transitions between abstract states, then normalize each row.
pub fn markov_oracle(p: &Plain, entries: &[(String, usize)]) -> Vec<f64> {
    let s = entries.iter().map(|e| e.1).max().map_or(1, |m| m + 2);
    let mut counts = vec![vec![0usize; s]; s];
    for &(u, v) in &p.edges {
        counts[state_oracle(entries, &p.labels[u])][state_oracle(entries, &p.labels[v])] += 1;
    }
    counts
        .iter()
        .flat_map(|row| {
            let total: usize = row.iter().sum();
            row.iter().map(move |&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Set-algebra model of the perturbation operators

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetGraph {
    /// id → (is system, label)
    pub nodes: BTreeMap<NodeId, (bool, String)>,
    pub edges: BTreeSet<Edge>,
}

impl SetGraph {
    pub fn of(g: &FunctionCallGraph) -> Self {
        Self {
            nodes: g.nodes().map(|r| (r.id, (r.kind == NodeKind::System, r.label.clone()))).collect(),
            edges: g.edges().collect(),
        }
    }

    fn is_user(&self, v: NodeId) -> bool {
        self.nodes.get(&v).is_some_and(|n| !n.0)
    }

    fn is_system(&self, v: NodeId) -> bool {
        self.nodes.get(&v).is_some_and(|n| n.0)
    }

    fn fresh(&self, ids: &[NodeId]) -> bool {
        let distinct: BTreeSet<_> = ids.iter().collect();
        distinct.len() == ids.len() && ids.iter().all(|v| !self.nodes.contains_key(v))
    }

    fn add(&mut self, v: NodeId) {
        self.nodes.insert(v, (false, format!("synthetic.fn{}", v.0)));
    }

    /// Post-state of `op`, or `None` when the op is invalid here.
    pub fn apply(&self, op: &PerturbationOp) -> Option<SetGraph> {
        let mut g = self.clone();
        match op {
            PerturbationOp::AddNode { caller, new_id } => {
                if !self.is_user(*caller) || !self.fresh(&[*new_id]) {
                    return None;
                }
                g.add(*new_id);
                g.edges.insert((*caller, *new_id));
            }
            PerturbationOp::AddEdge { caller, callee } => {
                if !self.is_user(*caller)
                    || !self.nodes.contains_key(callee)
                    || caller == callee
                    || self.edges.contains(&(*caller, *callee))
                {
                    return None;
                }
                g.edges.insert((*caller, *callee));
            }
            PerturbationOp::Rewire { caller, callee, mid } => {
                let (a, d, h) = (*caller, *callee, *mid);
                if !self.edges.contains(&(a, d))
                    || !self.is_user(h)
                    || h == a
                    || h == d
                    || self.edges.contains(&(a, h))
                    || self.edges.contains(&(h, d))
                {
                    return None;
                }
                g.edges.remove(&(a, d));
                g.edges.insert((a, h));
                g.edges.insert((h, d));
            }
            PerturbationOp::RemoveNode { target } => {
                let t = *target;
                let callers: Vec<NodeId> = self.edges.iter().filter(|e| e.1 == t).map(|e| e.0).collect();
                let callees: Vec<NodeId> = self.edges.iter().filter(|e| e.0 == t).map(|e| e.1).collect();
                if !self.is_user(t) || callers.is_empty() {
                    return None;
                }
                g.nodes.remove(&t);
                g.edges.retain(|e| e.0 != t && e.1 != t);
                for &h in &callers {
                    for &c in &callees {
                        if h != c {
                            g.edges.insert((h, c));
                        }
                    }
                }
            }
            PerturbationOp::AddSparseNodes { anchor, new_ids } | PerturbationOp::AddDenseNodes { anchor, new_ids } => {
                if !self.is_user(*anchor) || new_ids.is_empty() || !self.fresh(new_ids) {
                    return None;
                }
                for &v in new_ids {
                    g.add(v);
                    g.edges.insert((*anchor, v));
                }
                if matches!(op, PerturbationOp::AddDenseNodes { .. }) {
                    for (i, &u) in new_ids.iter().enumerate() {
                        for &v in &new_ids[i + 1..] {
                            g.edges.insert((u, v));
                        }
                    }
                }
            }
            PerturbationOp::AddLongEdges { source, target, chains } => {
                let ids: Vec<NodeId> = chains.iter().flatten().copied().collect();
                if !self.is_user(*source)
                    || !self.is_system(*target)
                    || chains.is_empty()
                    || chains.iter().any(Vec::is_empty)
                    || !self.fresh(&ids)
                {
                    return None;
                }
                for chain in chains {
                    let mut prev = *source;
                    for &v in chain {
                        g.add(v);
                        g.edges.insert((prev, v));
                        prev = v;
                    }
                    g.edges.insert((prev, *target));
                }
            }
        }
        Some(g)
    }
}

/// A random op over `g`'s ids, fresh ids from `next`, and a few ids that do
/// not exist. Roughly half of these are invalid.
pub fn random_op<R: Rng>(rng: &mut R, g: &FunctionCallGraph, next: &mut u64) -> PerturbationOp {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let edges: Vec<Edge> = g.edges().collect();
    let any = |rng: &mut R| -> NodeId {
        match rng.gen_range(0..10) {
            0 => NodeId(1_000_000 + rng.gen_range(0..3)),
            _ => *ids.choose(rng).unwrap(),
        }
    };
    let mut fresh = |rng: &mut R, k: usize| -> Vec<NodeId> {
        (0..k)
            .map(|_| {
                if rng.gen_range(0..40) == 0 {
                    *ids.choose(rng).unwrap()
                } else {
                    *next += 1;
                    NodeId(*next)
                }
            })
            .collect()
    };
    match rng.gen_range(0..7) {
        0 => PerturbationOp::AddNode { caller: any(rng), new_id: fresh(rng, 1)[0] },
        1 => PerturbationOp::AddEdge { caller: any(rng), callee: any(rng) },
        2 => {
            let (caller, callee) = match edges.choose(rng) {
                Some(&e) if rng.gen_bool(0.8) => e,
                _ => (any(rng), any(rng)),
            };
            PerturbationOp::Rewire { caller, callee, mid: any(rng) }
        }
        3 => PerturbationOp::RemoveNode { target: any(rng) },
        4 => {
            let k = rng.gen_range(0..5);
            PerturbationOp::AddSparseNodes { anchor: any(rng), new_ids: fresh(rng, k) }
        }
        5 => {
            let k = rng.gen_range(0..5);
            PerturbationOp::AddDenseNodes { anchor: any(rng), new_ids: fresh(rng, k) }
        }
        _ => {
            let m = rng.gen_range(0..3);
            let chains = (0..m)
                .map(|_| {
                    let k = rng.gen_range(0..4);
                    fresh(rng, k)
                })
                .collect();
            PerturbationOp::AddLongEdges { source: any(rng), target: any(rng), chains }
        }
    }
}

// ---------------------------------------------------------------------------
// Exact Shapley values

/// φ_i = Σ_{S ⊆ N∖{i}} |S|!(n−|S|−1)!/n! · (v(S∪{i}) − v(S)) with
/// v(S) = f(x on S, baseline elsewhere).
pub fn exact_shapley(f: &dyn Fn(&[f64]) -> f64, baseline: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let value = |mask: usize| {
        let point: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { x[i] } else { baseline[i] }).collect();
        f(&point)
    };
    let values: Vec<f64> = (0..1usize << n).map(value).collect();
    (0..n)
        .map(|i| {
            (0..1usize << n)
                .filter(|m| m >> i & 1 == 0)
                .map(|m| {
                    let s = m.count_ones() as usize;
                    fact(s) * fact(n - s - 1) / fact(n) * (values[m | 1 << i] - values[m])
                })
                .sum()
        })
        .collect()
}
