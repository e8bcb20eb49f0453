//! Dependency-grouped individuals and the variation operators over them.
//!
//! An individual is an ordered list of sub-sequences; its op sequence is their
//! concatenation, and every individual this module returns replays cleanly on
//! the base graph. Ops that use something another op defines or kills share a
//! sub-sequence, so sub-sequences can be kept or dropped independently.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CriticalArea, Edge, FunctionCallGraph, NodeId};
use crate::perturb::{
    check_op, random_op, resolved_use_def, IdAllocator, NoValidOp, NodePool, OpParams, OpWeights, PerturbationOp,
    SequenceError, UseDefSet, ValidityError, WorkingState,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubSequence {
    pub ops: Vec<PerturbationOp>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Individual {
    groups: Vec<SubSequence>,
}

impl Individual {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Wraps groups without checking them; see [`Genome::check`].
    pub fn from_groups(groups: Vec<SubSequence>) -> Self {
        Self { groups }
    }

    pub fn groups(&self) -> &[SubSequence] {
        &self.groups
    }

    /// Total op count.
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.ops.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn flat(&self) -> Vec<PerturbationOp> {
        self.groups.iter().flat_map(|g| g.ops.iter().cloned()).collect()
    }

    pub fn replay(&self, base: &FunctionCallGraph) -> Result<FunctionCallGraph, SequenceError> {
        let mut g = base.clone();
        for (index, op) in self.groups.iter().flat_map(|s| &s.ops).enumerate() {
            crate::perturb::apply_op(&mut g, op).map_err(|error| SequenceError { index, error })?;
        }
        Ok(g)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenomeError {
    #[error("sequence does not replay: {0}")]
    InvalidSequence(SequenceError),
    #[error("repair did not converge within {passes} passes")]
    RepairFailed { passes: usize },
    #[error(transparent)]
    NoValidOp(#[from] NoValidOp),
    #[error("individual has an empty sub-sequence")]
    EmptyGroup,
    #[error("sub-sequence {group} is not a dependency group")]
    BadGrouping { group: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenomeConfig {
    /// Group dependent ops, rename colliding ids in crossover and retarget
    /// failing ops in repair. When off every op is its own group and repair
    /// only deletes.
    pub dependency_aware: bool,
    pub keep_probability: f64,
    pub repair_passes: usize,
    pub retarget_attempts: usize,
    /// Longest allowed individual; longer results are cut to a prefix.
    pub max_ops: usize,
    pub weights: OpWeights,
    pub params: OpParams,
}

impl Default for GenomeConfig {
    fn default() -> Self {
        Self {
            dependency_aware: true,
            keep_probability: 0.5,
            repair_passes: 3,
            retarget_attempts: 8,
            max_ops: 600,
            weights: OpWeights::default(),
            params: OpParams::default(),
        }
    }
}

/// Counts of ops changed by repair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RepairStats {
    pub retargeted: usize,
    pub deleted: usize,
}

impl RepairStats {
    pub fn total(&self) -> usize {
        self.retargeted + self.deleted
    }

    fn add(&mut self, o: RepairStats) {
        self.retargeted += o.retargeted;
        self.deleted += o.deleted;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    Add,
    Remove,
    Update,
}

#[derive(Debug, Clone)]
pub struct Mutation {
    pub individual: Individual,
    pub kind: MutationKind,
    /// True when repair failed and `individual` is the unchanged input.
    pub abandoned: bool,
    pub repairs: RepairStats,
}

/// Groups op indices: each op joins the group whose accumulated definitions
/// or kills it uses; an op feeding on several groups merges them.
fn group_indices(uds: &[UseDefSet], aware: bool) -> Vec<Vec<usize>> {
    if !aware {
        return (0..uds.len()).map(|i| vec![i]).collect();
    }
    // Union-find over op indices; `owner` maps each defined or killed element
    // to some op of the group that produced it.
    let mut parent: Vec<usize> = (0..uds.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut node_owner: FxHashMap<NodeId, usize> = FxHashMap::default();
    let mut edge_owner: FxHashMap<Edge, usize> = FxHashMap::default();
    for (i, ud) in uds.iter().enumerate() {
        let feeders: Vec<usize> = ud
            .uses
            .nodes
            .iter()
            .filter_map(|v| node_owner.get(v))
            .chain(ud.uses.edges.iter().filter_map(|e| edge_owner.get(e)))
            .copied()
            .collect();
        for f in feeders {
            let r = root(&mut parent, f);
            parent[r] = i;
        }
        // Every op that defines or kills an element shares its group, so no
        // later user can depend on two groups through one element.
        let mut previous = Vec::new();
        for fp in [&ud.defines, &ud.kills] {
            previous.extend(fp.nodes.iter().filter_map(|&v| node_owner.insert(v, i)));
            previous.extend(fp.edges.iter().filter_map(|&e| edge_owner.insert(e, i)));
        }
        for p in previous {
            let (r, ri) = (root(&mut parent, p), root(&mut parent, i));
            parent[r] = ri;
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..uds.len() {
        let r = root(&mut parent, i);
        by_root.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
    out.sort_by_key(|m| m[0]);
    out
}

/// Replays `ops` on `base`, returning each op's use-def set against the
/// state it was applied to.
fn replay_use_defs(base: &FunctionCallGraph, ops: &[PerturbationOp]) -> Result<Vec<UseDefSet>, SequenceError> {
    let mut g = base.clone();
    let mut out = Vec::with_capacity(ops.len());
    for (index, op) in ops.iter().enumerate() {
        out.push(resolved_use_def(&g, op));
        crate::perturb::apply_op(&mut g, op).map_err(|error| SequenceError { index, error })?;
    }
    Ok(out)
}

/// Groups a sequence that replays on `base`. Op order inside each group is
/// the input order; groups are ordered by their first op.
pub fn group_dependencies(
    base: &FunctionCallGraph,
    ops: &[PerturbationOp],
    dependency_aware: bool,
) -> Result<Individual, GenomeError> {
    let uds = replay_use_defs(base, ops).map_err(GenomeError::InvalidSequence)?;
    let groups = group_indices(&uds, dependency_aware)
        .into_iter()
        .map(|idx| SubSequence { ops: idx.into_iter().map(|i| ops[i].clone()).collect() })
        .collect();
    Ok(Individual { groups })
}

/// Variation operators bound to one base graph and critical area.
#[derive(Debug, Clone)]
pub struct Genome<'a> {
    pub base: &'a FunctionCallGraph,
    pub area: &'a CriticalArea,
    pub cfg: GenomeConfig,
    applied: Cell<u64>,
}

enum Slot {
    User,
    Removable,
    Callee,
    Anchor,
}

fn pick_from<R: Rng + ?Sized>(pool: &[NodeId], rng: &mut R) -> Option<NodeId> {
    (!pool.is_empty()).then(|| pool[rng.gen_range(0..pool.len())])
}

fn pick_set<R: Rng + ?Sized>(pool: &NodePool, rng: &mut R) -> Option<NodeId> {
    (!pool.is_empty()).then(|| pool[rng.gen_range(0..pool.len())])
}

impl<'a> Genome<'a> {
    pub fn new(base: &'a FunctionCallGraph, area: &'a CriticalArea, cfg: GenomeConfig) -> Self {
        Self { base, area, cfg, applied: Cell::new(0) }
    }

    fn fresh_state(&self) -> WorkingState {
        WorkingState::new(self.base.clone(), self.area)
    }

    fn draw_for<R: Rng + ?Sized>(&self, slot: Slot, s: &WorkingState, rng: &mut R) -> Option<NodeId> {
        match slot {
            Slot::User => pick_set(s.user_pool(), rng),
            Slot::Callee => pick_set(s.callee_pool(), rng),
            Slot::Anchor => pick_from(s.anchors(), rng),
            Slot::Removable => {
                let cands: Vec<NodeId> =
                    s.user_pool().iter().copied().filter(|&v| s.graph().in_degree(v) > 0).collect();
                pick_from(&cands, rng)
            }
        }
    }

    /// Changes the reference `err` blames to another node of the same role.
    fn fix_once<R: Rng + ?Sized>(
        &self,
        op: PerturbationOp,
        err: &ValidityError,
        s: &WorkingState,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> Option<PerturbationOp> {
        use PerturbationOp as P;
        if let ValidityError::DuplicateNode(_) = err {
            let created: BTreeSet<NodeId> = op.new_ids().into_iter().collect();
            let fresh: BTreeMap<NodeId, NodeId> = created.iter().map(|&v| (v, alloc.fresh())).collect();
            return Some(op.map_ids(|v| fresh.get(&v).copied().unwrap_or(v)));
        }
        let blamed = match err {
            ValidityError::MissingNode(v) | ValidityError::KindViolation { node: v, .. } => Some(*v),
            _ => None,
        };
        Some(match op {
            P::AddNode { caller, new_id } => {
                P::AddNode { caller: self.draw_for(Slot::User, s, rng).filter(|_| blamed == Some(caller))?, new_id }
            }
            P::AddEdge { caller, callee } => {
                if blamed == Some(caller) && caller != callee {
                    P::AddEdge { caller: self.draw_for(Slot::User, s, rng)?, callee }
                } else {
                    P::AddEdge { caller, callee: self.draw_for(Slot::Callee, s, rng)? }
                }
            }
            P::Rewire { caller, callee, mid } => match err {
                ValidityError::MissingEdge(_) if s.graph().contains_node(caller) => {
                    let succ: Vec<NodeId> =
                        s.graph().successors(caller).filter(|v| s.callee_pool().contains(v)).collect();
                    match pick_from(&succ, rng) {
                        Some(c) => P::Rewire { caller, callee: c, mid },
                        None => P::Rewire { caller: self.draw_for(Slot::User, s, rng)?, callee, mid },
                    }
                }
                ValidityError::MissingNode(v) if *v == caller => {
                    P::Rewire { caller: self.draw_for(Slot::User, s, rng)?, callee, mid }
                }
                ValidityError::MissingNode(v) if *v == callee => {
                    let succ: Vec<NodeId> = if s.graph().contains_node(caller) {
                        s.graph().successors(caller).filter(|v| s.callee_pool().contains(v)).collect()
                    } else {
                        Vec::new()
                    };
                    P::Rewire { caller, callee: pick_from(&succ, rng)?, mid }
                }
                _ => P::Rewire { caller, callee, mid: self.draw_for(Slot::User, s, rng)? },
            },
            P::RemoveNode { .. } => P::RemoveNode { target: self.draw_for(Slot::Removable, s, rng)? },
            P::AddSparseNodes { anchor, new_ids } => P::AddSparseNodes {
                anchor: self.draw_for(Slot::User, s, rng).filter(|_| blamed == Some(anchor))?,
                new_ids,
            },
            P::AddDenseNodes { anchor, new_ids } => P::AddDenseNodes {
                anchor: self.draw_for(Slot::User, s, rng).filter(|_| blamed == Some(anchor))?,
                new_ids,
            },
            P::AddLongEdges { source, target, chains } => {
                if blamed == Some(target) {
                    P::AddLongEdges { source, target: self.draw_for(Slot::Anchor, s, rng)?, chains }
                } else if blamed == Some(source) {
                    P::AddLongEdges { source: self.draw_for(Slot::User, s, rng)?, target, chains }
                } else {
                    return None;
                }
            }
        })
    }

    /// Tries to rewrite a failing op so it applies to `s`, changing only the
    /// references that fail.
    fn retarget<R: Rng + ?Sized>(
        &self,
        op: &PerturbationOp,
        s: &WorkingState,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> Option<PerturbationOp> {
        for _ in 0..self.cfg.retarget_attempts {
            let mut cand = op.clone();
            for _ in 0..4 {
                match check_op(s.graph(), &cand) {
                    Ok(()) => return Some(cand),
                    Err(e) => match self.fix_once(cand, &e, s, alloc, rng) {
                        Some(next) => cand = next,
                        None => break,
                    },
                }
            }
        }
        None
    }

    fn apply_counted(&self, state: &mut WorkingState, op: &PerturbationOp) -> Result<(), ValidityError> {
        self.applied.set(self.applied.get() + 1);
        state.apply(op)
    }

    /// Number of op applications this genome has performed.
    pub fn applied(&self) -> u64 {
        self.applied.get()
    }

    /// One forward pass: ops that fail are retargeted (when dependency-aware)
    /// or deleted. The result replays cleanly by construction; the use-def set
    /// of each surviving op is resolved against the state it met.
    fn repair_pass<R: Rng + ?Sized>(
        &self,
        ops: Vec<PerturbationOp>,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> (Vec<PerturbationOp>, Vec<UseDefSet>, RepairStats, FunctionCallGraph) {
        let mut state = self.fresh_state();
        let mut out = Vec::with_capacity(ops.len());
        let mut uds = Vec::with_capacity(ops.len());
        let mut stats = RepairStats::default();
        for op in ops {
            let ud = resolved_use_def(state.graph(), &op);
            if self.apply_counted(&mut state, &op).is_ok() {
                out.push(op);
                uds.push(ud);
                continue;
            }
            let fixed = if self.cfg.dependency_aware { self.retarget(&op, &state, alloc, rng) } else { None };
            match fixed {
                Some(f) => {
                    uds.push(resolved_use_def(state.graph(), &f));
                    self.apply_counted(&mut state, &f).expect("retargeted op was checked");
                    out.push(f);
                    stats.retargeted += 1;
                }
                None => stats.deleted += 1,
            }
        }
        (out, uds, stats, state.into_graph())
    }

    /// Repairs `ops` and groups them, repeating until the concatenated groups
    /// are a fixed point of repair and grouping. The result is cut to
    /// `max_ops`.
    pub fn repair<R: Rng + ?Sized>(
        &self,
        ops: Vec<PerturbationOp>,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> Result<(Individual, RepairStats), GenomeError> {
        self.repair_keep_graph(ops, alloc, rng).map(|(ind, stats, _)| (ind, stats))
    }

    /// [`Genome::repair`] plus the replayed graph of the result.
    fn repair_keep_graph<R: Rng + ?Sized>(
        &self,
        ops: Vec<PerturbationOp>,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> Result<(Individual, RepairStats, Option<FunctionCallGraph>), GenomeError> {
        let mut stats = RepairStats::default();
        let mut ops = ops;
        for _ in 0..self.cfg.repair_passes.max(1) {
            let (fixed, uds, s, graph) = self.repair_pass(ops, alloc, rng);
            stats.add(s);
            let order = group_indices(&uds, self.cfg.dependency_aware);
            let in_order = order.iter().flatten().enumerate().all(|(i, &j)| i == j);
            let mut slots: Vec<Option<PerturbationOp>> = fixed.into_iter().map(Some).collect();
            let groups: Vec<SubSequence> = order
                .iter()
                .map(|idx| SubSequence {
                    ops: idx.iter().map(|&i| slots[i].take().expect("index used once")).collect(),
                })
                .collect();
            let mut ind = Individual { groups };
            if in_order {
                if ind.len() <= self.cfg.max_ops {
                    return Ok((ind, stats, Some(graph)));
                }
                // A cut op may have been what merged two groups, so the
                // prefix goes round again to be regrouped.
                self.truncate(&mut ind);
            }
            ops = ind.flat();
        }
        Err(GenomeError::RepairFailed { passes: self.cfg.repair_passes })
    }

    /// Keeps the longest prefix of at most `max_ops` ops. Prefixes of a
    /// valid sequence are valid, but their grouping can be finer.
    fn truncate(&self, ind: &mut Individual) {
        let mut budget = self.cfg.max_ops;
        ind.groups.retain_mut(|g| {
            g.ops.truncate(budget);
            budget -= g.ops.len();
            !g.ops.is_empty()
        });
    }

    /// Draws `n_ops` ops one after another on an evolving copy of the base.
    pub fn init_individual<R: Rng + ?Sized>(
        &self,
        n_ops: usize,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> Result<Individual, GenomeError> {
        self.init_keep_graph(n_ops, alloc, rng).map(|(ind, _)| ind)
    }

    /// [`Genome::init_individual`] plus the replayed graph when at hand.
    pub fn init_keep_graph<R: Rng + ?Sized>(
        &self,
        n_ops: usize,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> Result<(Individual, Option<FunctionCallGraph>), GenomeError> {
        let mut state = self.fresh_state();
        let mut ops = Vec::with_capacity(n_ops);
        for _ in 0..n_ops {
            let op = random_op(&state, &self.cfg.weights, &self.cfg.params, alloc, rng)?;
            self.apply_counted(&mut state, &op).expect("random_op returns ops valid for the state");
            ops.push(op);
        }
        self.repair_keep_graph(ops, alloc, rng).map(|(ind, _, graph)| (ind, graph))
    }

    /// Each group is kept with `keep_probability`. Child one is x's kept
    /// groups then y's kept groups; child two gets the rest, y's first.
    pub fn crossover<R: Rng + ?Sized>(
        &self,
        x: &Individual,
        y: &Individual,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> ((Individual, Individual), RepairStats) {
        let (((c1, _), (c2, _)), stats) = self.crossover_keep_graph(x, y, alloc, rng);
        ((c1, c2), stats)
    }

    #[allow(clippy::type_complexity)]
    fn crossover_keep_graph<R: Rng + ?Sized>(
        &self,
        x: &Individual,
        y: &Individual,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> (((Individual, Option<FunctionCallGraph>), (Individual, Option<FunctionCallGraph>)), RepairStats) {
        let p = self.cfg.keep_probability;
        let mut split = |ind: &Individual| -> (Vec<SubSequence>, Vec<SubSequence>) {
            ind.groups.iter().cloned().partition(|_| rng.gen_bool(p))
        };
        let (xk, xd) = split(x);
        let (yk, yd) = split(y);
        let mut stats = RepairStats::default();
        let mut build = |first: Vec<SubSequence>, second: Vec<SubSequence>, rng: &mut R| {
            let ops = self.assemble(first, second, alloc);
            match self.repair_keep_graph(ops, alloc, rng) {
                Ok((ind, s, graph)) => {
                    stats.add(s);
                    (ind, graph)
                }
                Err(_) => (Individual::empty(), None),
            }
        };
        let c1 = build(xk, yk, rng);
        let c2 = build(yd, xd, rng);
        ((c1, c2), stats)
    }

    /// Crossover, then each child is mutated with `mutation_probability`.
    /// Each child comes with its replayed graph when repair already built
    /// it.
    pub fn breed<R: Rng + ?Sized>(
        &self,
        x: &Individual,
        y: &Individual,
        mutation_probability: f64,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> [(Individual, Option<FunctionCallGraph>); 2] {
        let ((c1, c2), _) = self.crossover_keep_graph(x, y, alloc, rng);
        [c1, c2].map(|(child, graph)| {
            if !rng.gen_bool(mutation_probability) {
                return (child, graph);
            }
            let (m, mgraph) = self.mutate_keep_graph(&child, alloc, rng);
            if m.abandoned {
                (child, graph)
            } else {
                (m.individual, mgraph)
            }
        })
    }

    /// Concatenates groups, renaming the created ids of any later group that
    /// collide with ids created by earlier ones.
    fn assemble(
        &self,
        first: Vec<SubSequence>,
        second: Vec<SubSequence>,
        alloc: &mut IdAllocator,
    ) -> Vec<PerturbationOp> {
        let mut created: BTreeSet<NodeId> = BTreeSet::new();
        let mut out = Vec::new();
        for g in first.into_iter().chain(second) {
            let ids: BTreeSet<NodeId> = g.ops.iter().flat_map(|o| o.new_ids()).collect();
            let ops = if self.cfg.dependency_aware && !created.is_disjoint(&ids) {
                let fresh: BTreeMap<NodeId, NodeId> = ids.iter().map(|&v| (v, alloc.fresh())).collect();
                g.ops.iter().map(|o| o.map_ids(|v| fresh.get(&v).copied().unwrap_or(v))).collect()
            } else {
                g.ops
            };
            created.extend(ops.iter().flat_map(|o| o.new_ids()));
            out.extend(ops);
        }
        out
    }

    /// Adds, removes or replaces one op at a uniformly chosen group and
    /// position, then repairs. A failed repair returns the input unchanged.
    pub fn mutate<R: Rng + ?Sized>(&self, ind: &Individual, alloc: &mut IdAllocator, rng: &mut R) -> Mutation {
        self.mutate_keep_graph(ind, alloc, rng).0
    }

    fn mutate_keep_graph<R: Rng + ?Sized>(
        &self,
        ind: &Individual,
        alloc: &mut IdAllocator,
        rng: &mut R,
    ) -> (Mutation, Option<FunctionCallGraph>) {
        let kind = if ind.is_empty() {
            MutationKind::Add
        } else {
            [MutationKind::Add, MutationKind::Remove, MutationKind::Update][rng.gen_range(0..3)]
        };
        let mut flat = ind.flat();
        let (offset, glen) = if ind.is_empty() {
            (0, 0)
        } else {
            let g = rng.gen_range(0..ind.groups.len());
            (ind.groups[..g].iter().map(|s| s.ops.len()).sum::<usize>(), ind.groups[g].ops.len())
        };
        let pos = offset + if kind == MutationKind::Add { rng.gen_range(0..=glen) } else { rng.gen_range(0..glen) };
        let abandon = |repairs| (Mutation { individual: ind.clone(), kind, abandoned: true, repairs }, None);
        match kind {
            MutationKind::Remove => {
                flat.remove(pos);
            }
            MutationKind::Add | MutationKind::Update => {
                let mut state = self.fresh_state();
                for op in &flat[..pos] {
                    self.apply_counted(&mut state, op).expect("individuals replay cleanly");
                }
                let Ok(op) = random_op(&state, &self.cfg.weights, &self.cfg.params, alloc, rng) else {
                    return abandon(RepairStats::default());
                };
                if kind == MutationKind::Add {
                    flat.insert(pos, op);
                } else {
                    flat[pos] = op;
                }
            }
        }
        match self.repair_keep_graph(flat, alloc, rng) {
            Ok((individual, repairs, graph)) => (Mutation { individual, kind, abandoned: false, repairs }, graph),
            Err(_) => abandon(RepairStats::default()),
        }
    }

    /// Checks that `ind` replays and that its groups are exactly the ones
    /// grouping its own sequence would produce.
    pub fn check(&self, ind: &Individual) -> Result<(), GenomeError> {
        if ind.groups.iter().any(|g| g.ops.is_empty()) {
            return Err(GenomeError::EmptyGroup);
        }
        ind.replay(self.base).map_err(GenomeError::InvalidSequence)?;
        let regrouped = group_dependencies(self.base, &ind.flat(), self.cfg.dependency_aware)?;
        if regrouped != *ind {
            let bad = ind.groups.iter().zip(&regrouped.groups).position(|(a, b)| a != b).unwrap_or(0);
            return Err(GenomeError::BadGrouping { group: bad });
        }
        Ok(())
    }
}
