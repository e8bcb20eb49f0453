use std::fmt::Write;

use crate::graph::NodeId;

use super::PerturbationOp;

/// First line of every script; the op count follows a tab.
pub const SCRIPT_HEADER: &str = "# fcg perturbation script v1";

/// Number of directive lines `op` expands to.
pub fn directive_count(op: &PerturbationOp) -> usize {
    match op {
        PerturbationOp::AddNode { .. } | PerturbationOp::AddEdge { .. } | PerturbationOp::RemoveNode { .. } => 2,
        PerturbationOp::Rewire { .. } => 3,
        PerturbationOp::AddSparseNodes { new_ids, .. } => 2 * new_ids.len(),
        PerturbationOp::AddDenseNodes { new_ids, .. } => {
            let k = new_ids.len();
            2 * k + k.saturating_sub(1) + k * k.saturating_sub(1) / 2
        }
        PerturbationOp::AddLongEdges { chains, .. } => chains.iter().map(|c| 2 * c.len() + 1).sum(),
    }
}

struct Emitter {
    out: String,
    op: usize,
}

impl Emitter {
    fn line(&mut self, kind: &str, params: &[(&str, NodeId)]) {
        write!(self.out, "{kind}\top={}", self.op).unwrap();
        for (k, v) in params {
            write!(self.out, " {k}={v}").unwrap();
        }
        self.out.push('\n');
    }

    fn create_and_call(&mut self, caller: NodeId, new: NodeId) {
        self.line("CREATE_FUNCTION", &[("function", new)]);
        self.line("INSERT_CALL", &[("caller", caller), ("callee", new)]);
    }
}

/// One directive per line, `KIND<TAB>op=<index> key=value ...`, in op order.
pub fn translate_to_script(ops: &[PerturbationOp]) -> String {
    let mut e = Emitter { out: format!("{SCRIPT_HEADER}\tops={}\n", ops.len()), op: 0 };
    for (index, op) in ops.iter().enumerate() {
        e.op = index;
        match op {
            PerturbationOp::AddNode { caller, new_id } => e.create_and_call(*caller, *new_id),
            PerturbationOp::AddEdge { caller, callee } => {
                e.line("ADD_CONDITION_PARAM", &[("function", *callee)]);
                e.line("INSERT_GUARDED_CALL", &[("caller", *caller), ("callee", *callee)]);
            }
            PerturbationOp::Rewire { caller, callee, mid } => {
                e.line("REDIRECT_CALL", &[("caller", *caller), ("from", *callee), ("to", *mid)]);
                e.line("ADD_CONDITION_PARAM", &[("function", *mid)]);
                e.line("INSERT_GUARDED_CALL", &[("caller", *mid), ("callee", *callee)]);
            }
            PerturbationOp::RemoveNode { target } => {
                e.line("INLINE_FUNCTION", &[("function", *target)]);
                e.line("DELETE_FUNCTION", &[("function", *target)]);
            }
            PerturbationOp::AddSparseNodes { anchor, new_ids } => {
                for &v in new_ids {
                    e.create_and_call(*anchor, v);
                }
            }
            PerturbationOp::AddDenseNodes { anchor, new_ids } => {
                for &v in new_ids {
                    e.create_and_call(*anchor, v);
                }
                for &v in new_ids.iter().skip(1) {
                    e.line("ADD_CONDITION_PARAM", &[("function", v)]);
                }
                for (i, &u) in new_ids.iter().enumerate() {
                    for &v in &new_ids[i + 1..] {
                        e.line("INSERT_GUARDED_CALL", &[("caller", u), ("callee", v)]);
                    }
                }
            }
            PerturbationOp::AddLongEdges { source, target, chains } => {
                for chain in chains {
                    let mut prev = *source;
                    for &v in chain {
                        e.create_and_call(prev, v);
                        prev = v;
                    }
                    e.line("INSERT_GUARDED_CALL", &[("caller", prev), ("callee", *target)]);
                }
            }
        }
    }
    e.out
}
