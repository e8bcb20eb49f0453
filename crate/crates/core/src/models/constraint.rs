use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tree::{TreeEnsemble, TreeNode};

/// A real interval; a missing bound is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Option<f64>,
    pub lower_closed: bool,
    pub upper: Option<f64>,
    pub upper_closed: bool,
}

impl Interval {
    pub const ALL: Interval = Interval { lower: None, lower_closed: false, upper: None, upper_closed: false };

    pub fn contains(&self, v: f64) -> bool {
        let above = match self.lower {
            None => true,
            Some(l) if self.lower_closed => v >= l,
            Some(l) => v > l,
        };
        let below = match self.upper {
            None => true,
            Some(u) if self.upper_closed => v <= u,
            Some(u) => v < u,
        };
        above && below && !v.is_nan()
    }

    pub fn is_empty(&self) -> bool {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => l > u || (l == u && !(self.lower_closed && self.upper_closed)),
            _ => false,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lower, lower_closed) = match (self.lower, other.lower) {
            (None, _) => (other.lower, other.lower_closed),
            (_, None) => (self.lower, self.lower_closed),
            (Some(a), Some(b)) if a > b => (Some(a), self.lower_closed),
            (Some(a), Some(b)) if b > a => (Some(b), other.lower_closed),
            (Some(a), _) => (Some(a), self.lower_closed && other.lower_closed),
        };
        let (upper, upper_closed) = match (self.upper, other.upper) {
            (None, _) => (other.upper, other.upper_closed),
            (_, None) => (self.upper, self.upper_closed),
            (Some(a), Some(b)) if a < b => (Some(a), self.upper_closed),
            (Some(a), Some(b)) if b < a => (Some(b), other.upper_closed),
            (Some(a), _) => (Some(a), self.upper_closed && other.upper_closed),
        };
        Interval { lower, lower_closed, upper, upper_closed }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !self.intersect(other).is_empty()
    }
}

/// `x[feature] ∈ interval`, taken from the benign leaf `leaf` of tree `tree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub feature: usize,
    pub interval: Interval,
    pub tree: usize,
    pub leaf: usize,
}

impl Constraint {
    pub fn satisfied_by(&self, x: &[f64]) -> bool {
        x.get(self.feature).is_some_and(|&v| self.interval.contains(v))
    }
}

/// Per-feature intervals of every root-to-benign-leaf path of one tree, as
/// (leaf index, feature → interval).
fn benign_paths(nodes: &[TreeNode]) -> Vec<(usize, BTreeMap<usize, Interval>)> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, BTreeMap::new())];
    while let Some((i, bounds)) = stack.pop() {
        match nodes[i] {
            TreeNode::Leaf { label, .. } => {
                if label.is_benign() {
                    out.push((i, bounds));
                }
            }
            TreeNode::Split { feature, threshold, left, right } => {
                let cur = bounds.get(&feature).copied().unwrap_or(Interval::ALL);
                let le = Interval { lower: None, lower_closed: false, upper: Some(threshold), upper_closed: true };
                let gt = Interval { lower: Some(threshold), lower_closed: false, upper: None, upper_closed: false };
                let mut r = bounds.clone();
                r.insert(feature, cur.intersect(&gt));
                let mut l = bounds;
                l.insert(feature, cur.intersect(&le));
                stack.push((right, r));
                stack.push((left, l));
            }
        }
    }
    out.sort_by_key(|(leaf, _)| *leaf);
    out
}

/// One constraint per feature per benign path. With `eliminate_conflicts`, a
/// constraint is dropped when some other tree constrains the same feature on
/// every one of its benign paths and none of those intervals overlap it.
pub fn extract_benign_constraints(e: &TreeEnsemble, eliminate_conflicts: bool) -> Vec<Constraint> {
    let paths: Vec<_> = e.trees.iter().map(|t| benign_paths(&t.nodes)).collect();
    let mut out = Vec::new();
    for (t, tree_paths) in paths.iter().enumerate() {
        for (leaf, bounds) in tree_paths {
            for (&feature, &interval) in bounds {
                if interval.is_empty() {
                    continue;
                }
                let conflicted = eliminate_conflicts
                    && paths.iter().enumerate().any(|(o, other)| {
                        o != t
                            && !other.is_empty()
                            && other.iter().all(|(_, b)| b.get(&feature).is_some_and(|iv| !iv.overlaps(&interval)))
                    });
                if !conflicted {
                    out.push(Constraint { feature, interval, tree: t, leaf: *leaf });
                }
            }
        }
    }
    out
}

/// Number of constraints `x` satisfies.
pub fn sat_count(constraints: &[Constraint], x: &[f64]) -> usize {
    constraints.iter().filter(|c| c.satisfied_by(x)).count()
}
