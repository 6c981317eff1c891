//! Bottom-up composition of whole-tree state maps.
//!
//! Each node's composed maps depend only on its children's composed maps.
//! The rules per operator, over every state `x`:
//!
//! * Sequence: while child one's status at `x` is not Success the composite
//!   behaves as child one with its progress halved; once inside child one's
//!   success region it behaves as the rest of the chain with progress
//!   shifted into the upper half.
//! * Fallback: the same selection keyed on child one's failure region, with
//!   progress passed through unscaled.
//! * Parallel: every child's effective transition applies (children act on
//!   disjoint variables); status aggregates by threshold; progress is the
//!   minimum; resources the union.
//! * Synchronized parallel: only children whose progress equals the group
//!   minimum at `x` apply their transitions.
//! * Mutex parallel: children are granted in priority order while their
//!   resource sets stay disjoint from earlier grants; only granted children
//!   apply their transitions, and the composite's resources are the union of
//!   the granted sets. Priorities here are the children's bases — the
//!   composed maps describe one arbitration round from fresh records; the
//!   equivalence iteration layers wait-aging on top.
//!
//! This module deliberately re-implements the selection and aggregation
//! loops instead of calling the engine-side helpers, so the two routes stay
//! independently derived down to the formulas.

use crate::progress::Progress;
use crate::resource::ResourceSet;
use crate::status::Status;
use crate::tree::{NodeKind, NodeSpec};
use std::collections::BTreeSet;

use super::world::{FiniteWorld, OracleError, StateId};

/// Composed per-state maps of one subtree.
#[derive(Debug, Clone)]
pub struct ComposedSemantics {
    /// Effective transition: what one tick of this subtree does to the state.
    pub transition: Vec<StateId>,
    pub status: Vec<Status>,
    pub progress: Vec<Progress>,
    pub resources: Vec<ResourceSet>,
}

/// Composes the maps of a whole tree over a finite world.
pub fn compose(tree: &NodeSpec, world: &FiniteWorld) -> Result<ComposedSemantics, OracleError> {
    let n = world.state_count();
    match tree.kind {
        NodeKind::Action | NodeKind::Condition => {
            let name = tree
                .leaf_ref
                .as_deref()
                .ok_or_else(|| OracleError::Structural {
                    node: tree.id.to_string(),
                    detail: "leaf without behavior binding".to_owned(),
                })?;
            let t = world.leaf(name)?;
            let transition = (0..n).map(|s| t.effective_transition(s)).collect();
            Ok(ComposedSemantics {
                transition,
                status: t.status.clone(),
                progress: t.progress.clone(),
                resources: t.resources.clone(),
            })
        }
        NodeKind::Sequence | NodeKind::Fallback => {
            if tree.children.is_empty() {
                return Err(empty_operator(tree));
            }
            let children = tree
                .children
                .iter()
                .map(|c| compose(c, world))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(compose_chain(&children, tree.kind == NodeKind::Sequence, n))
        }
        NodeKind::Parallel | NodeKind::ParallelSync => {
            check_orthogonality(tree, world)?;
            let children = tree
                .children
                .iter()
                .map(|c| compose(c, world))
                .collect::<Result<Vec<_>, _>>()?;
            if children.is_empty() {
                return Err(empty_operator(tree));
            }
            let threshold = tree.success_threshold.unwrap_or(children.len());
            let sync = tree.kind == NodeKind::ParallelSync;
            let mut maps = empty_maps(n);
            for s in 0..n {
                let eligible: Vec<bool> = if sync {
                    let min = children
                        .iter()
                        .map(|c| c.progress[s])
                        .min()
                        .expect("nonempty children");
                    children.iter().map(|c| c.progress[s] <= min).collect()
                } else {
                    vec![true; children.len()]
                };
                let mut next = s;
                for (i, c) in children.iter().enumerate() {
                    if eligible[i] {
                        next = c.transition[next];
                    }
                }
                maps.transition[s] = next;
                maps.status[s] = aggregate(children.iter().map(|c| c.status[s]), threshold);
                maps.progress[s] = children
                    .iter()
                    .map(|c| c.progress[s])
                    .min()
                    .expect("nonempty children");
                let mut union = ResourceSet::new();
                for c in &children {
                    union.union_with(&c.resources[s]);
                }
                maps.resources[s] = union;
            }
            Ok(maps)
        }
        NodeKind::ParallelMutex => {
            let children = tree
                .children
                .iter()
                .map(|c| compose(c, world))
                .collect::<Result<Vec<_>, _>>()?;
            if children.is_empty() {
                return Err(empty_operator(tree));
            }
            let bases: Vec<u64> = tree
                .children
                .iter()
                .map(|c| c.base_priority.unwrap_or(0) as u64)
                .collect();
            let mut maps = empty_maps(n);
            for s in 0..n {
                let requests: Vec<&ResourceSet> =
                    children.iter().map(|c| &c.resources[s]).collect();
                let granted = grant_round(&requests, &bases);
                let mut next = s;
                let mut union = ResourceSet::new();
                for i in priority_order(&bases) {
                    if granted[i] {
                        next = children[i].transition[next];
                        union.union_with(requests[i]);
                    }
                }
                maps.transition[s] = next;
                maps.status[s] = aggregate(children.iter().map(|c| c.status[s]), children.len());
                maps.progress[s] = children
                    .iter()
                    .map(|c| c.progress[s])
                    .min()
                    .expect("nonempty children");
                maps.resources[s] = union;
            }
            Ok(maps)
        }
    }
}

/// One grant round at fixed effective priorities: walk children from the
/// highest priority (ties to the lower index) and grant while disjoint.
pub(super) fn grant_round(requests: &[&ResourceSet], effective: &[u64]) -> Vec<bool> {
    let mut granted = vec![false; requests.len()];
    let mut reserved = ResourceSet::new();
    for i in priority_order(effective) {
        if requests[i].is_disjoint(&reserved) {
            granted[i] = true;
            reserved.union_with(requests[i]);
        }
    }
    granted
}

pub(super) fn priority_order(effective: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..effective.len()).collect();
    order.sort_by(|&a, &b| effective[b].cmp(&effective[a]).then(a.cmp(&b)));
    order
}

fn aggregate(statuses: impl Iterator<Item = Status>, threshold: usize) -> Status {
    let mut successes = 0usize;
    let mut failures = 0usize;
    let mut total = 0usize;
    for s in statuses {
        total += 1;
        match s {
            Status::Success => successes += 1,
            Status::Failure => failures += 1,
            Status::Running => {}
        }
    }
    if successes >= threshold {
        Status::Success
    } else if failures > total - threshold {
        Status::Failure
    } else {
        Status::Running
    }
}

fn compose_chain(children: &[ComposedSemantics], sequence: bool, n: usize) -> ComposedSemantics {
    let head = &children[0];
    if children.len() == 1 {
        return head.clone();
    }
    let rest = compose_chain(&children[1..], sequence, n);
    let mut maps = empty_maps(n);
    for s in 0..n {
        let in_region = if sequence {
            head.status[s] == Status::Success
        } else {
            head.status[s] == Status::Failure
        };
        if in_region {
            maps.transition[s] = rest.transition[s];
            maps.status[s] = rest.status[s];
            maps.resources[s] = rest.resources[s].clone();
            maps.progress[s] = if sequence {
                Progress::new(0.5 + rest.progress[s].value() / 2.0).expect("in range")
            } else {
                rest.progress[s]
            };
        } else {
            maps.transition[s] = head.transition[s];
            maps.status[s] = head.status[s];
            maps.resources[s] = head.resources[s].clone();
            maps.progress[s] = if sequence {
                Progress::new(head.progress[s].value() / 2.0).expect("in range")
            } else {
                head.progress[s]
            };
        }
    }
    maps
}

fn empty_maps(n: usize) -> ComposedSemantics {
    ComposedSemantics {
        transition: vec![0; n],
        status: vec![Status::Running; n],
        progress: vec![Progress::ZERO; n],
        resources: vec![ResourceSet::new(); n],
    }
}

fn empty_operator(tree: &NodeSpec) -> OracleError {
    OracleError::Structural {
        node: tree.id.to_string(),
        detail: "empty operator".to_owned(),
    }
}

/// Parallel composition requires children acting on disjoint variables.
fn check_orthogonality(tree: &NodeSpec, world: &FiniteWorld) -> Result<(), OracleError> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for child in &tree.children {
        let fp = world.subtree_footprint(child)?;
        if !seen.is_disjoint(&fp) {
            let overlap: Vec<String> = seen
                .intersection(&fp)
                .map(|&i| world.vars()[i].name.clone())
                .collect();
            return Err(OracleError::Structural {
                node: tree.id.to_string(),
                detail: format!(
                    "parallel children share world variables: {}",
                    overlap.join(", ")
                ),
            });
        }
        seen.extend(fp);
    }
    Ok(())
}

/// Disjoint partition of the state set by composed status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    pub success: BTreeSet<StateId>,
    pub failure: BTreeSet<StateId>,
    pub running: BTreeSet<StateId>,
}

impl RegionPartition {
    pub fn len(&self) -> usize {
        self.success.len() + self.failure.len() + self.running.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Partitions states by a composed status map.
pub fn classify_regions(status: &[Status]) -> RegionPartition {
    let mut out = RegionPartition {
        success: BTreeSet::new(),
        failure: BTreeSet::new(),
        running: BTreeSet::new(),
    };
    for (s, st) in status.iter().enumerate() {
        match st {
            Status::Success => out.success.insert(s),
            Status::Failure => out.failure.insert(s),
            Status::Running => out.running.insert(s),
        };
    }
    out
}
