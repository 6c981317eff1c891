//! Deterministic tick engine.
//!
//! One engine step is: apply scripted world events for the tick, take one
//! consistent snapshot of every node's pure status/progress/resources
//! (bottom-up, including resource arbitration decisions at mutex nodes),
//! route a single tick from the root using that snapshot, then settle the
//! bookkeeping — pause events for gate-withheld activity, halt events for
//! running activity the routing abandoned, and the progress-stability audit.
//!
//! All within-tick ordering is fixed: children of Sequence/Fallback run left
//! to right, barrier-gated children in child order, mutex-gated children in
//! arbitration order. Identical inputs therefore produce byte-identical
//! traces.

use crate::aging::{self, GrantOutcome, PolicyConfig};
use crate::leaf::{BehaviorRegistry, LeafBehavior, World};
use crate::ops::{self, MutexArbitration};
use crate::priority::Priority;
use crate::progress::Progress;
use crate::resource::ResourceSet;
use crate::status::Status;
use crate::trace::{EventKind, RunResult, Trace, TraceEvent};
use crate::tree::{validate_tree, NodeId, NodeKind, NodeSpec, ValidationReport};
use thiserror::Error;

/// Engine tunables. `delta_t` is pure bookkeeping (the abstract time advance
/// per tick); `halt_latency_budget` is the number of ticks a leaf may take
/// to wind down after losing its ticks, and must be zero here — halt and
/// pause routines run synchronously inside the step that triggers them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub delta_t: f64,
    pub max_ticks: u64,
    pub halt_latency_budget: u64,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig {
            delta_t: 1.0,
            max_ticks: 100,
            halt_latency_budget: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("tree failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("unsupported engine config: {0}")]
    Config(String),
    #[error("contract violation at tick {tick}, node {node}: {detail}")]
    Contract {
        node: NodeId,
        tick: u64,
        detail: String,
    },
}

struct RtNode {
    id: NodeId,
    kind: NodeKind,
    children: Vec<usize>,
    threshold: Option<usize>,
    base_priority: u32,
    /// Last inclusive descendant index; the subtree is `idx..=subtree_end`.
    subtree_end: usize,
}

#[derive(Clone)]
struct NodeSnap {
    status: Status,
    progress: Progress,
    resources: ResourceSet,
}

struct Snapshot {
    nodes: Vec<NodeSnap>,
    plans: Vec<Option<MutexArbitration>>,
}

struct StepState {
    events: Vec<TraceEvent>,
    ticked: Vec<bool>,
    paused: Vec<bool>,
}

/// One validated tree bound to leaf behaviors, plus the bookkeeping a run
/// accumulates. A runtime owns exactly one run; start a fresh runtime for a
/// fresh run.
pub struct Runtime<'r, W> {
    nodes: Vec<RtNode>,
    behaviors: Vec<Option<&'r dyn LeafBehavior<W>>>,
    policy: PolicyConfig,
    cfg: EngineConfig,
    last_status: Vec<Option<Status>>,
    /// Whether the node held a granted, nonempty resource request last tick.
    held_grant: Vec<bool>,
    priorities: Vec<Priority>,
    leaf_progress: Vec<Option<Progress>>,
    tick: u64,
}

impl<'r, W: World> Runtime<'r, W> {
    pub fn new(
        tree: &NodeSpec,
        registry: &'r BehaviorRegistry<W>,
        policy: PolicyConfig,
        cfg: EngineConfig,
    ) -> Result<Runtime<'r, W>, EngineError> {
        if cfg.max_ticks == 0 {
            return Err(EngineError::Config("max_ticks must be at least 1".into()));
        }
        if cfg.halt_latency_budget != 0 {
            return Err(EngineError::Config(
                "halt latency is modeled as zero; halt routines run synchronously".into(),
            ));
        }
        let report = validate_tree(tree, &registry.names());
        if !report.is_ok() {
            return Err(EngineError::Invalid(report));
        }

        let mut nodes = Vec::with_capacity(tree.node_count());
        let mut behaviors = Vec::with_capacity(tree.node_count());
        flatten(tree, registry, &mut nodes, &mut behaviors);
        let n = nodes.len();
        let priorities = nodes
            .iter()
            .map(|node| Priority::new(node.base_priority))
            .collect();
        Ok(Runtime {
            nodes,
            behaviors,
            policy,
            cfg,
            last_status: vec![None; n],
            held_grant: vec![false; n],
            priorities,
            leaf_progress: vec![None; n],
            tick: 0,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Abstract time at the given tick index.
    pub fn time_of(&self, tick: u64) -> f64 {
        tick as f64 * self.cfg.delta_t
    }

    /// Runs one engine step: exactly one root-to-leaf tick traversal.
    /// Returns the root status and every event the step emitted.
    pub fn step(&mut self, world: &mut W) -> Result<(Status, Vec<TraceEvent>), EngineError> {
        world.begin_tick(self.tick);
        let snap = self.build_snapshot(world);
        let n = self.nodes.len();
        let mut st = StepState {
            events: Vec::new(),
            ticked: vec![false; n],
            paused: vec![false; n],
        };
        let root_status = self.tick_node(0, world, &snap, &mut st)?;

        // Running activity the routing abandoned is halted; gate-withheld
        // activity was already paused inline.
        for idx in 0..n {
            if !st.ticked[idx] && !st.paused[idx] && self.last_status[idx] == Some(Status::Running)
            {
                st.events
                    .push(self.event(idx, EventKind::Halted, None, &snap));
                if let Some(behavior) = self.behaviors[idx] {
                    behavior.halt(world);
                }
                self.last_status[idx] = None;
            }
        }

        self.audit_progress(world, &st, &snap)?;
        self.tick += 1;
        Ok((root_status, st.events))
    }

    /// Steps until the root settles or the tick budget runs out, collecting
    /// the full trace.
    pub fn run(&mut self, world: &mut W) -> Result<Trace, EngineError> {
        let mut events = Vec::new();
        for k in 0..self.cfg.max_ticks {
            let (status, step_events) = self.step(world)?;
            events.extend(step_events);
            match status {
                Status::Success => {
                    return Ok(Trace {
                        events,
                        result: RunResult::Success,
                        ticks: k + 1,
                    })
                }
                Status::Failure => {
                    return Ok(Trace {
                        events,
                        result: RunResult::Failure,
                        ticks: k + 1,
                    })
                }
                Status::Running => {}
            }
        }
        Ok(Trace {
            events,
            result: RunResult::Timeout,
            ticks: self.cfg.max_ticks,
        })
    }

    fn event(
        &self,
        idx: usize,
        kind: EventKind,
        status: Option<Status>,
        snap: &Snapshot,
    ) -> TraceEvent {
        TraceEvent {
            tick: self.tick,
            node: self.nodes[idx].id.clone(),
            event: kind,
            status,
            progress: snap.nodes[idx].progress,
            resources: snap.nodes[idx].resources.clone(),
        }
    }

    /// Pure bottom-up evaluation of every node's status, progress, and
    /// resource demand at the current world state, including the resource
    /// arbitration decision at each mutex node. This is the single snapshot
    /// all gating in the subsequent routing works from.
    fn build_snapshot(&self, world: &W) -> Snapshot {
        let n = self.nodes.len();
        let mut snapshot = Snapshot {
            nodes: vec![
                NodeSnap {
                    status: Status::Running,
                    progress: Progress::ZERO,
                    resources: ResourceSet::new(),
                };
                n
            ],
            plans: Vec::new(),
        };
        snapshot.plans.resize_with(n, || None);
        self.snapshot_node(0, world, &mut snapshot);
        snapshot
    }

    fn snapshot_node(&self, idx: usize, world: &W, out: &mut Snapshot) {
        let children = self.nodes[idx].children.clone();
        for &c in &children {
            self.snapshot_node(c, world, out);
        }
        let snap = match self.nodes[idx].kind {
            NodeKind::Action | NodeKind::Condition => {
                let b = self.behaviors[idx].expect("leaf has a behavior after validation");
                NodeSnap {
                    status: b.status(world),
                    progress: b.progress(world),
                    resources: b.resources(world),
                }
            }
            NodeKind::Sequence => compose_chain(&children, &out.nodes, ChainKind::Sequence),
            NodeKind::Fallback => compose_chain(&children, &out.nodes, ChainKind::Fallback),
            NodeKind::Parallel | NodeKind::ParallelSync => {
                let statuses: Vec<Status> = children.iter().map(|&c| out.nodes[c].status).collect();
                let progresses: Vec<Progress> =
                    children.iter().map(|&c| out.nodes[c].progress).collect();
                let resources: Vec<ResourceSet> = children
                    .iter()
                    .map(|&c| out.nodes[c].resources.clone())
                    .collect();
                let (progress, resources) = ops::compose_parallel(&progresses, &resources);
                NodeSnap {
                    status: ops::aggregate_parallel(&statuses, self.threshold(idx)),
                    progress,
                    resources,
                }
            }
            NodeKind::ParallelMutex => {
                let requests: Vec<ResourceSet> = children
                    .iter()
                    .map(|&c| out.nodes[c].resources.clone())
                    .collect();
                let effective: Vec<u64> = children
                    .iter()
                    .enumerate()
                    .map(|(pos, &c)| {
                        let holding = self.held_grant[c]
                            && self.last_status[c] == Some(Status::Running)
                            && !requests[pos].is_empty();
                        aging::effective_priority(
                            self.priorities[c].base,
                            self.priorities[c].wait_ticks,
                            holding,
                            &self.policy,
                        )
                    })
                    .collect();
                let plan = ops::arbitrate_mutex(&requests, &effective);
                let statuses: Vec<Status> = children.iter().map(|&c| out.nodes[c].status).collect();
                let progresses: Vec<Progress> =
                    children.iter().map(|&c| out.nodes[c].progress).collect();
                let progress = progresses.iter().copied().min().unwrap_or(Progress::ZERO);
                let resources = plan.reserved.clone();
                out.plans[idx] = Some(plan);
                NodeSnap {
                    status: ops::aggregate_parallel(&statuses, children.len()),
                    progress,
                    resources,
                }
            }
        };
        out.nodes[idx] = snap;
    }

    fn threshold(&self, idx: usize) -> usize {
        self.nodes[idx]
            .threshold
            .unwrap_or(self.nodes[idx].children.len())
    }

    fn tick_node(
        &mut self,
        idx: usize,
        world: &mut W,
        snap: &Snapshot,
        st: &mut StepState,
    ) -> Result<Status, EngineError> {
        st.ticked[idx] = true;
        let event_index = st.events.len();
        st.events
            .push(self.event(idx, EventKind::Ticked, None, snap));

        let children = self.nodes[idx].children.clone();
        let status = match self.nodes[idx].kind {
            NodeKind::Action | NodeKind::Condition => {
                let behavior = self.behaviors[idx].expect("leaf has a behavior");
                behavior.tick(world)
            }
            NodeKind::Sequence => ops::tick_sequence(children.len(), |i| {
                self.tick_node(children[i], world, snap, st)
            })?,
            NodeKind::Fallback => ops::tick_fallback(children.len(), |i| {
                self.tick_node(children[i], world, snap, st)
            })?,
            NodeKind::Parallel => {
                let mut statuses = Vec::with_capacity(children.len());
                for &c in &children {
                    statuses.push(self.tick_node(c, world, snap, st)?);
                }
                ops::aggregate_parallel(&statuses, self.threshold(idx))
            }
            NodeKind::ParallelSync => {
                let progresses: Vec<Progress> =
                    children.iter().map(|&c| snap.nodes[c].progress).collect();
                let eligible = ops::sync_eligibility(&progresses);
                let mut statuses = Vec::with_capacity(children.len());
                for (pos, &c) in children.iter().enumerate() {
                    if eligible[pos] {
                        statuses.push(self.tick_node(c, world, snap, st)?);
                    } else {
                        self.pause_subtree(c, world, snap, st);
                        statuses.push(self.last_status[c].unwrap_or(Status::Running));
                    }
                }
                ops::aggregate_parallel(&statuses, self.threshold(idx))
            }
            NodeKind::ParallelMutex => {
                let plan = snap.plans[idx]
                    .as_ref()
                    .expect("mutex plan was built with the snapshot")
                    .clone();
                let mut statuses = vec![Status::Running; children.len()];
                for &pos in &plan.order {
                    let c = children[pos];
                    if plan.granted[pos] {
                        statuses[pos] = self.tick_node(c, world, snap, st)?;
                    } else {
                        self.pause_subtree(c, world, snap, st);
                        statuses[pos] = self.last_status[c].unwrap_or(Status::Running);
                    }
                }
                for (pos, &c) in children.iter().enumerate() {
                    let requesting = !snap.nodes[c].resources.is_empty();
                    let outcome = if !requesting {
                        GrantOutcome::NotRequesting
                    } else if plan.granted[pos] {
                        GrantOutcome::Granted
                    } else {
                        GrantOutcome::Denied
                    };
                    self.priorities[c] = aging::update_after_tick(self.priorities[c], outcome);
                    self.held_grant[c] = requesting && plan.granted[pos];
                }
                ops::aggregate_parallel(&statuses, children.len())
            }
        };

        st.events[event_index].status = Some(status);
        self.last_status[idx] = Some(status);
        Ok(status)
    }

    /// Marks a gate-withheld child subtree: the child itself is paused if it
    /// has running activity (by last return or by current region), and every
    /// descendant that was running is paused too. Leaf pause routines run on
    /// every withheld tick.
    fn pause_subtree(&mut self, idx: usize, world: &mut W, snap: &Snapshot, st: &mut StepState) {
        let end = self.nodes[idx].subtree_end;
        for i in idx..=end {
            let was_running = self.last_status[i] == Some(Status::Running);
            let gate_root_running = i == idx && snap.nodes[i].status == Status::Running;
            st.paused[i] = true;
            if was_running || gate_root_running {
                st.events.push(self.event(i, EventKind::Paused, None, snap));
                if was_running {
                    if let Some(behavior) = self.behaviors[i] {
                        behavior.pause(world);
                    }
                }
            }
        }
    }

    /// Progress-stability audit: a leaf's progress may change across this
    /// step only if the leaf was ticked while in its running region at the
    /// start of the step.
    fn audit_progress(
        &mut self,
        world: &W,
        st: &StepState,
        snap: &Snapshot,
    ) -> Result<(), EngineError> {
        for idx in 0..self.nodes.len() {
            let Some(behavior) = self.behaviors[idx] else {
                continue;
            };
            let now = behavior.progress(world);
            if let Some(prev) = self.leaf_progress[idx] {
                let may_change = st.ticked[idx] && snap.nodes[idx].status == Status::Running;
                if now != prev && !may_change {
                    return Err(EngineError::Contract {
                        node: self.nodes[idx].id.clone(),
                        tick: self.tick,
                        detail: format!(
                            "progress changed from {} to {} without a tick while running",
                            prev.value(),
                            now.value()
                        ),
                    });
                }
            }
            self.leaf_progress[idx] = Some(now);
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum ChainKind {
    Sequence,
    Fallback,
}

/// Right-nested binary composition of a Sequence/Fallback child chain:
/// status and resources select along the region of the first undecided
/// child; progress halves into the first child's span until its region is
/// reached, then shifts into the rest (Sequence only).
fn compose_chain(children: &[usize], nodes: &[NodeSnap], kind: ChainKind) -> NodeSnap {
    let (&head, rest) = children.split_first().expect("operators have children");
    let head_snap = &nodes[head];
    if rest.is_empty() {
        return head_snap.clone();
    }
    let rest_snap = compose_chain(rest, nodes, kind);
    match kind {
        ChainKind::Sequence => {
            let in_region = head_snap.status == Status::Success;
            let progress =
                ops::compose_progress_sequence(head_snap.progress, rest_snap.progress, in_region);
            if in_region {
                NodeSnap {
                    status: rest_snap.status,
                    progress,
                    resources: rest_snap.resources,
                }
            } else {
                NodeSnap {
                    status: head_snap.status,
                    progress,
                    resources: head_snap.resources.clone(),
                }
            }
        }
        ChainKind::Fallback => {
            let in_region = head_snap.status == Status::Failure;
            let progress =
                ops::compose_progress_fallback(head_snap.progress, rest_snap.progress, in_region);
            if in_region {
                NodeSnap {
                    status: rest_snap.status,
                    progress,
                    resources: rest_snap.resources,
                }
            } else {
                NodeSnap {
                    status: head_snap.status,
                    progress,
                    resources: head_snap.resources.clone(),
                }
            }
        }
    }
}

fn flatten<'r, W>(
    spec: &NodeSpec,
    registry: &'r BehaviorRegistry<W>,
    nodes: &mut Vec<RtNode>,
    behaviors: &mut Vec<Option<&'r dyn LeafBehavior<W>>>,
) -> usize {
    let idx = nodes.len();
    nodes.push(RtNode {
        id: spec.id.clone(),
        kind: spec.kind,
        children: Vec::new(),
        threshold: spec.success_threshold,
        base_priority: spec.base_priority.unwrap_or(0),
        subtree_end: idx,
    });
    behaviors.push(spec.leaf_ref.as_deref().and_then(|name| registry.get(name)));
    let mut child_indices = Vec::with_capacity(spec.children.len());
    for child in &spec.children {
        child_indices.push(flatten(child, registry, nodes, behaviors));
    }
    nodes[idx].children = child_indices;
    nodes[idx].subtree_end = nodes.len() - 1;
    idx
}
