//! Trace verifiers for the barrier, mutual-exclusion, and liveness
//! properties, plus episode/handover analysis for run summaries.
//!
//! The serialized trace format carries node ids but not tree structure, so
//! every verifier takes the tree definition alongside the trace to know
//! which nodes form synchronized or mutex groups.

use crate::trace::{EventKind, ParsedEvent, ParsedTrace, RunResult};
use crate::tree::{NodeKind, NodeSpec};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub property: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
}

impl VerdictReport {
    fn from_violations(violations: Vec<Violation>) -> VerdictReport {
        VerdictReport {
            pass: violations.is_empty(),
            violations,
        }
    }

    pub fn merge(mut self, other: VerdictReport) -> VerdictReport {
        self.violations.extend(other.violations);
        VerdictReport::from_violations(self.violations)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }
}

/// (group node id, child ids) for every node of the given kind.
fn gate_groups(tree: &NodeSpec, kind: NodeKind) -> Vec<(String, Vec<String>)> {
    tree.preorder()
        .into_iter()
        .filter(|n| n.kind == kind)
        .map(|n| {
            (
                n.id.to_string(),
                n.children.iter().map(|c| c.id.to_string()).collect(),
            )
        })
        .collect()
}

fn group_events<'t>(
    trace: &'t ParsedTrace,
    children: &[String],
) -> BTreeMap<u64, Vec<&'t ParsedEvent>> {
    let mut by_tick: BTreeMap<u64, Vec<&ParsedEvent>> = BTreeMap::new();
    for ev in &trace.events {
        if children.iter().any(|c| c == &ev.node) {
            by_tick.entry(ev.tick).or_default().push(ev);
        }
    }
    by_tick
}

/// Barrier property: at every tick, every ticked child of a synchronized
/// group sits exactly at the group's snapshot minimum progress; children
/// strictly above it may only pause or stay silent.
pub fn verify_barrier(trace: &ParsedTrace, tree: &NodeSpec) -> VerdictReport {
    let mut violations = Vec::new();
    for (group, children) in gate_groups(tree, NodeKind::ParallelSync) {
        for (tick, events) in group_events(trace, &children) {
            if !events.iter().any(|e| e.event == EventKind::Ticked) {
                continue;
            }
            let min = events
                .iter()
                .map(|e| e.progress)
                .fold(f64::INFINITY, f64::min);
            for ev in events {
                if ev.event == EventKind::Ticked && ev.progress != min {
                    violations.push(Violation {
                        property: "barrier".to_owned(),
                        tick: Some(tick),
                        node: Some(ev.node.clone()),
                        detail: format!(
                            "ticked at progress {} while the {group} group minimum was {min}",
                            ev.progress
                        ),
                    });
                }
            }
        }
    }
    VerdictReport::from_violations(violations)
}

/// Mutual exclusion: at every tick, the resource sets of the ticked children
/// of a mutex group are pairwise disjoint.
pub fn verify_mutex(trace: &ParsedTrace, tree: &NodeSpec) -> VerdictReport {
    let mut violations = Vec::new();
    for (group, children) in gate_groups(tree, NodeKind::ParallelMutex) {
        for (tick, events) in group_events(trace, &children) {
            let ticked: Vec<&&ParsedEvent> = events
                .iter()
                .filter(|e| e.event == EventKind::Ticked)
                .collect();
            for (i, a) in ticked.iter().enumerate() {
                for b in &ticked[i + 1..] {
                    let shared: Vec<&String> = a
                        .resources
                        .iter()
                        .filter(|r| b.resources.contains(r))
                        .collect();
                    if !shared.is_empty() {
                        violations.push(Violation {
                            property: "mutex".to_owned(),
                            tick: Some(tick),
                            node: Some(a.node.clone()),
                            detail: format!(
                                "shares {:?} with ticked sibling {} in group {group}",
                                shared, b.node
                            ),
                        });
                    }
                }
            }
        }
    }
    VerdictReport::from_violations(violations)
}

/// Liveness: the run terminated (or kept making progress inside every
/// window of `starvation_bound` ticks), and no mutex child stayed paused on
/// resources for more than `starvation_bound` consecutive ticks.
pub fn verify_liveness(
    trace: &ParsedTrace,
    tree: &NodeSpec,
    starvation_bound: u64,
) -> VerdictReport {
    let mut violations = Vec::new();

    if trace.result == RunResult::Timeout {
        // Progress-increase ticks across all nodes.
        let mut last: BTreeMap<&str, f64> = BTreeMap::new();
        let mut increased: Vec<bool> = vec![false; trace.ticks as usize];
        for ev in &trace.events {
            let prev = last.insert(&ev.node, ev.progress);
            if let Some(prev) = prev {
                if ev.progress > prev {
                    if let Some(slot) = increased.get_mut(ev.tick as usize) {
                        *slot = true;
                    }
                }
            }
        }
        let bound = (starvation_bound.max(1) as usize).min(increased.len().max(1));
        let mut start = 0usize;
        while start + bound <= increased.len() {
            if !increased[start..start + bound].iter().any(|&b| b) {
                violations.push(Violation {
                    property: "deadlock".to_owned(),
                    tick: Some(start as u64),
                    node: None,
                    detail: format!(
                        "timed out with no progress increase in the {bound}-tick window starting here"
                    ),
                });
                break;
            }
            start += 1;
        }
    }

    for (group, children) in gate_groups(tree, NodeKind::ParallelMutex) {
        for child in &children {
            let mut paused_ticks: Vec<u64> = trace
                .events
                .iter()
                .filter(|e| &e.node == child && e.event == EventKind::Paused)
                .map(|e| e.tick)
                .collect();
            paused_ticks.dedup();
            let mut run_len = 0u64;
            let mut prev: Option<u64> = None;
            for &t in &paused_ticks {
                run_len = match prev {
                    Some(p) if t == p + 1 => run_len + 1,
                    _ => 1,
                };
                prev = Some(t);
                if run_len > starvation_bound {
                    violations.push(Violation {
                        property: "starvation".to_owned(),
                        tick: Some(t),
                        node: Some(child.clone()),
                        detail: format!(
                            "paused on resources for more than {starvation_bound} consecutive ticks in group {group}"
                        ),
                    });
                    break;
                }
            }
        }
    }

    VerdictReport::from_violations(violations)
}

/// All three verifiers combined.
pub fn verify_all(trace: &ParsedTrace, tree: &NodeSpec, starvation_bound: u64) -> VerdictReport {
    verify_barrier(trace, tree)
        .merge(verify_mutex(trace, tree))
        .merge(verify_liveness(trace, tree, starvation_bound))
}

/// A maximal run of ticks during which some child of a synchronized group
/// was paused at the barrier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierEpisode {
    pub sync_node: String,
    pub start_tick: u64,
    pub end_tick: u64,
    /// The group minimum progress when the episode began.
    pub frozen_progress: f64,
}

pub fn barrier_episodes(trace: &ParsedTrace, tree: &NodeSpec) -> Vec<BarrierEpisode> {
    let mut episodes = Vec::new();
    for (group, children) in gate_groups(tree, NodeKind::ParallelSync) {
        let by_tick = group_events(trace, &children);
        let mut current: Option<BarrierEpisode> = None;
        for tick in 0..trace.ticks {
            let events = by_tick.get(&tick);
            let paused = events
                .map(|evs| evs.iter().any(|e| e.event == EventKind::Paused))
                .unwrap_or(false);
            if paused {
                let min = events
                    .unwrap()
                    .iter()
                    .map(|e| e.progress)
                    .fold(f64::INFINITY, f64::min);
                match &mut current {
                    Some(ep) => ep.end_tick = tick,
                    None => {
                        current = Some(BarrierEpisode {
                            sync_node: group.clone(),
                            start_tick: tick,
                            end_tick: tick,
                            frozen_progress: min,
                        })
                    }
                }
            } else if let Some(ep) = current.take() {
                episodes.push(ep);
            }
        }
        episodes.extend(current.take());
    }
    episodes
}

/// A resource changing hands under arbitration: the new holder is ticked
/// with the resource while the previous holder is still asking for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Handover {
    pub mutex_node: String,
    pub resource: String,
    pub tick: u64,
    pub from: String,
    pub to: String,
}

pub fn resource_handovers(trace: &ParsedTrace, tree: &NodeSpec) -> Vec<Handover> {
    let mut handovers = Vec::new();
    for (group, children) in gate_groups(tree, NodeKind::ParallelMutex) {
        let by_tick = group_events(trace, &children);
        // resource token -> holder at the previous tick
        let mut holders: BTreeMap<String, String> = BTreeMap::new();
        for tick in 0..trace.ticks {
            let events = by_tick.get(&tick);
            let mut now: BTreeMap<String, String> = BTreeMap::new();
            if let Some(events) = events {
                for ev in events {
                    if ev.event == EventKind::Ticked {
                        for r in &ev.resources {
                            now.insert(r.clone(), ev.node.clone());
                        }
                    }
                }
                for (resource, to) in &now {
                    if let Some(from) = holders.get(resource) {
                        let displaced = from != to
                            && events
                                .iter()
                                .any(|e| &e.node == from && e.event == EventKind::Paused);
                        if displaced {
                            handovers.push(Handover {
                                mutex_node: group.clone(),
                                resource: resource.clone(),
                                tick,
                                from: from.clone(),
                                to: to.clone(),
                            });
                        }
                    }
                }
            }
            for (resource, holder) in now {
                holders.insert(resource, holder);
            }
        }
    }
    handovers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::status::Status;
    use crate::trace::ParsedEvent;

    fn sync_tree() -> NodeSpec {
        NodeSpec::operator(
            "0",
            NodeKind::ParallelSync,
            vec![NodeSpec::action("0.0", "A"), NodeSpec::action("0.1", "B")],
        )
    }

    fn mutex_tree() -> NodeSpec {
        NodeSpec::operator(
            "0",
            NodeKind::ParallelMutex,
            vec![NodeSpec::action("0.0", "A"), NodeSpec::action("0.1", "B")],
        )
    }

    fn ev(tick: u64, node: &str, kind: EventKind, progress: f64, res: &[&str]) -> ParsedEvent {
        ParsedEvent {
            tick,
            node: node.to_owned(),
            event: kind,
            status: match kind {
                EventKind::Ticked => Some(Status::Running),
                _ => None,
            },
            progress,
            resources: res.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn trace(events: Vec<ParsedEvent>, result: RunResult, ticks: u64) -> ParsedTrace {
        ParsedTrace {
            events,
            result,
            ticks,
        }
    }

    #[test]
    fn barrier_passes_on_consistent_gating() {
        let t = trace(
            vec![
                ev(0, "0.0", EventKind::Ticked, 0.5, &[]),
                ev(0, "0.1", EventKind::Ticked, 0.5, &[]),
                ev(1, "0.0", EventKind::Paused, 0.7, &[]),
                ev(1, "0.1", EventKind::Ticked, 0.5, &[]),
            ],
            RunResult::Success,
            2,
        );
        assert!(verify_barrier(&t, &sync_tree()).pass);
    }

    #[test]
    fn barrier_flags_child_ticked_above_minimum() {
        let t = trace(
            vec![
                ev(4, "0.0", EventKind::Ticked, 0.7, &[]),
                ev(4, "0.1", EventKind::Ticked, 0.5, &[]),
            ],
            RunResult::Success,
            5,
        );
        let verdict = verify_barrier(&t, &sync_tree());
        assert!(!verdict.pass);
        assert_eq!(verdict.violations[0].tick, Some(4));
        assert_eq!(verdict.violations[0].node.as_deref(), Some("0.0"));
    }

    #[test]
    fn mutex_flags_two_holders_of_one_resource() {
        let t = trace(
            vec![
                ev(2, "0.0", EventKind::Ticked, 0.0, &["speaker"]),
                ev(2, "0.1", EventKind::Ticked, 0.0, &["speaker"]),
            ],
            RunResult::Success,
            3,
        );
        let verdict = verify_mutex(&t, &mutex_tree());
        assert!(!verdict.pass);
        assert_eq!(verdict.violations[0].tick, Some(2));
    }

    #[test]
    fn mutex_passes_on_disjoint_resources() {
        let t = trace(
            vec![
                ev(0, "0.0", EventKind::Ticked, 0.0, &["speaker"]),
                ev(0, "0.1", EventKind::Ticked, 0.0, &["wheels"]),
            ],
            RunResult::Success,
            1,
        );
        assert!(verify_mutex(&t, &mutex_tree()).pass);
    }

    #[test]
    fn liveness_flags_frozen_timeout() {
        let events = (0..10)
            .flat_map(|k| {
                vec![
                    ev(k, "0.0", EventKind::Paused, 0.3, &["speaker"]),
                    ev(k, "0.1", EventKind::Paused, 0.3, &["speaker"]),
                ]
            })
            .collect();
        let t = trace(events, RunResult::Timeout, 10);
        let verdict = verify_liveness(&t, &mutex_tree(), 3);
        assert!(!verdict.pass);
        assert!(verdict.violations.iter().any(|v| v.property == "deadlock"));
        assert!(verdict
            .violations
            .iter()
            .any(|v| v.property == "starvation"));
    }

    #[test]
    fn single_holder_is_trivially_starvation_free() {
        let events = (0..5)
            .map(|k| ev(k, "0.0", EventKind::Ticked, 0.2 * k as f64, &["speaker"]))
            .collect();
        let t = trace(events, RunResult::Success, 5);
        assert!(verify_liveness(&t, &mutex_tree(), 3).pass);
    }

    #[test]
    fn episodes_and_handovers_are_detected() {
        let t = trace(
            vec![
                ev(0, "0.0", EventKind::Ticked, 0.0, &[]),
                ev(0, "0.1", EventKind::Ticked, 0.0, &[]),
                ev(1, "0.0", EventKind::Paused, 0.5, &[]),
                ev(1, "0.1", EventKind::Ticked, 0.25, &[]),
                ev(2, "0.0", EventKind::Paused, 0.5, &[]),
                ev(2, "0.1", EventKind::Ticked, 0.25, &[]),
                ev(3, "0.0", EventKind::Ticked, 0.5, &[]),
                ev(3, "0.1", EventKind::Ticked, 0.5, &[]),
            ],
            RunResult::Success,
            4,
        );
        let episodes = barrier_episodes(&t, &sync_tree());
        assert_eq!(episodes.len(), 1);
        assert_eq!(episodes[0].start_tick, 1);
        assert_eq!(episodes[0].end_tick, 2);
        assert_eq!(episodes[0].frozen_progress, 0.25);

        let t = trace(
            vec![
                ev(0, "0.1", EventKind::Ticked, 0.0, &["speaker"]),
                ev(1, "0.0", EventKind::Ticked, 0.0, &["speaker"]),
                ev(1, "0.1", EventKind::Paused, 0.5, &["speaker"]),
            ],
            RunResult::Success,
            2,
        );
        let handovers = resource_handovers(&t, &mutex_tree());
        assert_eq!(handovers.len(), 1);
        assert_eq!(handovers[0].tick, 1);
        assert_eq!(handovers[0].from, "0.1");
        assert_eq!(handovers[0].to, "0.0");
    }

    #[test]
    fn verdict_serializes_with_pass_and_violations() {
        let v = VerdictReport::from_violations(vec![]);
        let json = v.to_json();
        assert!(json.contains("\"pass\": true"));
        assert!(json.contains("\"violations\": []"));
    }
}
