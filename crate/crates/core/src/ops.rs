//! Per-operator tick semantics and composition rules.
//!
//! Everything in this module is a pure decision function: routing for
//! Sequence/Fallback, status aggregation for the parallel operators, the
//! progress barrier gate, the resource arbitration gate, and the rules that
//! compose progress values and resource sets of subtrees. The engine drives
//! these against live worlds; the state-space oracle re-derives the same
//! semantics independently over finite worlds.

use crate::progress::Progress;
use crate::resource::ResourceSet;
use crate::status::Status;

/// Why a gated child did not receive a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauseReason {
    /// Withheld by a progress barrier: its progress exceeds the group minimum.
    BarrierWait,
    /// Withheld by resource arbitration: its resources overlap an earlier grant.
    ResourceWait,
}

/// Per-child outcome of one gate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateFlag {
    Ticked,
    Paused(PauseReason),
    /// Never considered this tick (short-circuited by routing).
    NotReached,
}

/// One gate evaluation over all children of a parallel operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateDecision {
    pub flags: Vec<GateFlag>,
}

impl GateDecision {
    /// Combines eligibility with each child's previous status: eligible
    /// children are ticked; ineligible children that had running activity
    /// are paused with the given reason; the rest are not reached.
    pub fn from_eligibility(
        eligible: &[bool],
        running: &[bool],
        reason: PauseReason,
    ) -> GateDecision {
        debug_assert_eq!(eligible.len(), running.len());
        let flags = eligible
            .iter()
            .zip(running)
            .map(|(&e, &r)| {
                if e {
                    GateFlag::Ticked
                } else if r {
                    GateFlag::Paused(reason)
                } else {
                    GateFlag::NotReached
                }
            })
            .collect();
        GateDecision { flags }
    }

    pub fn ticked(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f, GateFlag::Ticked))
            .map(|(i, _)| i)
    }
}

/// Routes a tick through Fallback children left to right: stops at the first
/// child reporting Running or Success and returns that status; reports
/// Failure only after every child failed.
pub fn tick_fallback<E>(
    child_count: usize,
    mut tick_child: impl FnMut(usize) -> Result<Status, E>,
) -> Result<Status, E> {
    for i in 0..child_count {
        match tick_child(i)? {
            Status::Running => return Ok(Status::Running),
            Status::Success => return Ok(Status::Success),
            Status::Failure => {}
        }
    }
    Ok(Status::Failure)
}

/// Routes a tick through Sequence children left to right: stops at the first
/// child reporting Running or Failure and returns that status; reports
/// Success only after every child succeeded.
pub fn tick_sequence<E>(
    child_count: usize,
    mut tick_child: impl FnMut(usize) -> Result<Status, E>,
) -> Result<Status, E> {
    for i in 0..child_count {
        match tick_child(i)? {
            Status::Running => return Ok(Status::Running),
            Status::Failure => return Ok(Status::Failure),
            Status::Success => {}
        }
    }
    Ok(Status::Success)
}

/// Aggregates parallel child statuses: Success once at least
/// `success_threshold` children report Success, Failure once enough children
/// failed that the threshold is unreachable, Running otherwise.
///
/// With the default threshold (the child count) this is exactly: Success iff
/// all succeed, Failure iff any fails.
pub fn aggregate_parallel(statuses: &[Status], success_threshold: usize) -> Status {
    let n = statuses.len();
    let successes = statuses.iter().filter(|s| **s == Status::Success).count();
    let failures = statuses.iter().filter(|s| **s == Status::Failure).count();
    if successes >= success_threshold {
        Status::Success
    } else if failures > n - success_threshold {
        Status::Failure
    } else {
        Status::Running
    }
}

/// Barrier gate: child `i` is eligible iff its snapshot progress does not
/// exceed the snapshot minimum, which for a consistent snapshot means it
/// equals the minimum. Progress values are compared exactly.
pub fn sync_eligibility(snapshot: &[Progress]) -> Vec<bool> {
    let min = snapshot.iter().copied().min().unwrap_or(Progress::ZERO);
    snapshot.iter().map(|p| *p <= min).collect()
}

/// Outcome of one resource arbitration round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutexArbitration {
    /// Child indices in consideration order: descending effective priority,
    /// ties broken toward the lower index.
    pub order: Vec<usize>,
    /// Per child: whether its request was granted this tick.
    pub granted: Vec<bool>,
    /// Union of the resources granted this tick.
    pub reserved: ResourceSet,
}

/// Resource gate: children are considered in descending effective priority
/// (ties toward the lower index) and granted iff their requested set is
/// disjoint from everything already reserved this tick. The reserved set
/// only grows within a round. Children requesting nothing are always granted.
pub fn arbitrate_mutex(requests: &[ResourceSet], effective: &[u64]) -> MutexArbitration {
    debug_assert_eq!(requests.len(), effective.len());
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| effective[b].cmp(&effective[a]).then(a.cmp(&b)));
    let mut granted = vec![false; requests.len()];
    let mut reserved = ResourceSet::new();
    for &i in &order {
        if requests[i].is_disjoint(&reserved) {
            granted[i] = true;
            reserved.union_with(&requests[i]);
        }
    }
    MutexArbitration {
        order,
        granted,
        reserved,
    }
}

/// Progress of a two-child Sequence: the first half of the composite covers
/// child one, the second half covers child two once child one's success
/// region is reached.
pub fn compose_progress_sequence(p1: Progress, p2: Progress, in_success_region: bool) -> Progress {
    let v = if in_success_region {
        0.5 + p2.value() / 2.0
    } else {
        p1.value() / 2.0
    };
    Progress::new(v).expect("halving and shifting preserves [0, 1]")
}

/// Progress of a two-child Fallback: child two's progress once child one's
/// failure region is reached, child one's otherwise.
pub fn compose_progress_fallback(p1: Progress, p2: Progress, in_failure_region: bool) -> Progress {
    if in_failure_region {
        p2
    } else {
        p1
    }
}

/// Progress and resources of a parallel group: the minimum progress across
/// children and the union of their resource sets.
pub fn compose_parallel(
    progresses: &[Progress],
    resources: &[ResourceSet],
) -> (Progress, ResourceSet) {
    assert!(
        !progresses.is_empty(),
        "parallel composition over no children"
    );
    let p = progresses.iter().copied().min().unwrap();
    let mut q = ResourceSet::new();
    for r in resources {
        q.union_with(r);
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::ResourceCatalog;

    fn p(v: f64) -> Progress {
        Progress::new(v).unwrap()
    }

    #[test]
    fn fallback_routing() {
        // (F, S, —): stops at the Success child; the third is never ticked.
        let mut ticked = Vec::new();
        let script = [Status::Failure, Status::Success, Status::Running];
        let st = tick_fallback::<()>(3, |i| {
            ticked.push(i);
            Ok(script[i])
        })
        .unwrap();
        assert_eq!(st, Status::Success);
        assert_eq!(ticked, vec![0, 1]);

        // (F, F): all failed.
        let st = tick_fallback::<()>(2, |_| Ok(Status::Failure)).unwrap();
        assert_eq!(st, Status::Failure);

        // (R, —): stops immediately.
        let mut ticked = Vec::new();
        let st = tick_fallback::<()>(2, |i| {
            ticked.push(i);
            Ok(Status::Running)
        })
        .unwrap();
        assert_eq!(st, Status::Running);
        assert_eq!(ticked, vec![0]);
    }

    #[test]
    fn sequence_routing() {
        // (S, R): running stops the walk.
        let script = [Status::Success, Status::Running];
        let st = tick_sequence::<()>(2, |i| Ok(script[i])).unwrap();
        assert_eq!(st, Status::Running);

        // (S, S): all succeeded.
        let st = tick_sequence::<()>(2, |_| Ok(Status::Success)).unwrap();
        assert_eq!(st, Status::Success);

        // (F, —): second child never ticked.
        let mut ticked = Vec::new();
        let st = tick_sequence::<()>(2, |i| {
            ticked.push(i);
            Ok(Status::Failure)
        })
        .unwrap();
        assert_eq!(st, Status::Failure);
        assert_eq!(ticked, vec![0]);
    }

    #[test]
    fn parallel_aggregation_two_children() {
        use Status::*;
        let cases = [
            ((Success, Success), Success),
            ((Success, Failure), Failure),
            ((Success, Running), Running),
            ((Failure, Success), Failure),
            ((Failure, Failure), Failure),
            ((Failure, Running), Failure),
            ((Running, Success), Running),
            ((Running, Failure), Failure),
            ((Running, Running), Running),
        ];
        for ((a, b), want) in cases {
            assert_eq!(aggregate_parallel(&[a, b], 2), want, "({a}, {b})");
        }
    }

    #[test]
    fn parallel_aggregation_with_threshold() {
        use Status::*;
        // Threshold 1 of 2: one success settles it.
        assert_eq!(aggregate_parallel(&[Success, Failure], 1), Success);
        // Threshold 2 of 3: two failures make it unreachable.
        assert_eq!(aggregate_parallel(&[Success, Failure, Failure], 2), Failure);
        assert_eq!(aggregate_parallel(&[Success, Running, Failure], 2), Running);
    }

    #[test]
    fn sync_gate_matches_minimum() {
        assert_eq!(sync_eligibility(&[p(0.5), p(0.5)]), vec![true, true]);
        assert_eq!(sync_eligibility(&[p(0.5), p(0.7)]), vec![true, false]);
        assert_eq!(
            sync_eligibility(&[p(0.0), p(0.0), p(1.0)]),
            vec![true, true, false]
        );
    }

    #[test]
    fn gate_decision_pauses_running_children() {
        let d = GateDecision::from_eligibility(
            &[true, false, false],
            &[true, true, false],
            PauseReason::BarrierWait,
        );
        assert_eq!(
            d.flags,
            vec![
                GateFlag::Ticked,
                GateFlag::Paused(PauseReason::BarrierWait),
                GateFlag::NotReached
            ]
        );
        assert_eq!(d.ticked().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn mutex_gate_tie_goes_to_lower_index() {
        let mut cat = ResourceCatalog::new();
        let speaker = cat.intern("speaker").unwrap();
        let q = vec![
            ResourceSet::singleton(speaker),
            ResourceSet::singleton(speaker),
        ];
        let arb = arbitrate_mutex(&q, &[5, 5]);
        assert_eq!(arb.granted, vec![true, false]);
        assert_eq!(arb.order, vec![0, 1]);
    }

    #[test]
    fn mutex_gate_disjoint_requests_all_granted() {
        let mut cat = ResourceCatalog::new();
        let speaker = cat.intern("speaker").unwrap();
        let wheels = cat.intern("wheels").unwrap();
        let q = vec![
            ResourceSet::singleton(speaker),
            ResourceSet::singleton(wheels),
        ];
        let arb = arbitrate_mutex(&q, &[0, 0]);
        assert_eq!(arb.granted, vec![true, true]);
        assert_eq!(arb.reserved.len(), 2);
    }

    #[test]
    fn mutex_gate_strictly_higher_priority_wins() {
        let mut cat = ResourceCatalog::new();
        let speaker = cat.intern("speaker").unwrap();
        let q = vec![
            ResourceSet::singleton(speaker),
            ResourceSet::singleton(speaker),
        ];
        let arb = arbitrate_mutex(&q, &[1, 2]);
        assert_eq!(arb.granted, vec![false, true]);
        assert_eq!(arb.order, vec![1, 0]);
    }

    #[test]
    fn mutex_reserved_set_only_grows() {
        let mut cat = ResourceCatalog::new();
        let a = cat.intern("a").unwrap();
        let b = cat.intern("b").unwrap();
        let q = vec![
            ResourceSet::singleton(a),
            ResourceSet::singleton(b),
            [a, b].into_iter().collect::<ResourceSet>(),
        ];
        let arb = arbitrate_mutex(&q, &[3, 2, 1]);
        assert_eq!(arb.granted, vec![true, true, false]);
        assert_eq!(arb.reserved, [a, b].into_iter().collect());
    }

    #[test]
    fn empty_request_always_granted() {
        let mut cat = ResourceCatalog::new();
        let a = cat.intern("a").unwrap();
        let q = vec![ResourceSet::new(), ResourceSet::singleton(a)];
        let arb = arbitrate_mutex(&q, &[0, 9]);
        assert_eq!(arb.granted, vec![true, true]);
    }

    #[test]
    fn sequence_progress_composition() {
        assert_eq!(compose_progress_sequence(p(0.6), p(0.0), false), p(0.3));
        assert_eq!(compose_progress_sequence(p(0.0), p(1.0), true), p(1.0));
        assert_eq!(compose_progress_sequence(p(0.0), p(0.0), false), p(0.0));
    }

    #[test]
    fn fallback_progress_composition() {
        assert_eq!(compose_progress_fallback(p(0.4), p(0.9), false), p(0.4));
        assert_eq!(compose_progress_fallback(p(0.4), p(0.9), true), p(0.9));
        assert_eq!(compose_progress_fallback(p(0.5), p(0.5), true), p(0.5));
    }

    #[test]
    fn parallel_composition() {
        let mut cat = ResourceCatalog::new();
        let speaker = cat.intern("speaker").unwrap();
        let wheels = cat.intern("wheels").unwrap();
        let q1 = ResourceSet::singleton(speaker);
        let q2: ResourceSet = [speaker, wheels].into_iter().collect();

        let (p0, q0) = compose_parallel(&[p(0.3), p(0.8)], &[q1.clone(), q2.clone()]);
        assert_eq!(p0, p(0.3));
        assert_eq!(q0, q2);

        // Single child: identity.
        let (p0, q0) = compose_parallel(&[p(0.8)], std::slice::from_ref(&q1));
        assert_eq!(p0, p(0.8));
        assert_eq!(q0, q1);
    }
}
