//! Property tests for the gate decision rules.

use cbt::ops::{aggregate_parallel, arbitrate_mutex, sync_eligibility};
use cbt::progress::Progress;
use cbt::resource::{ResourceCatalog, ResourceId, ResourceSet};
use cbt::status::Status;
use proptest::prelude::*;

fn progress_vec() -> impl Strategy<Value = Vec<Progress>> {
    prop::collection::vec(
        (0u32..=8).prop_map(|k| Progress::new(k as f64 / 8.0).unwrap()),
        1..8,
    )
}

fn request_vec() -> impl Strategy<Value = Vec<[bool; 3]>> {
    prop::collection::vec(prop::array::uniform3(any::<bool>()), 1..6)
}

fn tokens() -> (ResourceCatalog, [ResourceId; 3]) {
    let mut cat = ResourceCatalog::new();
    let ids = [
        cat.intern("a").unwrap(),
        cat.intern("b").unwrap(),
        cat.intern("c").unwrap(),
    ];
    (cat, ids)
}

fn to_sets(picks: &[[bool; 3]], ids: &[ResourceId; 3]) -> Vec<ResourceSet> {
    picks
        .iter()
        .map(|row| {
            row.iter()
                .zip(ids)
                .filter(|(on, _)| **on)
                .map(|(_, id)| *id)
                .collect()
        })
        .collect()
}

proptest! {
    /// The barrier gate ticks exactly the children sitting at the minimum.
    #[test]
    fn sync_gate_ticks_exactly_the_minimum(snapshot in progress_vec()) {
        let eligible = sync_eligibility(&snapshot);
        let min = snapshot.iter().copied().min().unwrap();
        for (i, p) in snapshot.iter().enumerate() {
            prop_assert_eq!(eligible[i], *p == min);
        }
        prop_assert!(eligible.iter().any(|&e| e));
    }

    /// Granted requests are pairwise disjoint, the reserved set is their
    /// union, empty requests always pass, and the decision is a pure
    /// function of its inputs.
    #[test]
    fn mutex_gate_invariants(picks in request_vec(), priorities in prop::collection::vec(0u64..10, 6)) {
        let (_cat, ids) = tokens();
        let requests = to_sets(&picks, &ids);
        let effective = &priorities[..requests.len()];
        let arb = arbitrate_mutex(&requests, effective);

        let granted: Vec<&ResourceSet> = requests
            .iter()
            .zip(&arb.granted)
            .filter(|(_, g)| **g)
            .map(|(q, _)| q)
            .collect();
        for (i, a) in granted.iter().enumerate() {
            for b in &granted[i + 1..] {
                prop_assert!(a.is_disjoint(b));
            }
        }
        let mut union = ResourceSet::new();
        for q in &granted {
            union.union_with(q);
        }
        prop_assert_eq!(&arb.reserved, &union);

        for (q, g) in requests.iter().zip(&arb.granted) {
            if q.is_empty() {
                prop_assert!(*g);
            }
        }

        prop_assert_eq!(arbitrate_mutex(&requests, effective), arb);
    }

    /// Default-threshold aggregation: success only when everyone succeeded,
    /// failure as soon as anyone failed.
    #[test]
    fn aggregation_matches_the_all_any_rule(statuses in prop::collection::vec(
        prop_oneof![Just(Status::Success), Just(Status::Failure), Just(Status::Running)],
        1..7,
    )) {
        let got = aggregate_parallel(&statuses, statuses.len());
        let want = if statuses.iter().all(|s| *s == Status::Success) {
            Status::Success
        } else if statuses.contains(&Status::Failure) {
            Status::Failure
        } else {
            Status::Running
        };
        prop_assert_eq!(got, want);
    }
}
