//! Engine-vs-composition equivalence checking.

use crate::aging::{self, PolicyConfig};
use crate::engine::{EngineConfig, Runtime};
use crate::resource::ResourceSet;
use crate::status::Status;
use crate::tree::{NodeKind, NodeSpec};

use super::compose::{compose, grant_round, priority_order, ComposedSemantics};
use super::world::{FiniteWorld, OracleError, OracleState, StateId};

/// Result of one equivalence run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub horizon: u64,
    /// First tick at which the two routes disagreed, with both states.
    pub divergence: Option<Divergence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence {
    pub tick: u64,
    pub engine_state: StateId,
    pub composed_state: StateId,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Drives the tick engine and the composed-map iteration from the same
/// start state for `horizon` steps and compares the state sequences
/// elementwise.
///
/// Both routes model the same aging policy. For a mutex root the composed
/// side recomputes the grant round each step from explicit priority
/// bookkeeping (wait counters and held grants); mutex nodes below the root
/// are composed from fresh records and will only match engines whose nested
/// arbitration never depends on accumulated waits.
pub fn check_equivalence(
    tree: &NodeSpec,
    world: &FiniteWorld,
    start_state: StateId,
    horizon: u64,
    policy: PolicyConfig,
) -> Result<EquivalenceReport, OracleError> {
    // Engine route.
    let registry = world.behavior_registry();
    let cfg = EngineConfig {
        max_ticks: horizon.max(1),
        ..EngineConfig::default()
    };
    let mut runtime = Runtime::new(tree, &registry, policy, cfg)
        .map_err(|e| OracleError::Engine(e.to_string()))?;
    let mut engine_world = OracleState { state: start_state };
    let mut engine_states = Vec::with_capacity(horizon as usize + 1);
    engine_states.push(engine_world.state);
    for _ in 0..horizon {
        runtime
            .step(&mut engine_world)
            .map_err(|e| OracleError::Engine(e.to_string()))?;
        engine_states.push(engine_world.state);
    }

    // Composed route.
    let composed_states = iterate_composed(tree, world, start_state, horizon, &policy)?;

    let divergence = engine_states
        .iter()
        .zip(&composed_states)
        .enumerate()
        .find(|(_, (a, b))| a != b)
        .map(|(tick, (&engine_state, &composed_state))| Divergence {
            tick: tick as u64,
            engine_state,
            composed_state,
        });
    Ok(EquivalenceReport {
        horizon,
        divergence,
    })
}

fn iterate_composed(
    tree: &NodeSpec,
    world: &FiniteWorld,
    start_state: StateId,
    horizon: u64,
    policy: &PolicyConfig,
) -> Result<Vec<StateId>, OracleError> {
    let mut states = Vec::with_capacity(horizon as usize + 1);
    states.push(start_state);
    if tree.kind == NodeKind::ParallelMutex {
        let children: Vec<ComposedSemantics> = tree
            .children
            .iter()
            .map(|c| compose(c, world))
            .collect::<Result<_, _>>()?;
        let bases: Vec<u32> = tree
            .children
            .iter()
            .map(|c| c.base_priority.unwrap_or(0))
            .collect();
        let mut waits = vec![0u32; children.len()];
        let mut held = vec![false; children.len()];
        let mut prev_state: Option<StateId> = None;
        let mut x = start_state;
        for _ in 0..horizon {
            let requests: Vec<&ResourceSet> = children.iter().map(|c| &c.resources[x]).collect();
            let effective: Vec<u64> = children
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let requesting = !requests[i].is_empty();
                    let was_running = prev_state
                        .map(|p| c.status[p] == Status::Running)
                        .unwrap_or(false);
                    let holding = held[i] && was_running && requesting;
                    aging::effective_priority(bases[i], waits[i], holding, policy)
                })
                .collect();
            let granted = grant_round(&requests, &effective);
            let mut next = x;
            for i in priority_order(&effective) {
                if granted[i] {
                    next = children[i].transition[next];
                }
            }
            for i in 0..children.len() {
                let requesting = !requests[i].is_empty();
                if !requesting {
                    held[i] = false;
                } else if granted[i] {
                    waits[i] = 0;
                    held[i] = true;
                } else {
                    waits[i] += 1;
                    held[i] = false;
                }
            }
            prev_state = Some(x);
            x = next;
            states.push(x);
        }
    } else {
        let composed = compose(tree, world)?;
        let mut x = start_state;
        for _ in 0..horizon {
            x = composed.transition[x];
            states.push(x);
        }
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::world::VarSpec;
    use crate::progress::Progress;

    fn counter_world() -> FiniteWorld {
        let mut w = FiniteWorld::new(vec![
            VarSpec {
                name: "a".into(),
                cardinality: 4,
            },
            VarSpec {
                name: "b".into(),
                cardinality: 4,
            },
        ])
        .unwrap();
        for (name, var) in [("CountA", 0usize), ("CountB", 1usize)] {
            w.add_action(
                name,
                &[var],
                move |x| {
                    let mut y = x.to_vec();
                    y[var] = (y[var] + 1).min(3);
                    y
                },
                move |x| {
                    if x[var] == 3 {
                        Status::Success
                    } else {
                        Status::Running
                    }
                },
                move |x| Progress::new(x[var] as f64 / 3.0).unwrap(),
                |_| ResourceSet::new(),
            )
            .unwrap();
        }
        w.add_condition("AtLeastOneA", &[0], |x| x[0] >= 1).unwrap();
        w
    }

    fn check(tree: &NodeSpec, world: &FiniteWorld, start: StateId) -> EquivalenceReport {
        check_equivalence(tree, world, start, 50, PolicyConfig::default()).unwrap()
    }

    #[test]
    fn single_leaf_matches_by_construction() {
        let w = counter_world();
        let tree = NodeSpec::action("0", "CountA");
        for start in 0..w.state_count() {
            assert!(check(&tree, &w, start).passed());
        }
    }

    #[test]
    fn sequence_of_condition_and_action_matches() {
        let w = counter_world();
        let tree = NodeSpec::operator(
            "0",
            NodeKind::Sequence,
            vec![
                NodeSpec::condition("0.0", "AtLeastOneA"),
                NodeSpec::action("0.1", "CountB"),
            ],
        );
        for start in 0..w.state_count() {
            assert!(check(&tree, &w, start).passed());
        }
    }

    #[test]
    fn sync_over_counters_matches() {
        let w = counter_world();
        let tree = NodeSpec::operator(
            "0",
            NodeKind::ParallelSync,
            vec![
                NodeSpec::action("0.0", "CountA"),
                NodeSpec::action("0.1", "CountB"),
            ],
        );
        for start in 0..w.state_count() {
            let report = check(&tree, &w, start);
            assert!(report.passed(), "diverged: {:?}", report.divergence);
        }
    }

    #[test]
    fn mutex_with_aging_contention_matches() {
        let mut w = counter_world();
        let spk = w.catalog_mut().intern("speaker").unwrap();
        for (name, var) in [("SpeakA", 0usize), ("SpeakB", 1usize)] {
            w.add_action(
                name,
                &[var],
                move |x| {
                    let mut y = x.to_vec();
                    y[var] = (y[var] + 1).min(3);
                    y
                },
                move |x| {
                    if x[var] == 3 {
                        Status::Success
                    } else {
                        Status::Running
                    }
                },
                move |x| Progress::new(x[var] as f64 / 3.0).unwrap(),
                move |x| {
                    if x[var] == 3 {
                        ResourceSet::new()
                    } else {
                        ResourceSet::singleton(spk)
                    }
                },
            )
            .unwrap();
        }
        let tree = NodeSpec::operator(
            "0",
            NodeKind::ParallelMutex,
            vec![
                NodeSpec::action("0.0", "SpeakA").with_base_priority(1),
                NodeSpec::action("0.1", "SpeakB"),
            ],
        );
        for start in 0..w.state_count() {
            let report = check(&tree, &w, start);
            assert!(report.passed(), "start {start}: {:?}", report.divergence);
        }
    }

    #[test]
    fn divergence_is_reported_with_first_tick() {
        // A world whose engine route and a deliberately different composed
        // route cannot be built through the public API, so instead check the
        // reporting shape on a passing case.
        let w = counter_world();
        let tree = NodeSpec::action("0", "CountA");
        let report = check(&tree, &w, 0);
        assert_eq!(report.horizon, 50);
        assert!(report.divergence.is_none());
    }
}
