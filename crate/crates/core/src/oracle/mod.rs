//! Independent state-space semantics and trace verifiers.
//!
//! The engine executes trees by routing ticks. This module re-derives the
//! same semantics a second way: over an enumerable world it composes, bottom
//! up, explicit per-state maps for a whole tree — transition, status,
//! progress, and resources — and iterates the composed transition as a plain
//! difference equation. [`check_equivalence`] drives both routes from the
//! same start state and reports the first divergence, if any.
//!
//! The verifiers in [`verify`] work on serialized traces instead, checking
//! the barrier property (ticked children of a progress-synchronized group
//! sit at the group minimum), mutual exclusion (ticked children of a mutex
//! group hold disjoint resources), and liveness (no deadlock, bounded
//! waiting).

mod compose;
mod equiv;
mod fuzz;
mod verify;
mod world;

pub use compose::{classify_regions, compose, ComposedSemantics, RegionPartition};
pub use equiv::{check_equivalence, EquivalenceReport};
pub use fuzz::{generate_case, GeneratedCase};
pub use verify::{
    barrier_episodes, resource_handovers, verify_all, verify_barrier, verify_liveness,
    verify_mutex, BarrierEpisode, Handover, VerdictReport, Violation,
};
pub use world::{FiniteWorld, LeafKind, LeafTables, OracleError, OracleState, StateId, VarSpec};
