//! Concurrent behavior trees.
//!
//! Classical behavior trees compose actions with Sequence, Fallback, and
//! Parallel operators, but the Parallel operator is only safe when its
//! children touch disjoint parts of the world. This crate extends every node
//! with a progress value in `[0, 1]` and a set of required resource symbols,
//! and adds two parallel variants built on them:
//!
//! * [`NodeKind::ParallelSync`] — a barrier: only children whose progress
//!   equals the minimum across the group receive ticks, so faster children
//!   wait for the slowest one.
//! * [`NodeKind::ParallelMutex`] — a semaphore: children receive ticks only
//!   while their required resources are disjoint from those already granted
//!   this tick, arbitrated by aging priorities so that no child starves.
//!
//! The crate ships four layers:
//!
//! * domain types and per-operator decision rules ([`ops`]),
//! * a deterministic tick engine that emits a JSON-lines [`trace`],
//! * an independent state-space [`oracle`] that composes whole-tree
//!   transition maps over finite worlds and cross-checks the engine,
//!   plus trace verifiers for the barrier, mutual-exclusion, and
//!   liveness properties,
//! * an s-expression [`dsl`] for tree definitions and two scripted
//!   [`scenario`] worlds (a hallway sweep and an office delivery) that
//!   exercise both operators end to end.

pub mod aging;
pub mod dsl;
pub mod engine;
pub mod leaf;
pub mod ops;
pub mod oracle;
pub mod priority;
pub mod progress;
pub mod resource;
pub mod scenario;
pub mod status;
pub mod trace;
pub mod tree;

pub use aging::PolicyConfig;
pub use engine::{EngineConfig, EngineError, Runtime};
pub use leaf::{BehaviorRegistry, LeafBehavior, World};
pub use priority::Priority;
pub use progress::Progress;
pub use resource::{ResourceCatalog, ResourceId, ResourceSet};
pub use status::Status;
pub use trace::{RunResult, Trace, TraceEvent};
pub use tree::{NodeId, NodeKind, NodeSpec, ValidationReport};
