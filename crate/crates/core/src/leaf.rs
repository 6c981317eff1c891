//! Leaf behavior contract and registry.

use crate::progress::Progress;
use crate::resource::ResourceSet;
use crate::status::Status;
use std::collections::{BTreeMap, BTreeSet};

/// World state driven by a run. `begin_tick` is the injection point for
/// scripted exogenous events (flags flipping at fixed ticks); worlds without
/// a script keep the default no-op.
pub trait World {
    fn begin_tick(&mut self, _tick: u64) {}
}

/// The operations a host must provide per leaf.
///
/// All leaf state lives in the world: behaviors themselves are stateless and
/// answer the pure queries `status`, `progress`, and `resources` against the
/// current world without mutating it. `tick` performs one step of work.
///
/// Contract, enforced by the engine where it can be:
/// * conditions never mutate the world and report progress 1;
/// * `halt` and `pause` complete within the same engine step and leave the
///   leaf's progress and resource demands unchanged;
/// * a leaf's progress changes only across ticks in which it was ticked
///   while running.
pub trait LeafBehavior<W> {
    /// Performs one step of work and reports the resulting status.
    fn tick(&self, world: &mut W) -> Status;

    /// Pure status query: which region of the state space the world is in
    /// for this leaf, without doing any work.
    fn status(&self, world: &W) -> Status;

    /// Pure progress query in `[0, 1]`.
    fn progress(&self, world: &W) -> Progress;

    /// Pure query for the resources this leaf needs at the current state.
    fn resources(&self, world: &W) -> ResourceSet;

    /// Abort routine: the leaf is no longer required.
    fn halt(&self, _world: &mut W) {}

    /// Wait routine: the leaf is temporarily withheld at a barrier or
    /// resource gate. Invoked on every withheld tick; must be idempotent.
    fn pause(&self, _world: &mut W) {}
}

/// Name-keyed store of leaf behaviors for one scenario.
pub struct BehaviorRegistry<W> {
    map: BTreeMap<String, Box<dyn LeafBehavior<W>>>,
}

impl<W> Default for BehaviorRegistry<W> {
    fn default() -> Self {
        BehaviorRegistry {
            map: BTreeMap::new(),
        }
    }
}

impl<W> BehaviorRegistry<W> {
    pub fn new() -> BehaviorRegistry<W> {
        BehaviorRegistry::default()
    }

    /// Registers a behavior under `name`, replacing any previous binding.
    pub fn register(&mut self, name: impl Into<String>, behavior: Box<dyn LeafBehavior<W>>) {
        self.map.insert(name.into(), behavior);
    }

    pub fn get(&self, name: &str) -> Option<&dyn LeafBehavior<W>> {
        self.map.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> BTreeSet<String> {
        self.map.keys().cloned().collect()
    }
}
