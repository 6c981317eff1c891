//! Enumerable worlds with per-leaf transition tables.

use crate::leaf::{BehaviorRegistry, LeafBehavior, World};
use crate::progress::Progress;
use crate::resource::{ResourceCatalog, ResourceSet};
use crate::status::Status;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Index into the enumerated state set.
pub type StateId = usize;

const MAX_STATES: usize = 100_000;

/// One world variable with a finite domain `0..cardinality`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSpec {
    pub name: String,
    pub cardinality: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Action,
    Condition,
}

/// Explicit per-state maps for one leaf. The `footprint` declares which
/// variables the leaf may read or write; the audits below hold every table
/// to that declaration.
#[derive(Debug, Clone)]
pub struct LeafTables {
    pub kind: LeafKind,
    pub footprint: BTreeSet<usize>,
    /// Raw step function. The effective transition applied during execution
    /// steps only inside the running region and is the identity elsewhere.
    pub transition: Vec<StateId>,
    pub status: Vec<Status>,
    pub progress: Vec<Progress>,
    pub resources: Vec<ResourceSet>,
}

impl LeafTables {
    /// Transition actually applied when the leaf is ticked: a step while
    /// running, the identity once settled.
    pub fn effective_transition(&self, state: StateId) -> StateId {
        if self.status[state] == Status::Running {
            self.transition[state]
        } else {
            state
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("state space of {0} states exceeds the {MAX_STATES} limit")]
    TooLarge(usize),
    #[error("leaf `{0}` is not defined in the finite world")]
    UnknownLeaf(String),
    #[error("leaf `{leaf}`: {detail}")]
    LeafContract { leaf: String, detail: String },
    #[error("node {node}: {detail}")]
    Structural { node: String, detail: String },
    #[error("engine: {0}")]
    Engine(String),
}

/// An enumerable world: a variable product space plus leaf tables.
#[derive(Debug, Clone)]
pub struct FiniteWorld {
    vars: Vec<VarSpec>,
    strides: Vec<usize>,
    state_count: usize,
    leaves: BTreeMap<String, LeafTables>,
    catalog: ResourceCatalog,
}

impl FiniteWorld {
    pub fn new(vars: Vec<VarSpec>) -> Result<FiniteWorld, OracleError> {
        let mut count: usize = 1;
        let mut strides = Vec::with_capacity(vars.len());
        for v in &vars {
            strides.push(count);
            count = count.saturating_mul(v.cardinality.max(1) as usize);
        }
        if count > MAX_STATES {
            return Err(OracleError::TooLarge(count));
        }
        Ok(FiniteWorld {
            vars,
            strides,
            state_count: count,
            leaves: BTreeMap::new(),
            catalog: ResourceCatalog::new(),
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn vars(&self) -> &[VarSpec] {
        &self.vars
    }

    pub fn catalog(&self) -> &ResourceCatalog {
        &self.catalog
    }

    pub fn catalog_mut(&mut self) -> &mut ResourceCatalog {
        &mut self.catalog
    }

    pub fn leaf(&self, name: &str) -> Result<&LeafTables, OracleError> {
        self.leaves
            .get(name)
            .ok_or_else(|| OracleError::UnknownLeaf(name.to_owned()))
    }

    pub fn leaf_names(&self) -> BTreeSet<String> {
        self.leaves.keys().cloned().collect()
    }

    pub fn decode(&self, state: StateId) -> Vec<u32> {
        self.vars
            .iter()
            .zip(&self.strides)
            .map(|(v, &stride)| ((state / stride) % v.cardinality.max(1) as usize) as u32)
            .collect()
    }

    pub fn encode(&self, assignment: &[u32]) -> StateId {
        assignment
            .iter()
            .zip(&self.strides)
            .map(|(&v, &stride)| v as usize * stride)
            .sum()
    }

    /// Defines an action leaf from per-assignment functions, materializing
    /// full tables and auditing them against the declared footprint.
    pub fn add_action(
        &mut self,
        name: &str,
        footprint: &[usize],
        step: impl Fn(&[u32]) -> Vec<u32>,
        status: impl Fn(&[u32]) -> Status,
        progress: impl Fn(&[u32]) -> Progress,
        resources: impl Fn(&[u32]) -> ResourceSet,
    ) -> Result<(), OracleError> {
        let tables = self.build_tables(
            LeafKind::Action,
            footprint,
            &step,
            &status,
            &progress,
            &resources,
        );
        self.audit(name, &tables)?;
        self.leaves.insert(name.to_owned(), tables);
        Ok(())
    }

    /// Defines a condition leaf: identity transition, progress one, no
    /// resources; only the predicate varies.
    pub fn add_condition(
        &mut self,
        name: &str,
        footprint: &[usize],
        predicate: impl Fn(&[u32]) -> bool,
    ) -> Result<(), OracleError> {
        let tables = self.build_tables(
            LeafKind::Condition,
            footprint,
            &|x: &[u32]| x.to_vec(),
            &|x: &[u32]| {
                if predicate(x) {
                    Status::Success
                } else {
                    Status::Failure
                }
            },
            &|_: &[u32]| Progress::ONE,
            &|_: &[u32]| ResourceSet::new(),
        );
        self.audit(name, &tables)?;
        self.leaves.insert(name.to_owned(), tables);
        Ok(())
    }

    fn build_tables(
        &self,
        kind: LeafKind,
        footprint: &[usize],
        step: &dyn Fn(&[u32]) -> Vec<u32>,
        status: &dyn Fn(&[u32]) -> Status,
        progress: &dyn Fn(&[u32]) -> Progress,
        resources: &dyn Fn(&[u32]) -> ResourceSet,
    ) -> LeafTables {
        let mut transition = Vec::with_capacity(self.state_count);
        let mut statuses = Vec::with_capacity(self.state_count);
        let mut progresses = Vec::with_capacity(self.state_count);
        let mut sets = Vec::with_capacity(self.state_count);
        for s in 0..self.state_count {
            let x = self.decode(s);
            transition.push(self.encode(&step(&x)));
            statuses.push(status(&x));
            progresses.push(progress(&x));
            sets.push(resources(&x));
        }
        LeafTables {
            kind,
            footprint: footprint.iter().copied().collect(),
            transition,
            status: statuses,
            progress: progresses,
            resources: sets,
        }
    }

    /// Footprint audit: writes stay inside the declared footprint, every
    /// table depends only on footprint variables, and condition leaves keep
    /// identity transitions with progress one and no Running region.
    fn audit(&self, name: &str, t: &LeafTables) -> Result<(), OracleError> {
        let err = |detail: String| OracleError::LeafContract {
            leaf: name.to_owned(),
            detail,
        };
        for var in &t.footprint {
            if *var >= self.vars.len() {
                return Err(err(format!("footprint names unknown variable {var}")));
            }
        }
        for s in 0..self.state_count {
            let x = self.decode(s);
            let y = self.decode(t.transition[s]);
            for (i, (&a, &b)) in x.iter().zip(&y).enumerate() {
                if a != b && !t.footprint.contains(&i) {
                    return Err(err(format!(
                        "writes variable `{}` outside its footprint",
                        self.vars[i].name
                    )));
                }
            }
            // Dependence check: the leaf must behave identically at the
            // canonical state that agrees with `s` on the footprint and is
            // zero elsewhere.
            let mut canon = x.clone();
            for (i, v) in canon.iter_mut().enumerate() {
                if !t.footprint.contains(&i) {
                    *v = 0;
                }
            }
            let c = self.encode(&canon);
            if t.status[s] != t.status[c]
                || t.progress[s] != t.progress[c]
                || t.resources[s] != t.resources[c]
            {
                return Err(err(format!(
                    "status/progress/resources depend on variables outside the footprint (state {s})"
                )));
            }
            let proj = |state: StateId| -> Vec<u32> {
                let full = self.decode(state);
                t.footprint.iter().map(|&i| full[i]).collect()
            };
            if proj(t.transition[s]) != proj(t.transition[c]) {
                return Err(err(format!(
                    "transition depends on variables outside the footprint (state {s})"
                )));
            }
            if t.kind == LeafKind::Condition {
                if t.transition[s] != s {
                    return Err(err("condition with a non-identity transition".to_owned()));
                }
                if t.progress[s] != Progress::ONE {
                    return Err(err("condition with progress below one".to_owned()));
                }
                if t.status[s] == Status::Running {
                    return Err(err("condition with a running region".to_owned()));
                }
            }
        }
        Ok(())
    }

    /// Union of leaf footprints under a tree node, resolving leaf names
    /// against this world.
    pub fn subtree_footprint(
        &self,
        node: &crate::tree::NodeSpec,
    ) -> Result<BTreeSet<usize>, OracleError> {
        let mut out = BTreeSet::new();
        for n in node.preorder() {
            if let Some(name) = &n.leaf_ref {
                out.extend(self.leaf(name)?.footprint.iter().copied());
            }
        }
        Ok(out)
    }

    /// Behavior registry over [`OracleState`] for driving the tick engine
    /// against this world. Each adapter owns a copy of its tables.
    pub fn behavior_registry(&self) -> BehaviorRegistry<OracleState> {
        let mut reg = BehaviorRegistry::new();
        for (name, tables) in &self.leaves {
            reg.register(
                name.clone(),
                Box::new(TableLeaf {
                    tables: tables.clone(),
                }),
            );
        }
        reg
    }
}

/// World handle the engine mutates: just the current state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleState {
    pub state: StateId,
}

impl World for OracleState {}

/// Engine-side adapter for one leaf's tables. Reports the status of the
/// current state and steps only while running, so ticking never moves a
/// settled leaf.
struct TableLeaf {
    tables: LeafTables,
}

impl LeafBehavior<OracleState> for TableLeaf {
    fn tick(&self, w: &mut OracleState) -> Status {
        let st = self.tables.status[w.state];
        if st == Status::Running {
            w.state = self.tables.transition[w.state];
        }
        st
    }

    fn status(&self, w: &OracleState) -> Status {
        self.tables.status[w.state]
    }

    fn progress(&self, w: &OracleState) -> Progress {
        self.tables.progress[w.state]
    }

    fn resources(&self, w: &OracleState) -> ResourceSet {
        self.tables.resources[w.state].clone()
    }
}
