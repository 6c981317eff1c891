//! Seeded generator of random trees over random finite worlds.
//!
//! Every leaf owns its own world variable, so leaf footprints are pairwise
//! disjoint and any grouping under parallel operators is orthogonal by
//! construction. Gated operators (sync/mutex) appear only at the root, over
//! classical subtrees; arbitrary nesting of Sequence/Fallback/Parallel is
//! generated freely.

use crate::progress::Progress;
use crate::resource::ResourceSet;
use crate::status::Status;
use crate::tree::{NodeId, NodeKind, NodeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::world::{FiniteWorld, StateId, VarSpec};

/// One generated equivalence case.
pub struct GeneratedCase {
    pub tree: NodeSpec,
    pub world: FiniteWorld,
    pub start_state: StateId,
}

/// Builds a random case from a seed. Worlds have at most 16 states; trees
/// have at most 7 nodes and depth at most 3.
pub fn generate_case(seed: u64) -> GeneratedCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaf_count = rng.gen_range(2..=4usize);

    // Grow variable domains until the product reaches the 16-state budget.
    let mut cards = vec![2u32; leaf_count];
    loop {
        let product: usize = cards.iter().map(|&c| c as usize).product();
        if product * 2 > 16 {
            break;
        }
        let i = rng.gen_range(0..leaf_count);
        cards[i] *= 2;
    }

    let vars = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| VarSpec {
            name: format!("v{i}"),
            cardinality: c,
        })
        .collect();
    let mut world = FiniteWorld::new(vars).expect("budgeted world fits");
    let res = [
        world.catalog_mut().intern("res0").unwrap(),
        world.catalog_mut().intern("res1").unwrap(),
    ];

    let mut is_action: Vec<bool> = (0..leaf_count).map(|_| rng.gen_bool(0.75)).collect();
    if !is_action.iter().any(|&a| a) {
        is_action[0] = true;
    }

    let mut leaves = Vec::with_capacity(leaf_count);
    for i in 0..leaf_count {
        let card = cards[i] as usize;
        let name = format!("L{i}");
        if is_action[i] {
            let transition: Vec<u32> = (0..card).map(|_| rng.gen_range(0..cards[i])).collect();
            let status: Vec<Status> = (0..card)
                .map(|_| match rng.gen_range(0..10) {
                    0..=4 => Status::Running,
                    5..=7 => Status::Success,
                    _ => Status::Failure,
                })
                .collect();
            let progress: Vec<Progress> = (0..card)
                .map(|_| Progress::new(rng.gen_range(0..=4) as f64 / 4.0).unwrap())
                .collect();
            let resources: Vec<ResourceSet> = (0..card)
                .map(|_| match rng.gen_range(0..4) {
                    0 => ResourceSet::new(),
                    1 => ResourceSet::singleton(res[0]),
                    2 => ResourceSet::singleton(res[1]),
                    _ => res.iter().copied().collect(),
                })
                .collect();
            world
                .add_action(
                    &name,
                    &[i],
                    move |x| {
                        let mut y = x.to_vec();
                        y[i] = transition[x[i] as usize];
                        y
                    },
                    move |x| status[x[i] as usize],
                    move |x| progress[x[i] as usize],
                    move |x| resources[x[i] as usize].clone(),
                )
                .expect("generated action respects its footprint");
            leaves.push((name, NodeKind::Action));
        } else {
            let truth: Vec<bool> = (0..card).map(|_| rng.gen_bool(0.5)).collect();
            world
                .add_condition(&name, &[i], move |x| truth[x[i] as usize])
                .expect("generated condition respects its footprint");
            leaves.push((name, NodeKind::Condition));
        }
    }

    let mut tree = if rng.gen_bool(0.5) && leaf_count >= 2 {
        // Gated root over two classical groups.
        let split = rng.gen_range(1..leaf_count);
        let left = classical_subtree(&mut rng, &leaves[..split]);
        let right = classical_subtree(&mut rng, &leaves[split..]);
        if rng.gen_bool(0.5) {
            NodeSpec::operator("", NodeKind::ParallelSync, vec![left, right])
        } else {
            let left = left.with_base_priority(rng.gen_range(0..4));
            let right = right.with_base_priority(rng.gen_range(0..4));
            NodeSpec::operator("", NodeKind::ParallelMutex, vec![left, right])
        }
    } else {
        classical_subtree(&mut rng, &leaves)
    };
    assign_path_ids(&mut tree, NodeId::root_path());

    let start_state = rng.gen_range(0..world.state_count());
    GeneratedCase {
        tree,
        world,
        start_state,
    }
}

fn classical_subtree(rng: &mut ChaCha8Rng, leaves: &[(String, NodeKind)]) -> NodeSpec {
    if leaves.len() == 1 {
        let (name, kind) = &leaves[0];
        return match kind {
            NodeKind::Action => NodeSpec::action("", name.clone()),
            _ => NodeSpec::condition("", name.clone()),
        };
    }
    let kind = match rng.gen_range(0..3) {
        0 => NodeKind::Sequence,
        1 => NodeKind::Fallback,
        _ => NodeKind::Parallel,
    };
    let children = if leaves.len() > 2 && rng.gen_bool(0.5) {
        let split = rng.gen_range(1..leaves.len());
        vec![
            classical_subtree(rng, &leaves[..split]),
            classical_subtree(rng, &leaves[split..]),
        ]
    } else {
        leaves
            .iter()
            .map(|(name, kind)| match kind {
                NodeKind::Action => NodeSpec::action("", name.clone()),
                _ => NodeSpec::condition("", name.clone()),
            })
            .collect()
    };
    let mut node = NodeSpec::operator("", kind, children);
    if kind == NodeKind::Parallel && rng.gen_bool(0.3) {
        let t = rng.gen_range(1..=node.children.len());
        node = node.with_threshold(t);
    }
    node
}

fn assign_path_ids(node: &mut NodeSpec, id: NodeId) {
    for (i, child) in node.children.iter_mut().enumerate() {
        assign_path_ids(child, id.child_path(i));
    }
    node.id = id;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::validate_tree;

    #[test]
    fn generated_cases_are_valid_and_bounded() {
        for seed in 0..25 {
            let case = generate_case(seed);
            assert!(case.world.state_count() <= 16);
            assert!(case.tree.node_count() <= 7, "seed {seed}");
            let report = validate_tree(&case.tree, &case.world.leaf_names());
            assert!(report.is_ok(), "seed {seed}: {report}");
            assert!(case.start_state < case.world.state_count());
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate_case(7);
        let b = generate_case(7);
        assert_eq!(a.tree, b.tree);
        assert_eq!(a.start_state, b.start_state);
        assert_eq!(a.world.state_count(), b.world.state_count());
    }
}
