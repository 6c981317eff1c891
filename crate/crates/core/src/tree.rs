//! Immutable tree descriptions and structural validation.

use std::collections::BTreeSet;
use std::fmt;

/// Tree-wide unique node identifier. Auto-generated ids are preorder paths
/// such as `"0.1.2"`; explicit ids from the DSL or builders may be anything.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> NodeId {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Path id of the `index`-th child of a node with this path id.
    pub fn child_path(&self, index: usize) -> NodeId {
        NodeId(format!("{}.{}", self.0, index))
    }

    pub fn root_path() -> NodeId {
        NodeId("0".to_owned())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> NodeId {
        NodeId(s.to_owned())
    }
}

/// The seven node kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Sequence,
    Fallback,
    Parallel,
    ParallelSync,
    ParallelMutex,
    Action,
    Condition,
}

impl NodeKind {
    pub fn is_leaf(self) -> bool {
        matches!(self, NodeKind::Action | NodeKind::Condition)
    }

    pub fn is_parallel(self) -> bool {
        matches!(
            self,
            NodeKind::Parallel | NodeKind::ParallelSync | NodeKind::ParallelMutex
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Sequence => "seq",
            NodeKind::Fallback => "fallback",
            NodeKind::Parallel => "parallel",
            NodeKind::ParallelSync => "parallel-sync",
            NodeKind::ParallelMutex => "parallel-mutex",
            NodeKind::Action => "action",
            NodeKind::Condition => "condition",
        }
    }
}

/// Immutable description of one node and (for operators) its children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub kind: NodeKind,
    pub children: Vec<NodeSpec>,
    /// Name binding to a registered leaf behavior. Leaves only.
    pub leaf_ref: Option<String>,
    /// Number of Success children required for a Parallel/ParallelSync node
    /// to report Success. Defaults to the child count when absent.
    pub success_threshold: Option<usize>,
    /// Base arbitration priority. Meaningful only on direct children of a
    /// ParallelMutex node.
    pub base_priority: Option<u32>,
}

impl NodeSpec {
    fn new(id: NodeId, kind: NodeKind) -> NodeSpec {
        NodeSpec {
            id,
            kind,
            children: Vec::new(),
            leaf_ref: None,
            success_threshold: None,
            base_priority: None,
        }
    }

    pub fn action(id: impl Into<String>, leaf_ref: impl Into<String>) -> NodeSpec {
        let mut n = NodeSpec::new(NodeId::new(id), NodeKind::Action);
        n.leaf_ref = Some(leaf_ref.into());
        n
    }

    pub fn condition(id: impl Into<String>, leaf_ref: impl Into<String>) -> NodeSpec {
        let mut n = NodeSpec::new(NodeId::new(id), NodeKind::Condition);
        n.leaf_ref = Some(leaf_ref.into());
        n
    }

    pub fn operator(id: impl Into<String>, kind: NodeKind, children: Vec<NodeSpec>) -> NodeSpec {
        let mut n = NodeSpec::new(NodeId::new(id), kind);
        n.children = children;
        n
    }

    pub fn with_threshold(mut self, threshold: usize) -> NodeSpec {
        self.success_threshold = Some(threshold);
        self
    }

    pub fn with_base_priority(mut self, base: u32) -> NodeSpec {
        self.base_priority = Some(base);
        self
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(NodeSpec::node_count)
            .sum::<usize>()
    }

    /// Preorder walk over this node and all descendants.
    pub fn preorder(&self) -> Vec<&NodeSpec> {
        let mut out = Vec::with_capacity(self.node_count());
        fn walk<'a>(n: &'a NodeSpec, out: &mut Vec<&'a NodeSpec>) {
            out.push(n);
            for c in &n.children {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn find(&self, id: &NodeId) -> Option<&NodeSpec> {
        self.preorder().into_iter().find(|n| &n.id == id)
    }

    /// Structural equality with defaults resolved: a threshold equal to the
    /// child count and a base priority of zero compare equal to their absent
    /// forms. The DSL's canonical form omits defaulted fields, so round-trip
    /// comparisons go through this rather than `==`.
    pub fn structurally_eq(&self, other: &NodeSpec) -> bool {
        if self.id != other.id
            || self.kind != other.kind
            || self.leaf_ref != other.leaf_ref
            || self.children.len() != other.children.len()
        {
            return false;
        }
        let norm_thr = |n: &NodeSpec| n.success_threshold.unwrap_or(n.children.len());
        let norm_pri = |n: &NodeSpec| n.base_priority.unwrap_or(0);
        if norm_thr(self) != norm_thr(other) || norm_pri(self) != norm_pri(other) {
            return false;
        }
        self.children
            .iter()
            .zip(&other.children)
            .all(|(a, b)| a.structurally_eq(b))
    }
}

/// One violated structural invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub node: NodeId,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.node, self.message)
    }
}

/// Every violated structural invariant found in a tree. Empty iff the tree
/// is runnable against the given leaf names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, node: &NodeId, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            node: node.clone(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a tree against a set of registered
/// leaf names. Pure: identical inputs yield identical reports.
///
/// Reported violations: duplicate ids, operators with no children, leaves
/// with children or without a leaf binding, thresholds out of range,
/// priorities outside mutex children, and unregistered leaf names.
pub fn validate_tree(spec: &NodeSpec, registered_leaves: &BTreeSet<String>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for node in spec.preorder() {
        if !seen.insert(node.id.clone()) {
            report.push(&node.id, "duplicate id");
        }
    }
    validate_node(spec, false, registered_leaves, &mut report);
    report
}

fn validate_node(
    node: &NodeSpec,
    is_mutex_child: bool,
    leaves: &BTreeSet<String>,
    report: &mut ValidationReport,
) {
    if node.kind.is_leaf() {
        if !node.children.is_empty() {
            report.push(&node.id, "leaf with children");
        }
        match &node.leaf_ref {
            None => report.push(&node.id, "leaf without behavior binding"),
            Some(name) if !leaves.contains(name) => {
                report.push(&node.id, format!("unregistered leaf behavior `{name}`"));
            }
            Some(_) => {}
        }
    } else {
        if node.children.is_empty() {
            report.push(&node.id, "empty operator");
        }
        if node.leaf_ref.is_some() {
            report.push(&node.id, "operator with leaf binding");
        }
    }
    if let Some(t) = node.success_threshold {
        if !matches!(node.kind, NodeKind::Parallel | NodeKind::ParallelSync) {
            report.push(&node.id, "success threshold on a non-parallel node");
        } else if t == 0 || t > node.children.len() {
            report.push(
                &node.id,
                format!(
                    "success threshold {t} out of range 1..={}",
                    node.children.len()
                ),
            );
        }
    }
    if node.base_priority.is_some() && !is_mutex_child {
        report.push(
            &node.id,
            "base priority outside a parallel-mutex child position",
        );
    }
    let mutex = node.kind == NodeKind::ParallelMutex;
    for child in &node.children {
        validate_node(child, mutex, leaves, report);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn minimal_valid_tree() {
        let tree = NodeSpec::action("0", "Navigate");
        let report = validate_tree(&tree, &names(&["Navigate"]));
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn empty_operator_reported() {
        let tree = NodeSpec::operator("0", NodeKind::Sequence, vec![]);
        let report = validate_tree(&tree, &names(&[]));
        assert!(report
            .issues
            .iter()
            .any(|i| i.node.as_str() == "0" && i.message.contains("empty operator")));
    }

    #[test]
    fn duplicate_id_reported() {
        let tree = NodeSpec::operator("n1", NodeKind::Sequence, vec![NodeSpec::action("n1", "Go")]);
        let report = validate_tree(&tree, &names(&["Go"]));
        assert!(report
            .issues
            .iter()
            .any(|i| i.message.contains("duplicate id")));
    }

    #[test]
    fn unregistered_leaf_reported() {
        let tree = NodeSpec::action("0", "Missing");
        let report = validate_tree(&tree, &names(&["Navigate"]));
        assert!(!report.is_ok());
        assert!(report.issues[0].message.contains("Missing"));
    }

    #[test]
    fn threshold_range_checked() {
        let tree = NodeSpec::operator("0", NodeKind::Parallel, vec![NodeSpec::action("0.0", "Go")])
            .with_threshold(2);
        let report = validate_tree(&tree, &names(&["Go"]));
        assert!(report
            .issues
            .iter()
            .any(|i| i.message.contains("out of range")));
    }

    #[test]
    fn priority_only_on_mutex_children() {
        let ok = NodeSpec::operator(
            "0",
            NodeKind::ParallelMutex,
            vec![NodeSpec::action("0.0", "Go").with_base_priority(3)],
        );
        assert!(validate_tree(&ok, &names(&["Go"])).is_ok());

        let bad = NodeSpec::operator(
            "0",
            NodeKind::Sequence,
            vec![NodeSpec::action("0.0", "Go").with_base_priority(3)],
        );
        assert!(!validate_tree(&bad, &names(&["Go"])).is_ok());
    }

    #[test]
    fn validation_is_pure() {
        let tree = NodeSpec::operator("0", NodeKind::Fallback, vec![]);
        let a = validate_tree(&tree, &names(&[]));
        let b = validate_tree(&tree, &names(&[]));
        assert_eq!(a, b);
    }
}
