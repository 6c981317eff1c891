//! Resource symbols and sets.
//!
//! Resources are opaque interned tokens ("speaker", "wheels", ...). A node's
//! resource function reports the set of tokens it needs at the current state;
//! the mutex parallel operator grants ticks only to children whose sets are
//! disjoint from everything already granted in the same tick.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Interned handle for one resource token. Tokens are case-sensitive:
/// `"speaker"` and `"Speaker"` are distinct resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceId(u32);

impl ResourceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("resource token must be a nonempty string")]
pub struct EmptyToken;

/// Intern table mapping tokens to ids. Grows monotonically; interning the
/// same token twice yields the same id.
#[derive(Debug, Default, Clone)]
pub struct ResourceCatalog {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl ResourceCatalog {
    pub fn new() -> ResourceCatalog {
        ResourceCatalog::default()
    }

    pub fn intern(&mut self, token: &str) -> Result<ResourceId, EmptyToken> {
        if token.is_empty() {
            return Err(EmptyToken);
        }
        if let Some(&id) = self.index.get(token) {
            return Ok(ResourceId(id));
        }
        let id = self.names.len() as u32;
        self.names.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        Ok(ResourceId(id))
    }

    pub fn lookup(&self, token: &str) -> Option<ResourceId> {
        self.index.get(token).copied().map(ResourceId)
    }

    pub fn name(&self, id: ResourceId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A finite set of resource ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ResourceSet(BTreeSet<ResourceId>);

impl ResourceSet {
    pub fn new() -> ResourceSet {
        ResourceSet::default()
    }

    pub fn singleton(id: ResourceId) -> ResourceSet {
        ResourceSet(BTreeSet::from([id]))
    }

    pub fn insert(&mut self, id: ResourceId) {
        self.0.insert(id);
    }

    pub fn contains(&self, id: ResourceId) -> bool {
        self.0.contains(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn union(&self, other: &ResourceSet) -> ResourceSet {
        ResourceSet(self.0.union(&other.0).copied().collect())
    }

    pub fn union_with(&mut self, other: &ResourceSet) {
        self.0.extend(other.0.iter().copied());
    }

    pub fn intersection(&self, other: &ResourceSet) -> ResourceSet {
        ResourceSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn is_disjoint(&self, other: &ResourceSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ResourceId> + '_ {
        self.0.iter().copied()
    }

    /// Token names in id order, resolved against the catalog they were
    /// interned in.
    pub fn names<'a>(&self, catalog: &'a ResourceCatalog) -> Vec<&'a str> {
        self.iter().map(|id| catalog.name(id)).collect()
    }
}

impl FromIterator<ResourceId> for ResourceSet {
    fn from_iter<T: IntoIterator<Item = ResourceId>>(iter: T) -> ResourceSet {
        ResourceSet(iter.into_iter().collect())
    }
}

impl fmt::Display for ResourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "#{}", id.0)?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_idempotent() {
        let mut cat = ResourceCatalog::new();
        let a = cat.intern("speaker").unwrap();
        let b = cat.intern("speaker").unwrap();
        assert_eq!(a, b);
        assert_eq!(cat.len(), 1);
    }

    #[test]
    fn tokens_are_case_sensitive() {
        let mut cat = ResourceCatalog::new();
        let a = cat.intern("speaker").unwrap();
        let b = cat.intern("Speaker").unwrap();
        assert_ne!(a, b);
        assert_eq!(cat.len(), 2);
    }

    #[test]
    fn catalog_counts_distinct_tokens() {
        let mut cat = ResourceCatalog::new();
        cat.intern("speaker").unwrap();
        cat.intern("wheels").unwrap();
        cat.intern("speaker").unwrap();
        assert_eq!(cat.len(), 2);
        assert_eq!(cat.name(cat.lookup("wheels").unwrap()), "wheels");
    }

    #[test]
    fn empty_token_rejected() {
        let mut cat = ResourceCatalog::new();
        assert_eq!(cat.intern(""), Err(EmptyToken));
    }

    #[test]
    fn set_laws() {
        let mut cat = ResourceCatalog::new();
        let s = cat.intern("speaker").unwrap();
        let w = cat.intern("wheels").unwrap();
        let a: ResourceSet = [s, w].into_iter().collect();
        assert_eq!(a.union(&a), a);
        assert!(a.intersection(&ResourceSet::new()).is_empty());
        assert!(!a.is_disjoint(&ResourceSet::singleton(s)));
        assert!(ResourceSet::new().is_disjoint(&a));
    }
}
