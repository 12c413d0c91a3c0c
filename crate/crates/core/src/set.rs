//! Small fixed-capacity sets of node or cluster ids.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of elements a [`NodeSet`] can index.
pub const MAX_NODES: usize = 64;

/// A set of ids below [`MAX_NODES`], stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct NodeSet(pub u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_NODES);
        NodeSet(1u64 << i)
    }

    /// The set {0, 1, ..., n-1}.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        let mut s = NodeSet::EMPTY;
        for i in ids {
            s.insert(i);
        }
        s
    }

    /// Like [`NodeSet::from_ids`] but rejects ids at or above `n`.
    pub fn checked<I: IntoIterator<Item = usize>>(ids: I, n: usize) -> Result<Self> {
        let mut s = NodeSet::EMPTY;
        for i in ids {
            if i >= n || i >= MAX_NODES {
                return Err(Error::arg(format!("id {i} out of range (n = {n})")));
            }
            s.insert(i);
        }
        Ok(s)
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i < MAX_NODES && self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u64 << i);
    }

    #[inline]
    pub fn with(self, i: usize) -> Self {
        NodeSet(self.0 | 1u64 << i)
    }

    #[inline]
    pub fn without(self, i: usize) -> Self {
        NodeSet(self.0 & !(1u64 << i))
    }

    #[inline]
    pub fn union(self, o: NodeSet) -> Self {
        NodeSet(self.0 | o.0)
    }

    #[inline]
    pub fn intersect(self, o: NodeSet) -> Self {
        NodeSet(self.0 & o.0)
    }

    #[inline]
    pub fn minus(self, o: NodeSet) -> Self {
        NodeSet(self.0 & !o.0)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn intersects(self, o: NodeSet) -> bool {
        self.0 & o.0 != 0
    }

    #[inline]
    pub fn is_subset(self, o: NodeSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        NodeSet::from_ids(iter)
    }
}

impl IntoIterator for NodeSet {
    type Item = usize;
    type IntoIter = Iter;
    fn into_iter(self) -> Iter {
        self.iter()
    }
}

/// Ascending iterator over a [`NodeSet`].
pub struct Iter(u64);

impl Iterator for Iter {
    type Item = usize;
    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

impl Serialize for NodeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for NodeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(d)?;
        if let Some(&bad) = ids.iter().find(|&&i| i >= MAX_NODES) {
            return Err(serde::de::Error::custom(format!("id {bad} out of range")));
        }
        Ok(NodeSet::from_ids(ids))
    }
}

/// Subsets of `base` in order of increasing size, lexicographic within a size.
pub fn subsets_by_size(base: NodeSet) -> impl Iterator<Item = NodeSet> {
    let items = base.to_vec();
    let n = items.len();
    (0..=n).flat_map(move |k| {
        let items = items.clone();
        Combinations::new(n, k).map(move |c| c.iter().map(|&i| items[i]).collect())
    })
}

/// Lexicographic k-combinations of 0..n.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// All subsets of `base` as raw submask enumeration (unordered).
pub fn all_subsets(base: NodeSet) -> impl Iterator<Item = NodeSet> {
    let b = base.0;
    let mut cur = Some(0u64);
    std::iter::from_fn(move || {
        let c = cur?;
        cur = if c == b { None } else { Some((c.wrapping_sub(b)) & b) };
        Some(NodeSet(c))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_order_is_size_then_lex() {
        let base = NodeSet::from_ids([1, 4, 7]);
        let got: Vec<Vec<usize>> = subsets_by_size(base).map(|s| s.to_vec()).collect();
        assert_eq!(
            got,
            vec![
                vec![],
                vec![1],
                vec![4],
                vec![7],
                vec![1, 4],
                vec![1, 7],
                vec![4, 7],
                vec![1, 4, 7]
            ]
        );
    }

    #[test]
    fn all_subsets_count() {
        let base = NodeSet::from_ids([0, 3, 5, 9]);
        let v: Vec<_> = all_subsets(base).collect();
        assert_eq!(v.len(), 16);
        assert!(v.iter().all(|s| s.is_subset(base)));
        assert_eq!(all_subsets(NodeSet::EMPTY).count(), 1);
    }

    #[test]
    fn set_ops() {
        let a = NodeSet::from_ids([0, 2, 63]);
        assert!(a.contains(63));
        assert_eq!(a.len(), 3);
        assert_eq!(a.without(2).to_vec(), vec![0, 63]);
        assert_eq!(NodeSet::full(64).len(), 64);
        assert!(NodeSet::checked([64], 70).is_err());
    }
}
