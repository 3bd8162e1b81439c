use std::fmt;

use fixedbitset::FixedBitSet;

/// Dense index of a state in `0..|Ω|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Subset of a state space of fixed width.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet {
    bits: FixedBitSet,
}

impl StateSet {
    pub fn empty(width: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(width),
        }
    }

    pub fn full(width: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(width);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_ids(width: usize, ids: impl IntoIterator<Item = StateId>) -> Self {
        let mut set = Self::empty(width);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// Panics if `id` is outside the set's width.
    pub fn insert(&mut self, id: StateId) -> bool {
        !self.bits.put(id.0)
    }

    pub fn remove(&mut self, id: StateId) {
        self.bits.set(id.0, false);
    }

    pub fn contains(&self, id: StateId) -> bool {
        self.bits.contains(id.0)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.bits.is_full()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn union_with(&mut self, other: &StateSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn complement(&self) -> StateSet {
        let mut out = self.clone();
        out.bits.toggle_range(..);
        out
    }

    /// Members in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.bits.ones().map(StateId)
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.bits.ones()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_set_algebra() {
        let a = StateSet::from_ids(5, [StateId(0), StateId(3)]);
        let b = StateSet::from_ids(5, [StateId(3), StateId(4)]);
        let u = a.union(&b);
        assert_eq!(
            u.iter().map(StateId::index).collect::<Vec<_>>(),
            vec![0, 3, 4]
        );
        assert!(a.is_subset(&u));
        assert!(!u.is_subset(&a));
        assert_eq!(u.complement().len(), 2);
        assert!(StateSet::full(5).is_full());
        assert!(StateSet::empty(5).is_empty());
        assert!(StateSet::full(0).is_full());
    }

    #[test]
    fn insert_reports_novelty() {
        let mut s = StateSet::empty(3);
        assert!(s.insert(StateId(1)));
        assert!(!s.insert(StateId(1)));
        s.remove(StateId(1));
        assert!(s.is_empty());
    }
}
