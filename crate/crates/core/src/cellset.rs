//! Dense sets of grid cells.

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::grid::CellId;

/// A subset of a fixed cell domain `0..len`, stored as a bitset.
///
/// All binary operations require both operands to share the same domain size.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    bits: FixedBitSet,
}

impl CellSet {
    pub fn empty(len: usize) -> Self {
        Self { bits: FixedBitSet::with_capacity(len) }
    }

    pub fn full(len: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(len);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_cells<I: IntoIterator<Item = CellId>>(len: usize, cells: I) -> Self {
        let mut set = Self::empty(len);
        for c in cells {
            set.insert(c);
        }
        set
    }

    /// Size of the underlying domain (not the number of members).
    pub fn domain_len(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, cell: CellId) -> bool {
        self.bits.contains(cell.index())
    }

    pub fn insert(&mut self, cell: CellId) -> bool {
        !self.bits.put(cell.index())
    }

    pub fn remove(&mut self, cell: CellId) {
        self.bits.set(cell.index(), false);
    }

    pub fn iter(&self) -> impl Iterator<Item = CellId> + '_ {
        self.bits.ones().map(CellId::from)
    }

    pub fn union_with(&mut self, other: &CellSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &CellSet) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &CellSet) {
        self.bits.difference_with(&other.bits);
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    pub fn complement(&self) -> CellSet {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        CellSet { bits }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }
}

impl fmt::Debug for CellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.bits.ones()).finish()
    }
}
