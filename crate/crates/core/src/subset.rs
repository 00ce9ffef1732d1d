use std::cmp::Ordering;
use std::fmt;

/// Largest ground set a [`Subset`] can index.
pub const MAX_ELEMENTS: usize = 64;

/// A subset of the ground set `{0, .., n-1}` stored as a bitmask.
///
/// Ordering is lexicographic on the ascending element sequence, so `{0} <
/// {0, 1} < {1}`; this is the tie-break used by the oracles.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_bits(bits: u64) -> Self {
        Subset(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_ELEMENTS, "element {i} out of range");
        Subset(1 << i)
    }

    /// The full ground set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ELEMENTS);
        if n == MAX_ELEMENTS {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_ELEMENTS && self.0 >> i & 1 == 1
    }

    #[must_use]
    pub fn with(self, i: usize) -> Self {
        Subset(self.0 | Self::singleton(i).0)
    }

    pub fn insert(&mut self, i: usize) {
        *self = self.with(i);
    }

    #[must_use]
    pub fn union(self, other: Subset) -> Self {
        Subset(self.0 | other.0)
    }

    #[must_use]
    pub fn difference(self, other: Subset) -> Self {
        Subset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True when every element is below `n`.
    pub fn within(self, n: usize) -> bool {
        self.is_subset_of(Subset::full(n))
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every subset of `self`, the empty set first.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let mask = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask {
                None
            } else {
                Some((cur.wrapping_sub(mask)) & mask)
            };
            Some(Subset(cur))
        })
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(Subset::EMPTY, Subset::with)
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_order() {
        let a: Subset = [0].into_iter().collect();
        let b: Subset = [0, 1].into_iter().collect();
        let c: Subset = [1].into_iter().collect();
        assert!(Subset::EMPTY < a && a < b && b < c);
    }

    #[test]
    fn subset_enumeration_counts() {
        let s: Subset = [1, 3, 4].into_iter().collect();
        let all: Vec<_> = s.subsets().collect();
        assert_eq!(all.len(), 8);
        assert!(all.iter().all(|x| x.is_subset_of(s)));
        assert_eq!(Subset::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn basic_ops() {
        let s = Subset::singleton(2).with(5);
        assert_eq!(s.to_vec(), vec![2, 5]);
        assert!(s.contains(5) && !s.contains(3));
        assert!(s.within(6) && !s.within(5));
        assert_eq!(Subset::full(3).difference(s).to_vec(), vec![0, 1]);
        assert_eq!(format!("{s:?}"), "{2, 5}");
    }
}
