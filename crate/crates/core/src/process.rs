//! Process identifiers and compact process sets.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest system size representable by [`ProcessSet`].
pub const MAX_PROCESSES: usize = 64;

/// A process index in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ProcessId {
    fn from(i: usize) -> Self {
        ProcessId(i as u32)
    }
}

impl fmt::Display for ProcessId {
    // 1-based, matching the usual p1..pn naming.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0 + 1)
    }
}

/// A set of processes stored as a 64-bit mask.
///
/// Ordering is lexicographic on the sorted member list, so `{0, 3} < {1}`
/// and `{} < {0}`. All tie-breaking in the crate relies on this order.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ProcessSet(u64);

impl ProcessSet {
    pub const EMPTY: ProcessSet = ProcessSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ProcessSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// All processes `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PROCESSES);
        if n == 64 {
            ProcessSet(u64::MAX)
        } else {
            ProcessSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(p: ProcessId) -> Self {
        ProcessSet(1u64 << p.0)
    }

    pub fn contains(self, p: ProcessId) -> bool {
        p.index() < MAX_PROCESSES && self.0 & (1u64 << p.0) != 0
    }

    pub fn insert(&mut self, p: ProcessId) {
        self.0 |= 1u64 << p.0;
    }

    pub fn remove(&mut self, p: ProcessId) {
        self.0 &= !(1u64 << p.0);
    }

    pub fn with(self, p: ProcessId) -> Self {
        ProcessSet(self.0 | (1u64 << p.0))
    }

    pub fn without(self, p: ProcessId) -> Self {
        ProcessSet(self.0 & !(1u64 << p.0))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ProcessSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ProcessSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ProcessSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Lowest member, if any.
    pub fn first(self) -> Option<ProcessId> {
        (self.0 != 0).then(|| ProcessId(self.0.trailing_zeros()))
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = ProcessId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros();
            bits &= bits - 1;
            Some(ProcessId(i))
        })
    }

    pub fn to_vec(self) -> Vec<ProcessId> {
        self.iter().collect()
    }

    /// Every subset of `self`, in increasing bit-pattern order.
    pub fn subsets(self) -> impl Iterator<Item = ProcessSet> {
        let full = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(ProcessSet(cur))
        })
    }
}

impl FromIterator<ProcessId> for ProcessSet {
    fn from_iter<I: IntoIterator<Item = ProcessId>>(iter: I) -> Self {
        let mut s = ProcessSet::EMPTY;
        for p in iter {
            s.insert(p);
        }
        s
    }
}

impl PartialOrd for ProcessSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ProcessSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.0)).finish()
    }
}

impl fmt::Display for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

// Serialized as a sorted list of 0-based indices.
impl Serialize for ProcessSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(|p| p.0))
    }
}

impl<'de> Deserialize<'de> for ProcessSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<u32>::deserialize(deserializer)?;
        let mut set = ProcessSet::EMPTY;
        for id in ids {
            if id as usize >= MAX_PROCESSES {
                return Err(serde::de::Error::custom(format!(
                    "process id {id} exceeds the {MAX_PROCESSES}-process limit"
                )));
            }
            set.insert(ProcessId(id));
        }
        Ok(set)
    }
}
