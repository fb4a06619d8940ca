//! Timestamp-map lattices used by every analysis.
//!
//! Three clock kinds share the same sorted-pairs representation:
//! location clocks (keyed by location), vector clocks (keyed by thread),
//! and location-value clocks (keyed by critical (location, value) pairs,
//! with `-1` as the "never written" value).
//!
//! All three form join-semilattices: join is pointwise maximum, absent
//! keys read as the bottom element, and entries are monotone under every
//! update rule in the monitors.

use crate::ids::{LocId, ThreadId, Value};
use std::collections::BTreeSet;
use thiserror::Error;

/// Timestamps count writes; 64 bits, overflow not handled.
pub type Timestamp = u64;

/// Below this size, lookups scan linearly instead of binary-searching.
const LINEAR_SCAN_MAX: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClockError {
    #[error("key {loc:?}@{val:?} is outside the critical-pair set")]
    KeyOutsideCriticalSet { loc: LocId, val: Option<Value> },
}

/// A finite partial map from keys to timestamps, stored as sorted pairs.
/// Absent keys read as 0; the empty clock is the lattice bottom.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clock<K: Copy + Ord> {
    entries: Vec<(K, Timestamp)>,
}

pub type LocationClock = Clock<LocId>;
pub type VectorClock = Clock<ThreadId>;

impl<K: Copy + Ord> Clock<K> {
    pub fn new() -> Self {
        Clock {
            entries: Vec::new(),
        }
    }

    fn position(&self, key: K) -> Result<usize, usize> {
        if self.entries.len() <= LINEAR_SCAN_MAX {
            for (i, (k, _)) in self.entries.iter().enumerate() {
                if *k == key {
                    return Ok(i);
                }
                if *k > key {
                    return Err(i);
                }
            }
            Err(self.entries.len())
        } else {
            self.entries.binary_search_by_key(&key, |(k, _)| *k)
        }
    }

    /// Stored timestamp, or 0 when the key is absent.
    pub fn get(&self, key: K) -> Timestamp {
        match self.position(key) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Set the entry for `key` to exactly `ts` (dropping a zero entry).
    pub fn set(&mut self, key: K, ts: Timestamp) {
        match self.position(key) {
            Ok(i) => {
                if ts == 0 {
                    self.entries.remove(i);
                } else {
                    self.entries[i].1 = ts;
                }
            }
            Err(i) => {
                if ts != 0 {
                    self.entries.insert(i, (key, ts));
                }
            }
        }
    }

    /// Raise the entry for `key` to at least `ts`.
    pub fn set_max(&mut self, key: K, ts: Timestamp) {
        match self.position(key) {
            Ok(i) => self.entries[i].1 = self.entries[i].1.max(ts),
            Err(i) => {
                if ts != 0 {
                    self.entries.insert(i, (key, ts));
                }
            }
        }
    }

    /// Pointwise maximum; neither input is mutated.
    pub fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_in_place(other);
        out
    }

    /// In-place merge with identical semantics to `join`.
    pub fn join_in_place(&mut self, other: &Self) {
        let mut extra: Vec<(K, Timestamp)> = Vec::new();
        for &(k, ts) in &other.entries {
            match self.position(k) {
                Ok(i) => self.entries[i].1 = self.entries[i].1.max(ts),
                Err(_) => extra.push((k, ts)),
            }
        }
        if !extra.is_empty() {
            self.entries.extend(extra);
            self.entries.sort_unstable_by_key(|(k, _)| *k);
        }
    }

    /// Pointwise comparison: true iff `self(k) <= other(k)` for every key.
    pub fn leq(&self, other: &Self) -> bool {
        self.entries.iter().all(|&(k, ts)| ts <= other.get(k))
    }

    pub fn is_bottom(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (K, Timestamp)> + '_ {
        self.entries.iter().copied()
    }
}

/// Key of a location-value clock: a critical (location, value) pair, or the
/// per-location default key (`val: None`) covering values outside the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LvcKey {
    pub loc: LocId,
    pub val: Option<Value>,
}

/// The critical (location, value) pairs compiled from wait/BCAS/strong-CAS
/// instructions; fixes the key universe of every location-value clock.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CriticalPairs {
    pairs: BTreeSet<(LocId, Value)>,
    locs: BTreeSet<LocId>,
}

impl CriticalPairs {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (LocId, Value)>) -> Self {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        let locs = pairs.iter().map(|&(l, _)| l).collect();
        CriticalPairs { pairs, locs }
    }

    pub fn contains(&self, loc: LocId, val: Value) -> bool {
        self.pairs.contains(&(loc, val))
    }

    pub fn tracks_loc(&self, loc: LocId) -> bool {
        self.locs.contains(&loc)
    }

    /// Critical values tracked for one location.
    pub fn values_for(&self, loc: LocId) -> impl Iterator<Item = Value> + '_ {
        self.pairs
            .range((loc, Value::MIN)..=(loc, Value::MAX))
            .map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (LocId, Value)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn valid_key(&self, key: LvcKey) -> bool {
        match key.val {
            Some(v) => self.contains(key.loc, v),
            None => self.tracks_loc(key.loc),
        }
    }
}

/// Location-value clock: signed timestamps over the critical-pair keys plus
/// per-location default keys. Absent keys read as -1; once a key is set to a
/// timestamp >= 0 it never returns to -1 (set_max only).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValueClock {
    entries: Vec<(LvcKey, i64)>,
}

impl ValueClock {
    pub fn new() -> Self {
        ValueClock {
            entries: Vec::new(),
        }
    }

    fn position(&self, key: LvcKey) -> Result<usize, usize> {
        self.entries.binary_search_by(|(k, _)| k.cmp(&key))
    }

    /// Unchecked read: stored timestamp or -1.
    pub fn get(&self, key: LvcKey) -> i64 {
        match self.position(key) {
            Ok(i) => self.entries[i].1,
            Err(_) => -1,
        }
    }

    /// Checked read; a key outside the critical set is a caller bug.
    pub fn lookup(
        &self,
        pairs: &CriticalPairs,
        loc: LocId,
        val: Option<Value>,
    ) -> Result<i64, ClockError> {
        let key = LvcKey { loc, val };
        if !pairs.valid_key(key) {
            return Err(ClockError::KeyOutsideCriticalSet { loc, val });
        }
        Ok(self.get(key))
    }

    pub fn set_max(&mut self, key: LvcKey, ts: i64) {
        match self.position(key) {
            Ok(i) => self.entries[i].1 = self.entries[i].1.max(ts),
            Err(i) => {
                if ts > -1 {
                    self.entries.insert(i, (key, ts));
                }
            }
        }
    }

    pub fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_in_place(other);
        out
    }

    pub fn join_in_place(&mut self, other: &Self) {
        let mut extra: Vec<(LvcKey, i64)> = Vec::new();
        for &(k, ts) in &other.entries {
            match self.position(k) {
                Ok(i) => self.entries[i].1 = self.entries[i].1.max(ts),
                Err(_) => extra.push((k, ts)),
            }
        }
        if !extra.is_empty() {
            self.entries.extend(extra);
            self.entries.sort_unstable_by_key(|(a, _)| *a);
        }
    }

    pub fn leq(&self, other: &Self) -> bool {
        self.entries.iter().all(|&(k, ts)| ts <= other.get(k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (LvcKey, i64)> + '_ {
        self.entries.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lc(entries: &[(u32, u64)]) -> LocationClock {
        let mut c = LocationClock::new();
        for &(l, t) in entries {
            c.set(LocId(l), t);
        }
        c
    }

    #[test]
    fn join_disjoint_keys() {
        let a = lc(&[(1, 1)]);
        let b = lc(&[(2, 1)]);
        assert_eq!(a.join(&b), lc(&[(1, 1), (2, 1)]));
    }

    #[test]
    fn bottom_is_identity() {
        let a = lc(&[(1, 1), (2, 0)]);
        assert_eq!(a.join(&LocationClock::new()), a);
    }

    #[test]
    fn join_pointwise_max() {
        let a = lc(&[(1, 2), (2, 1)]);
        let b = lc(&[(1, 1), (2, 3)]);
        assert_eq!(a.join(&b), lc(&[(1, 2), (2, 3)]));
    }

    #[test]
    fn lookup_defaults_to_zero() {
        let a = lc(&[(1, 1)]);
        assert_eq!(a.get(LocId(1)), 1);
        assert_eq!(a.get(LocId(2)), 0);
        assert_eq!(LocationClock::new().get(LocId(1)), 0);
    }

    #[test]
    fn vc_leq() {
        let mut a = VectorClock::new();
        a.set(ThreadId(0), 1);
        let mut b = VectorClock::new();
        b.set(ThreadId(0), 1);
        b.set(ThreadId(1), 1);
        assert!(a.leq(&b));
        assert!(!b.leq(&a));
        let mut c = VectorClock::new();
        c.set(ThreadId(0), 2);
        let mut d = VectorClock::new();
        d.set(ThreadId(0), 1);
        assert!(!c.leq(&d));
        assert!(VectorClock::new().leq(&VectorClock::new()));
    }

    #[test]
    fn lvc_initializes_to_minus_one() {
        let pairs = CriticalPairs::from_pairs([(LocId(0), 2)]);
        let c = ValueClock::new();
        assert_eq!(c.lookup(&pairs, LocId(0), Some(2)), Ok(-1));
        assert_eq!(c.lookup(&pairs, LocId(0), None), Ok(-1));
        assert!(c.lookup(&pairs, LocId(1), None).is_err());
        assert!(c.lookup(&pairs, LocId(0), Some(3)).is_err());
    }

    #[test]
    fn lvc_set_then_lookup() {
        let pairs = CriticalPairs::from_pairs([(LocId(0), 2)]);
        let mut c = ValueClock::new();
        let key = LvcKey {
            loc: LocId(0),
            val: Some(2),
        };
        c.set_max(key, 0);
        assert_eq!(c.lookup(&pairs, LocId(0), Some(2)), Ok(0));
        c.set_max(key, -1);
        assert_eq!(c.get(key), 0, "never returns to -1");
    }

    #[test]
    fn linear_and_binary_lookup_agree() {
        let big: Vec<(u32, u64)> = (0..40).map(|i| (i * 3, i as u64 + 1)).collect();
        let c = lc(&big);
        for &(k, t) in &big {
            assert_eq!(c.get(LocId(k)), t);
            assert_eq!(c.get(LocId(k + 1)), 0);
        }
    }
}
