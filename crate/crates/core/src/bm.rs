//! Boolean-matrix robustness instrumentation for the release/acquire
//! fragment. Kept as a baseline and cross-validation target for the
//! location-clock engine; it rejects anything outside the fragment
//! (RMWs, fences, relaxed or non-atomic accesses).

use crate::ids::{LocId, ThreadId};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BmError {
    #[error("boolean-matrix instrumentation supports the release/acquire fragment only: {0}")]
    UnsupportedFragment(String),
    #[error("boolean-matrix instrumentation supports at most 64 locations")]
    TooManyLocations,
}

/// Set of locations as a bitmask over interned location ids.
pub type LocSet = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmAccess {
    Read,
    Write,
}

/// The five matrices: thread views of hb/hb_SC awareness, plus per-location
/// views released at the latest write (W) and accumulated over all accesses
/// of the location (M, which is how fr enters hb_SC).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BmState {
    n_locs: usize,
    pub t_hb: Vec<LocSet>,
    pub t_sc: Vec<LocSet>,
    pub w_hb: Vec<LocSet>,
    pub w_sc: Vec<LocSet>,
    pub m_sc: Vec<LocSet>,
}

impl BmState {
    pub fn new(n_threads: usize, n_locs: usize) -> Result<Self, BmError> {
        if n_locs > 64 {
            return Err(BmError::TooManyLocations);
        }
        let all: LocSet = if n_locs == 64 {
            !0
        } else {
            (1u64 << n_locs) - 1
        };
        Ok(BmState {
            n_locs,
            t_hb: vec![all; n_threads],
            t_sc: vec![all; n_threads],
            w_hb: (0..n_locs).map(|x| 1 << x).collect(),
            w_sc: (0..n_locs).map(|x| 1 << x).collect(),
            m_sc: (0..n_locs).map(|x| 1 << x).collect(),
        })
    }

    /// Apply the update columns for one access. All right-hand sides read
    /// the pre-access state.
    pub fn step(&mut self, tau: ThreadId, x: LocId, typ: BmAccess) {
        let t = tau.index();
        let xi = x.index();
        let bit: LocSet = 1 << xi;
        match typ {
            BmAccess::Read => {
                self.t_hb[t] |= self.w_hb[xi];
                self.t_sc[t] |= self.w_sc[xi];
                self.m_sc[xi] |= self.t_sc[t];
            }
            BmAccess::Write => {
                let t_hb_old = self.t_hb[t];
                let t_sc_old = self.t_sc[t];
                let m_sc_old = self.m_sc[xi];
                for pi in 0..self.t_hb.len() {
                    if pi != t {
                        self.t_hb[pi] &= !bit;
                        self.t_sc[pi] &= !bit;
                    }
                }
                self.t_hb[t] = t_hb_old | bit;
                self.t_sc[t] = t_sc_old | m_sc_old;
                for y in 0..self.n_locs {
                    if y != xi {
                        self.w_hb[y] &= !bit;
                        self.w_sc[y] &= !bit;
                        self.m_sc[y] &= !bit;
                    }
                }
                self.w_hb[xi] = t_hb_old | bit;
                self.w_sc[xi] = t_sc_old | m_sc_old;
                self.m_sc[xi] = m_sc_old | t_sc_old;
            }
        }
    }

    /// Invoked before the access is committed: a violation iff the thread is
    /// hb_SC-aware but not hb-aware of the latest write to `x`.
    pub fn check(&self, tau: ThreadId, x: LocId) -> bool {
        let bit: LocSet = 1 << x.index();
        self.t_sc[tau.index()] & bit != 0 && self.t_hb[tau.index()] & bit == 0
    }

    pub fn contains(set: LocSet, x: LocId) -> bool {
        set & (1 << x.index()) != 0
    }

    /// State dump for table-replay golden tests.
    pub fn dump(&self, thread_names: &[String], loc_names: &[String]) -> BmDump {
        let set = |s: LocSet| -> Vec<String> {
            (0..self.n_locs)
                .filter(|x| s & (1 << x) != 0)
                .map(|x| loc_names[x].clone())
                .collect()
        };
        let per_thread = |m: &[LocSet]| -> BTreeMap<String, Vec<String>> {
            m.iter()
                .enumerate()
                .map(|(t, s)| (thread_names[t].clone(), set(*s)))
                .collect()
        };
        let per_loc = |m: &[LocSet]| -> BTreeMap<String, Vec<String>> {
            m.iter()
                .enumerate()
                .map(|(x, s)| (loc_names[x].clone(), set(*s)))
                .collect()
        };
        BmDump {
            t_hb: per_thread(&self.t_hb),
            t_sc: per_thread(&self.t_sc),
            w_hb: per_loc(&self.w_hb),
            w_sc: per_loc(&self.w_sc),
            m_sc: per_loc(&self.m_sc),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct BmDump {
    #[serde(rename = "T_HB")]
    pub t_hb: BTreeMap<String, Vec<String>>,
    #[serde(rename = "T_SC")]
    pub t_sc: BTreeMap<String, Vec<String>>,
    #[serde(rename = "W_HB")]
    pub w_hb: BTreeMap<String, Vec<String>>,
    #[serde(rename = "W_SC")]
    pub w_sc: BTreeMap<String, Vec<String>>,
    #[serde(rename = "M_SC")]
    pub m_sc: BTreeMap<String, Vec<String>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1: ThreadId = ThreadId(0);
    const T2: ThreadId = ThreadId(1);
    const X1: LocId = LocId(0);
    const X2: LocId = LocId(1);

    fn set(m: &BmState, s: LocSet) -> Vec<u32> {
        (0..m.n_locs as u32).filter(|x| s & (1 << x) != 0).collect()
    }

    #[test]
    fn initial_state_is_maximal() {
        let m = BmState::new(2, 2).unwrap();
        assert_eq!(set(&m, m.t_hb[0]), vec![0, 1]);
        assert_eq!(set(&m, m.w_hb[0]), vec![0]);
        assert!(
            !m.check(T1, X1),
            "all sets maximal at init: any access is clear"
        );
    }

    #[test]
    fn read_of_untouched_location_changes_only_m_sc() {
        let mut m = BmState::new(2, 2).unwrap();
        let before = m.clone();
        m.step(T2, X2, BmAccess::Read);
        assert_eq!(m.t_hb, before.t_hb);
        assert_eq!(m.t_sc, before.t_sc);
        assert_eq!(m.w_hb, before.w_hb);
        assert_eq!(m.w_sc, before.w_sc);
        // the read joins T_SC(t2), which is maximal at init, into M_SC(x2)
        assert_eq!(set(&m, m.m_sc[1]), vec![0, 1]);
        assert_eq!(set(&m, m.m_sc[0]), vec![0]);
    }

    /// Replay the store-buffering run: t1 writes x1, t1 reads x2, t2 writes
    /// x2; every cell must match the reference table.
    #[test]
    fn sb_table_replay() {
        let mut m = BmState::new(2, 2).unwrap();

        m.step(T1, X1, BmAccess::Write);
        assert_eq!(set(&m, m.t_hb[0]), vec![0, 1]);
        assert_eq!(set(&m, m.t_hb[1]), vec![1]);
        assert_eq!(set(&m, m.w_hb[0]), vec![0, 1]);
        assert_eq!(set(&m, m.w_hb[1]), vec![1]);
        assert_eq!(set(&m, m.t_sc[0]), vec![0, 1]);
        assert_eq!(set(&m, m.t_sc[1]), vec![1]);
        assert_eq!(set(&m, m.w_sc[0]), vec![0, 1]);
        assert_eq!(set(&m, m.m_sc[0]), vec![0, 1]);

        m.step(T1, X2, BmAccess::Read);
        assert_eq!(
            set(&m, m.m_sc[1]),
            vec![0, 1],
            "read of x2 propagates T_SC(t1)"
        );
        assert_eq!(set(&m, m.t_hb[0]), vec![0, 1]);

        m.step(T2, X2, BmAccess::Write);
        assert_eq!(set(&m, m.t_hb[0]), vec![0]);
        assert_eq!(set(&m, m.t_hb[1]), vec![1]);
        assert_eq!(set(&m, m.w_hb[0]), vec![0]);
        assert_eq!(set(&m, m.w_hb[1]), vec![1]);
        assert_eq!(set(&m, m.t_sc[0]), vec![0]);
        assert_eq!(
            set(&m, m.t_sc[1]),
            vec![0, 1],
            "t2 gains x1 through M_SC(x2)"
        );
        assert_eq!(set(&m, m.w_sc[0]), vec![0]);
        assert_eq!(set(&m, m.w_sc[1]), vec![0, 1]);
        assert_eq!(set(&m, m.m_sc[0]), vec![0]);
        assert_eq!(set(&m, m.m_sc[1]), vec![0, 1]);

        assert!(m.check(T2, X1), "robustness violation before t2 reads x1");
        assert!(!m.check(T2, X2));
    }

    /// The fully sequential schedule of the store-buffering variant with
    /// trailing writes: BM stays clear at t2's read (the miss that motivates
    /// location clocks).
    #[test]
    fn sequential_double_write_run_is_missed() {
        let mut m = BmState::new(2, 2).unwrap();
        // t1: W x1; R x2; W x1
        m.step(T1, X1, BmAccess::Write);
        m.step(T1, X2, BmAccess::Read);
        m.step(T1, X1, BmAccess::Write);
        // t2: W x2
        m.step(T2, X2, BmAccess::Write);
        assert!(
            !m.check(T2, X1),
            "second write to x1 hides the witness from BMs"
        );
    }
}
