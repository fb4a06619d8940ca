//! The location-clock robustness monitor: SC clocks, store-only variants for
//! RMW support, RC20 happens-before view clocks, overwritten-value clocks,
//! fence handling, and the five violation checks.
//!
//! Each clock family comes in two flavors: one whose timestamps count every
//! write (RMWs included) and one counting plain stores only. Write-side
//! checks compare the store-only clocks so that an RMW at the top of the
//! modification order does not produce spurious reports: atomicity pins an
//! RMW to its immediate predecessor, so a new write cannot slip in below it.

use crate::clocks::{CriticalPairs, LocationClock, LvcKey, Timestamp, ValueClock};
use crate::ids::{LocId, ThreadId, Value};
use crate::lang::Mode;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LcError {
    #[error("non-atomic access reached the robustness monitor")]
    NonAtomicAccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessClass {
    Read,
    Write,
    Rmw,
}

impl AccessClass {
    fn is_write_like(self) -> bool {
        !matches!(self, AccessClass::Read)
    }
}

/// Which robustness check guards an access about to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// Plain loads and weak CAS.
    Read,
    /// Plain stores and FADD.
    Write,
    Wait(Value),
    Bcas(Value),
    StrongCas(Value),
}

/// A fired check: the two compared timestamps. `store_based` tells whether
/// the SC-side timestamp counts plain stores only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckHit {
    pub hb_ts: i64,
    pub sc_ts: i64,
    pub store_based: bool,
}

/// One SC-clock family: per-thread views plus per-location views released at
/// the latest write (acquired by readers) and accumulated over every access
/// of the location (acquired by writers; this is how fr enters hb_SC).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScFamily {
    pub thread: Vec<LocationClock>,
    pub at_write: Vec<LocationClock>,
    pub at_access: Vec<LocationClock>,
}

impl ScFamily {
    fn new(n_threads: usize, n_locs: usize) -> Self {
        ScFamily {
            thread: vec![LocationClock::new(); n_threads],
            at_write: vec![LocationClock::new(); n_locs],
            at_access: vec![LocationClock::new(); n_locs],
        }
    }

    fn update(&mut self, tau: usize, x: usize, class: AccessClass) {
        if class.is_write_like() {
            self.thread[tau].join_in_place(&self.at_access[x]);
            self.at_access[x] = self.thread[tau].clone();
            self.at_write[x] = self.thread[tau].clone();
        } else {
            self.thread[tau].join_in_place(&self.at_write[x]);
            self.at_access[x].join_in_place(&self.thread[tau]);
        }
    }
}

/// The overwritten-value analog of `ScFamily`, tracking for each critical
/// (location, value) pair the largest timestamp of a write of that value
/// that was overwritten before the view-holder's knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValFamily {
    pub thread: Vec<ValueClock>,
    pub at_write: Vec<ValueClock>,
    pub at_access: Vec<ValueClock>,
}

impl ValFamily {
    fn new(n_threads: usize, n_locs: usize) -> Self {
        ValFamily {
            thread: vec![ValueClock::new(); n_threads],
            at_write: vec![ValueClock::new(); n_locs],
            at_access: vec![ValueClock::new(); n_locs],
        }
    }

    fn update(&mut self, tau: usize, x: usize, class: AccessClass) {
        if class.is_write_like() {
            self.thread[tau].join_in_place(&self.at_access[x]);
            self.at_access[x] = self.thread[tau].clone();
            self.at_write[x] = self.thread[tau].clone();
        } else {
            self.thread[tau].join_in_place(&self.at_write[x]);
            self.at_access[x].join_in_place(&self.thread[tau]);
        }
    }
}

/// RC20 happens-before views: current, acquired (pending an acquire fence),
/// and released (published by relaxed stores), plus the per-location view
/// released at the latest write. `at_write[x](x)` is the write counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HbViews {
    pub current: Vec<LocationClock>,
    pub acquired: Vec<LocationClock>,
    pub released: Vec<LocationClock>,
    pub at_write: Vec<LocationClock>,
}

impl HbViews {
    fn new(n_threads: usize, n_locs: usize) -> Self {
        HbViews {
            current: vec![LocationClock::new(); n_threads],
            acquired: vec![LocationClock::new(); n_threads],
            released: vec![LocationClock::new(); n_threads],
            at_write: vec![LocationClock::new(); n_locs],
        }
    }

    /// `bump` is true when this family's write counter advances (all writes
    /// for the plain family, non-RMW writes for the store-only family).
    fn on_access(
        &mut self,
        tau: usize,
        x: usize,
        xid: LocId,
        class: AccessClass,
        mode: Mode,
        bump: bool,
    ) {
        if bump {
            let t = self.at_write[x].get(xid) + 1;
            self.at_write[x].set(xid, t);
        }
        let t = self.at_write[x].get(xid);
        self.current[tau].set_max(xid, t);
        self.acquired[tau].set_max(xid, t);
        if !class.is_write_like() || class == AccessClass::Rmw {
            self.acquired[tau].join_in_place(&self.at_write[x]);
            if mode.at_least_acq() {
                self.current[tau].join_in_place(&self.at_write[x]);
            }
        }
        match class {
            AccessClass::Write => {
                let keep = t;
                self.at_write[x] = if mode.at_least_rel() {
                    self.current[tau].clone()
                } else {
                    self.released[tau].clone()
                };
                self.at_write[x].set_max(xid, keep);
            }
            AccessClass::Rmw => {
                let src = if mode.at_least_rel() {
                    self.current[tau].clone()
                } else {
                    self.released[tau].clone()
                };
                self.at_write[x].join_in_place(&src);
            }
            AccessClass::Read => {}
        }
    }

    fn on_fence(&mut self, tau: usize, mode: Mode) {
        if mode.at_least_acq() {
            self.current[tau] = self.acquired[tau].clone();
        }
        if mode.at_least_rel() {
            self.released[tau] = self.current[tau].clone();
        }
    }
}

/// The complete instrumentation state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobustnessState {
    /// SC clocks over all-writes timestamps.
    pub sc: ScFamily,
    /// SC clocks over plain-store timestamps.
    pub sc_stores: ScFamily,
    /// hb views over all-writes timestamps.
    pub hb: HbViews,
    /// hb views over plain-store timestamps.
    pub hb_stores: HbViews,
    /// Overwritten-value clocks over all-writes timestamps.
    pub val: ValFamily,
    /// Overwritten-value clocks over plain-store timestamps.
    pub val_stores: ValFamily,
    pub pairs: CriticalPairs,
    /// Test-only switch: with value tracking off, wait falls back to the
    /// read check and BCAS/strong CAS to the write check.
    pub value_tracking: bool,
}

impl RobustnessState {
    pub fn new(n_threads: usize, n_locs: usize, pairs: CriticalPairs) -> Self {
        RobustnessState {
            sc: ScFamily::new(n_threads, n_locs),
            sc_stores: ScFamily::new(n_threads, n_locs),
            hb: HbViews::new(n_threads, n_locs),
            hb_stores: HbViews::new(n_threads, n_locs),
            val: ValFamily::new(n_threads, n_locs),
            val_stores: ValFamily::new(n_threads, n_locs),
            pairs,
            value_tracking: true,
        }
    }

    /// Instrumentation update for an atomic access. `prev` is the memory
    /// value of `x` immediately before the access. Update order is fixed:
    /// value clocks first (they need the pre-update write counters), then SC
    /// clocks, then hb views.
    pub fn on_access(
        &mut self,
        tau: ThreadId,
        x: LocId,
        class: AccessClass,
        mode: Mode,
        prev: Value,
    ) -> Result<(), LcError> {
        if mode == Mode::Na {
            return Err(LcError::NonAtomicAccess);
        }
        let t = tau.index();
        let xi = x.index();

        // Overwritten-value clocks: record the timestamp of the value being
        // overwritten, then propagate. Propagation runs on every atomic
        // access so knowledge travels through unrelated locations too; only
        // the recording step is specific to tracked locations.
        if class.is_write_like() && self.pairs.tracks_loc(x) {
            let key = if self.pairs.contains(x, prev) {
                LvcKey {
                    loc: x,
                    val: Some(prev),
                }
            } else {
                LvcKey { loc: x, val: None }
            };
            self.val.at_access[xi].set_max(key, self.sc.at_write[xi].get(x) as i64);
            if class == AccessClass::Write {
                self.val_stores.at_access[xi]
                    .set_max(key, self.sc_stores.at_write[xi].get(x) as i64);
            }
        }
        self.val.update(t, xi, class);
        self.val_stores.update(t, xi, class);

        // SC clocks: bump the write counter into the access view, then run
        // the shared update. The store-only family bumps on plain stores.
        if class.is_write_like() {
            let fresh = self.sc.at_write[xi].get(x) + 1;
            self.sc.at_access[xi].set_max(x, fresh);
        }
        self.sc.update(t, xi, class);
        if class == AccessClass::Write {
            let fresh = self.sc_stores.at_write[xi].get(x) + 1;
            self.sc_stores.at_access[xi].set_max(x, fresh);
        }
        self.sc_stores.update(t, xi, class);

        // hb views.
        self.hb
            .on_access(t, xi, x, class, mode, class.is_write_like());
        self.hb_stores
            .on_access(t, xi, x, class, mode, class == AccessClass::Write);
        Ok(())
    }

    /// Release/acquire fence; acquire leg first.
    pub fn on_fence(&mut self, tau: ThreadId, mode: Mode) {
        self.hb.on_fence(tau.index(), mode);
        self.hb_stores.on_fence(tau.index(), mode);
    }

    /// Robustness check for the access thread `tau` is about to perform.
    pub fn check(&self, tau: ThreadId, x: LocId, check: Check) -> Option<CheckHit> {
        let t = tau.index();
        let read_hit = || {
            let hb = self.hb.current[t].get(x) as i64;
            let sc = self.sc.thread[t].get(x) as i64;
            (hb < sc).then_some(CheckHit {
                hb_ts: hb,
                sc_ts: sc,
                store_based: false,
            })
        };
        let write_hit = || {
            let hb = self.hb_stores.current[t].get(x) as i64;
            let sc = self.sc_stores.thread[t].get(x) as i64;
            (hb < sc).then_some(CheckHit {
                hb_ts: hb,
                sc_ts: sc,
                store_based: true,
            })
        };
        match check {
            Check::Read => read_hit(),
            Check::Write => write_hit(),
            Check::Wait(v) => {
                if !self.value_tracking {
                    return read_hit();
                }
                let hb = self.hb.current[t].get(x) as i64;
                let val = self.val.thread[t].get(LvcKey {
                    loc: x,
                    val: Some(v),
                });
                (hb <= val).then_some(CheckHit {
                    hb_ts: hb,
                    sc_ts: val,
                    store_based: false,
                })
            }
            Check::Bcas(v) => {
                if !self.value_tracking {
                    return write_hit();
                }
                let hb = self.hb_stores.current[t].get(x) as i64;
                let val = self.val_stores.thread[t].get(LvcKey {
                    loc: x,
                    val: Some(v),
                });
                (hb <= val).then_some(CheckHit {
                    hb_ts: hb,
                    sc_ts: val,
                    store_based: true,
                })
            }
            Check::StrongCas(v) => {
                if !self.value_tracking {
                    return write_hit();
                }
                let hb_u = self.hb_stores.current[t].get(x) as i64;
                let val_u = self.val_stores.thread[t].get(LvcKey {
                    loc: x,
                    val: Some(v),
                });
                if hb_u <= val_u {
                    return Some(CheckHit {
                        hb_ts: hb_u,
                        sc_ts: val_u,
                        store_based: true,
                    });
                }
                let hb = self.hb.current[t].get(x) as i64;
                for u in self.pairs.values_for(x) {
                    if u == v {
                        continue;
                    }
                    let val = self.val.thread[t].get(LvcKey {
                        loc: x,
                        val: Some(u),
                    });
                    if hb <= val {
                        return Some(CheckHit {
                            hb_ts: hb,
                            sc_ts: val,
                            store_based: false,
                        });
                    }
                }
                let val = self.val.thread[t].get(LvcKey { loc: x, val: None });
                (hb <= val).then_some(CheckHit {
                    hb_ts: hb,
                    sc_ts: val,
                    store_based: false,
                })
            }
        }
    }

    /// Full state dump for replay golden tables.
    pub fn dump(&self, thread_names: &[String], loc_names: &[String]) -> LcDump {
        let lc = |c: &LocationClock| -> BTreeMap<String, Timestamp> {
            c.iter()
                .map(|(l, ts)| (loc_names[l.index()].clone(), ts))
                .collect()
        };
        let lvc = |c: &ValueClock| -> BTreeMap<String, i64> {
            c.iter()
                .map(|(k, ts)| {
                    let name = match k.val {
                        Some(v) => format!("{}@{}", loc_names[k.loc.index()], v),
                        None => loc_names[k.loc.index()].clone(),
                    };
                    (name, ts)
                })
                .collect()
        };
        let per_thread = |v: &[LocationClock]| -> BTreeMap<String, BTreeMap<String, Timestamp>> {
            v.iter()
                .enumerate()
                .map(|(t, c)| (thread_names[t].clone(), lc(c)))
                .collect()
        };
        let per_loc = |v: &[LocationClock]| -> BTreeMap<String, BTreeMap<String, Timestamp>> {
            v.iter()
                .enumerate()
                .map(|(x, c)| (loc_names[x].clone(), lc(c)))
                .collect()
        };
        let vper_thread = |v: &[ValueClock]| -> BTreeMap<String, BTreeMap<String, i64>> {
            v.iter()
                .enumerate()
                .map(|(t, c)| (thread_names[t].clone(), lvc(c)))
                .collect()
        };
        let vper_loc = |v: &[ValueClock]| -> BTreeMap<String, BTreeMap<String, i64>> {
            v.iter()
                .enumerate()
                .map(|(x, c)| (loc_names[x].clone(), lvc(c)))
                .collect()
        };
        LcDump {
            families: BTreeMap::from([
                ("T_SC".into(), per_thread(&self.sc.thread)),
                ("W_SC".into(), per_loc(&self.sc.at_write)),
                ("M_SC".into(), per_loc(&self.sc.at_access)),
                ("T_SC_U".into(), per_thread(&self.sc_stores.thread)),
                ("W_SC_U".into(), per_loc(&self.sc_stores.at_write)),
                ("M_SC_U".into(), per_loc(&self.sc_stores.at_access)),
                ("T_HB_cur".into(), per_thread(&self.hb.current)),
                ("T_HB_acq".into(), per_thread(&self.hb.acquired)),
                ("T_HB_rel".into(), per_thread(&self.hb.released)),
                ("W_HB".into(), per_loc(&self.hb.at_write)),
                ("T_HB_cur_U".into(), per_thread(&self.hb_stores.current)),
                ("T_HB_acq_U".into(), per_thread(&self.hb_stores.acquired)),
                ("T_HB_rel_U".into(), per_thread(&self.hb_stores.released)),
                ("W_HB_U".into(), per_loc(&self.hb_stores.at_write)),
            ]),
            value_families: BTreeMap::from([
                ("T_v".into(), vper_thread(&self.val.thread)),
                ("W_v".into(), vper_loc(&self.val.at_write)),
                ("M_v".into(), vper_loc(&self.val.at_access)),
                ("T_v_U".into(), vper_thread(&self.val_stores.thread)),
                ("W_v_U".into(), vper_loc(&self.val_stores.at_write)),
                ("M_v_U".into(), vper_loc(&self.val_stores.at_access)),
            ]),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct LcDump {
    pub families: BTreeMap<String, BTreeMap<String, BTreeMap<String, Timestamp>>>,
    pub value_families: BTreeMap<String, BTreeMap<String, BTreeMap<String, i64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1: ThreadId = ThreadId(0);
    const T2: ThreadId = ThreadId(1);
    const X1: LocId = LocId(0);
    const X2: LocId = LocId(1);

    fn fresh() -> RobustnessState {
        RobustnessState::new(2, 2, CriticalPairs::default())
    }

    /// The store-buffering run with release stores and acquire loads,
    /// matching the reference location-clock table cell by cell.
    #[test]
    fn sb_lc_table_replay() {
        let mut s = fresh();
        // t1: W x1
        s.on_access(T1, X1, AccessClass::Write, Mode::Rel, 0)
            .unwrap();
        assert_eq!(s.hb.current[0].get(X1), 1);
        assert_eq!(s.hb.at_write[0].get(X1), 1);
        assert_eq!(s.sc.thread[0].get(X1), 1);
        assert_eq!(s.sc.at_write[0].get(X1), 1);
        assert_eq!(s.sc.at_access[0].get(X1), 1);
        // t1: R x2 = 0
        s.on_access(T1, X2, AccessClass::Read, Mode::Acq, 0)
            .unwrap();
        assert_eq!(
            s.sc.at_access[1].get(X1),
            1,
            "M_SC(x2) learns the write to x1"
        );
        assert_eq!(s.sc.at_access[1].get(X2), 0);
        // t2: W x2
        s.on_access(T2, X2, AccessClass::Write, Mode::Rel, 0)
            .unwrap();
        assert_eq!(s.hb.current[1].get(X1), 0);
        assert_eq!(s.hb.current[1].get(X2), 1);
        assert_eq!(
            s.sc.thread[1].get(X1),
            1,
            "t2 learns the x1 write through M_SC(x2)"
        );
        assert_eq!(s.sc.thread[1].get(X2), 1);
        assert_eq!(s.sc.at_write[1].get(X1), 1);
        assert_eq!(s.sc.at_access[1].get(X2), 1);
        // before t2 reads x1: violation
        let hit = s.check(T2, X1, Check::Read).expect("violation");
        assert_eq!((hit.hb_ts, hit.sc_ts), (0, 1));
        assert!(s.check(T1, X1, Check::Read).is_none());
    }

    #[test]
    fn fence_legs() {
        let mut s = fresh();
        // t1 publishes x1 with a rel store; t2 reads it rlx: only the
        // acquired view learns the released content.
        s.on_access(T1, X1, AccessClass::Write, Mode::Rel, 0)
            .unwrap();
        s.on_access(T1, X2, AccessClass::Write, Mode::Rel, 0)
            .unwrap();
        s.on_access(T2, X2, AccessClass::Read, Mode::Rlx, 1)
            .unwrap();
        assert_eq!(s.hb.current[1].get(X1), 0);
        assert_eq!(s.hb.acquired[1].get(X1), 1);
        // fence(acq) copies acquired into current
        s.on_fence(T2, Mode::Acq);
        assert_eq!(s.hb.current[1].get(X1), 1);
        // fence(rel) copies current into released
        assert_eq!(s.hb.released[1].get(X1), 0);
        s.on_fence(T2, Mode::Rel);
        assert_eq!(s.hb.released[1].get(X1), 1);
    }

    #[test]
    fn acqrel_fence_does_acq_leg_first() {
        let mut s = fresh();
        s.on_access(T1, X1, AccessClass::Write, Mode::Rel, 0)
            .unwrap();
        s.on_access(T2, X1, AccessClass::Read, Mode::Rlx, 1)
            .unwrap();
        s.on_fence(T2, Mode::AcqRel);
        // released view holds what the acq leg just pulled into current
        assert_eq!(s.hb.released[1].get(X1), 1);
    }

    #[test]
    fn rlx_store_keeps_own_counter() {
        let mut s = fresh();
        s.on_access(T1, X1, AccessClass::Write, Mode::Rlx, 0)
            .unwrap();
        assert_eq!(
            s.hb.at_write[0].get(X1),
            1,
            "counter survives the released-view overwrite"
        );
        assert_eq!(s.hb_stores.at_write[0].get(X1), 1);
        s.on_access(T1, X1, AccessClass::Rmw, Mode::Rlx, 1).unwrap();
        assert_eq!(
            s.hb.at_write[0].get(X1),
            2,
            "RMW bumps the all-writes counter"
        );
        assert_eq!(
            s.hb_stores.at_write[0].get(X1),
            1,
            "store-only counter ignores RMWs"
        );
    }

    #[test]
    fn rejects_non_atomic_mode() {
        let mut s = fresh();
        assert_eq!(
            s.on_access(T1, X1, AccessClass::Read, Mode::Na, 0),
            Err(LcError::NonAtomicAccess)
        );
    }

    /// An RMW's timestamp enters the all-writes SC clocks but not the
    /// store-only ones, so a later read check fires while a write check
    /// stays quiet.
    #[test]
    fn rmw_timestamp_splits_read_and_write_checks() {
        let mut s = fresh();
        s.on_access(T1, X1, AccessClass::Rmw, Mode::AcqRel, 0)
            .unwrap();
        s.on_access(T1, X2, AccessClass::Read, Mode::Acq, 0)
            .unwrap();
        s.on_access(T2, X2, AccessClass::Write, Mode::Rel, 0)
            .unwrap();
        assert_eq!(s.sc.thread[1].get(X1), 1, "t2 learns the RMW timestamp");
        assert_eq!(
            s.sc_stores.thread[1].get(X1),
            0,
            "store-only clock carries only the init write"
        );
        assert!(
            s.check(T2, X1, Check::Read).is_some(),
            "a read of x1 would be stale"
        );
        assert!(
            s.check(T2, X1, Check::Write).is_none(),
            "a write cannot slip below the RMW"
        );
    }

    #[test]
    fn initial_reads_are_clear() {
        let s = fresh();
        assert!(s.check(T1, X1, Check::Read).is_none());
        assert!(s.check(T2, X2, Check::Write).is_none());
    }
}
