//! Vector-clock race detection for non-atomic accesses under RC20, valid
//! given robustness of the atomics. Thread views track release events per
//! thread through the current/acquired/released scheme; non-atomic locations
//! carry last-write and last-read epoch vectors.

use crate::clocks::VectorClock;
use crate::ids::{LocId, Pos, ThreadId};
use crate::lang::Mode;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaceAccess {
    Read,
    Write,
    Rmw,
}

/// One endpoint of a reported race.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RaceEnd {
    pub thread: String,
    pub line: u32,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RaceReport {
    pub loc: String,
    pub access1: RaceEnd,
    pub access2: RaceEnd,
    /// Set when the same batch also found a robustness violation, which the
    /// completeness of this detector depends on.
    pub conditional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceState {
    pub current: Vec<VectorClock>,
    pub acquired: Vec<VectorClock>,
    pub released: Vec<VectorClock>,
    /// Per atomic location: the view released at its latest write.
    pub at_write: Vec<VectorClock>,
    /// Per non-atomic location: epochs of the last write/read per thread.
    pub na_write: Vec<VectorClock>,
    pub na_read: Vec<VectorClock>,
    last_write: Vec<BTreeMap<ThreadId, Pos>>,
    last_read: Vec<BTreeMap<ThreadId, Pos>>,
}

impl RaceState {
    pub fn new(n_threads: usize, n_locs: usize) -> Self {
        let mut current = vec![VectorClock::new(); n_threads];
        for (t, c) in current.iter_mut().enumerate() {
            c.set(ThreadId(t as u32), 1);
        }
        RaceState {
            current,
            acquired: vec![VectorClock::new(); n_threads],
            released: vec![VectorClock::new(); n_threads],
            at_write: vec![VectorClock::new(); n_locs],
            na_write: vec![VectorClock::new(); n_locs],
            na_read: vec![VectorClock::new(); n_locs],
            last_write: vec![BTreeMap::new(); n_locs],
            last_read: vec![BTreeMap::new(); n_locs],
        }
    }

    pub fn on_atomic(&mut self, tau: ThreadId, x: LocId, typ: RaceAccess, mode: Mode) {
        let t = tau.index();
        let xi = x.index();
        if matches!(typ, RaceAccess::Read | RaceAccess::Rmw) {
            if mode.at_least_acq() {
                let w = self.at_write[xi].clone();
                self.current[t].join_in_place(&w);
            } else {
                let w = self.at_write[xi].clone();
                self.acquired[t].join_in_place(&w);
            }
        }
        match typ {
            RaceAccess::Write => {
                self.at_write[xi] = if mode.at_least_rel() {
                    self.current[t].clone()
                } else {
                    self.released[t].clone()
                };
            }
            RaceAccess::Rmw => {
                let src = if mode.at_least_rel() {
                    self.current[t].clone()
                } else {
                    self.released[t].clone()
                };
                self.at_write[xi].join_in_place(&src);
            }
            RaceAccess::Read => {}
        }
        if matches!(typ, RaceAccess::Write | RaceAccess::Rmw) && mode.at_least_rel() {
            let e = self.current[t].get(tau) + 1;
            self.current[t].set(tau, e);
        }
    }

    pub fn on_fence(&mut self, tau: ThreadId, mode: Mode) {
        let t = tau.index();
        if mode.at_least_acq() {
            let a = self.acquired[t].clone();
            self.current[t].join_in_place(&a);
        }
        if mode.at_least_rel() {
            self.released[t] = self.current[t].clone();
            let e = self.current[t].get(tau) + 1;
            self.current[t].set(tau, e);
        }
    }

    /// Non-atomic access: check the happens-before asserts, record the
    /// access epoch, and report any races found (one per conflicting
    /// thread). Races are reports, not errors; execution continues.
    pub fn on_non_atomic(
        &mut self,
        tau: ThreadId,
        n: LocId,
        typ: RaceAccess,
        pos: Pos,
        thread_names: &[String],
        loc_names: &[String],
    ) -> Vec<RaceReport> {
        let t = tau.index();
        let ni = n.index();
        let mut reports = Vec::new();
        let me = RaceEnd {
            thread: thread_names[t].clone(),
            line: pos.line,
            kind: if typ == RaceAccess::Read {
                "na-read".into()
            } else {
                "na-write".into()
            },
        };
        let cur = &self.current[t];
        for (pi, epoch) in self.na_write[ni].iter() {
            if epoch > cur.get(pi) {
                if let Some(wpos) = self.last_write[ni].get(&pi) {
                    reports.push(RaceReport {
                        loc: loc_names[ni].clone(),
                        access1: RaceEnd {
                            thread: thread_names[pi.index()].clone(),
                            line: wpos.line,
                            kind: "na-write".into(),
                        },
                        access2: me.clone(),
                        conditional: false,
                    });
                }
            }
        }
        if typ != RaceAccess::Read {
            for (pi, epoch) in self.na_read[ni].iter() {
                if epoch > cur.get(pi) {
                    if let Some(rpos) = self.last_read[ni].get(&pi) {
                        reports.push(RaceReport {
                            loc: loc_names[ni].clone(),
                            access1: RaceEnd {
                                thread: thread_names[pi.index()].clone(),
                                line: rpos.line,
                                kind: "na-read".into(),
                            },
                            access2: me.clone(),
                            conditional: false,
                        });
                    }
                }
            }
        }
        let epoch = self.current[t].get(tau);
        if typ == RaceAccess::Read {
            self.na_read[ni].set(tau, epoch);
            self.last_read[ni].insert(tau, pos);
        } else {
            self.na_write[ni].set(tau, epoch);
            self.last_write[ni].insert(tau, pos);
        }
        reports
    }
}
