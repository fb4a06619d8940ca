//! Graph-level characterizations of the instrumentation clocks.
//!
//! Every clock family maintained incrementally by the monitors has a closed
//! form over the execution graph built so far (a max or a cardinality over
//! events matching a relational pattern). This module recomputes those
//! closed forms from scratch; the interpreter's verify mode and the
//! correspondence test suites compare them against the incremental state,
//! and the oracle's witness search evaluates the checks directly on graphs.

use crate::clocks::CriticalPairs;
use crate::graph::{derive, EventId, ExecutionGraph, Rel, Rels};
use crate::ids::{LocId, ThreadId, Value};
use crate::lc::{Check, CheckHit};

pub struct GraphSem<'g> {
    pub g: &'g ExecutionGraph,
    pub rels: Rels,
    /// rf? ; hb? over atomic rf and RC20 hb.
    rc: Rel,
    /// hb? (RC20).
    hb_refl: Rel,
    /// hb_SC?.
    hb_sc_refl: Rel,
    /// mo ; hb_SC? (strict mo step first).
    mo_hb_sc: Rel,
    /// Immediate mo-successor of each write.
    imm_succ: Vec<Option<EventId>>,
    /// Release head to final chain read: [E^⊒rel]; ([F];po)?; rf+.
    relseq_read: Rel,
    /// Release head to chain write: [E^⊒rel]; ([F];po)?; rf* (through RMWs).
    relseq_write: Rel,
    ts: Vec<u64>,
    ts_store: Vec<u64>,
}

impl<'g> GraphSem<'g> {
    pub fn new(g: &'g ExecutionGraph) -> Self {
        let rels = derive(g);
        let n = g.n_events();
        let rc = rels.rf.reflexive().compose(&rels.hb.reflexive());
        let hb_refl = rels.hb.reflexive();
        let hb_sc_refl = rels.hb_sc.reflexive();
        let mo_hb_sc = rels.mo.compose(&hb_sc_refl);
        let mut imm_succ = vec![None; n];
        for order in &g.mo {
            for pair in order.windows(2) {
                imm_succ[pair[0]] = Some(pair[1]);
            }
        }

        let mut relseq_read = Rel::new(n);
        let mut relseq_write = Rel::new(n);
        for e0 in 0..n {
            let head = &g.events[e0];
            if head.is_init() || !head.mode().at_least_rel() {
                continue;
            }
            let mut chain_writes: Vec<EventId> = Vec::new();
            if head.is_write() {
                chain_writes.push(e0);
            } else if head.is_fence() {
                for w in 0..n {
                    if g.events[w].is_write()
                        && !g.events[w].is_init()
                        && g.events[w].loc().is_some_and(|l| g.is_atomic_loc(l))
                        && rels.po.get(e0, w)
                    {
                        chain_writes.push(w);
                    }
                }
            }
            let mut frontier = chain_writes.clone();
            while let Some(w) = frontier.pop() {
                relseq_write.set(e0, w);
                for r in g.readers_of(w) {
                    if !g.events[r].loc().is_some_and(|l| g.is_atomic_loc(l)) {
                        continue;
                    }
                    relseq_read.set(e0, r);
                    if g.events[r].is_rmw() {
                        frontier.push(r);
                    }
                }
            }
        }

        let mut ts = vec![0; n];
        let mut ts_store = vec![0; n];
        for w in 0..n {
            if g.events[w].is_write() {
                if let Ok((a, b)) = g.timestamp_of(w) {
                    ts[w] = a;
                    ts_store[w] = b;
                }
            }
        }
        GraphSem {
            g,
            rels,
            rc,
            hb_refl,
            hb_sc_refl,
            mo_hb_sc,
            imm_succ,
            relseq_read,
            relseq_write,
            ts,
            ts_store,
        }
    }

    fn ts_of(&self, w: EventId, stores: bool) -> u64 {
        if stores {
            self.ts_store[w]
        } else {
            self.ts[w]
        }
    }

    fn writes_to(&self, x: LocId) -> impl Iterator<Item = EventId> + '_ {
        let g = self.g;
        (0..g.n_events()).filter(move |&w| g.events[w].is_write() && g.events[w].loc() == Some(x))
    }

    fn thread_events(&self, tau: ThreadId) -> impl Iterator<Item = EventId> + '_ {
        let g = self.g;
        (0..g.n_events()).filter(move |&e| g.events[e].tid == Some(tau))
    }

    fn loc_events(&self, y: LocId) -> impl Iterator<Item = EventId> + '_ {
        let g = self.g;
        (0..g.n_events()).filter(move |&e| g.events[e].loc() == Some(y))
    }

    fn max_ts(&self, x: LocId, stores: bool, mut pred: impl FnMut(EventId) -> bool) -> u64 {
        self.writes_to(x)
            .filter(|&w| pred(w))
            .map(|w| self.ts_of(w, stores))
            .max()
            .unwrap_or(0)
    }

    // --- SC clock families ------------------------------------------------

    pub fn sc_thread(&self, tau: ThreadId, x: LocId, stores: bool) -> u64 {
        self.max_ts(x, stores, |w| {
            self.thread_events(tau).any(|e| self.hb_sc_refl.get(w, e))
        })
    }

    pub fn sc_at_write(&self, y: LocId, x: LocId, stores: bool) -> u64 {
        let wmax = self.g.wmax(y);
        self.max_ts(x, stores, |w| self.hb_sc_refl.get(w, wmax))
    }

    pub fn sc_at_access(&self, y: LocId, x: LocId, stores: bool) -> u64 {
        self.max_ts(x, stores, |w| {
            self.loc_events(y).any(|e| self.hb_sc_refl.get(w, e))
        })
    }

    // --- hb view families ---------------------------------------------------

    pub fn hb_current(&self, tau: ThreadId, x: LocId, stores: bool) -> u64 {
        self.max_ts(x, stores, |w| {
            self.thread_events(tau).any(|e| self.rc.get(w, e))
        })
    }

    pub fn hb_released(&self, tau: ThreadId, x: LocId, stores: bool) -> u64 {
        self.max_ts(x, stores, |w| {
            self.thread_events(tau).any(|e| {
                self.g.events[e].is_fence()
                    && self.g.events[e].mode().at_least_rel()
                    && self.rc.get(w, e)
            })
        })
    }

    pub fn hb_acquired(&self, tau: ThreadId, x: LocId, stores: bool) -> u64 {
        let n = self.g.n_events();
        self.max_ts(x, stores, |w| {
            self.thread_events(tau).any(|e| self.rc.get(w, e))
                || (0..n).any(|e0| {
                    self.rc.get(w, e0)
                        && self.thread_events(tau).any(|r| self.relseq_read.get(e0, r))
                })
        })
    }

    pub fn hb_at_write(&self, y: LocId, x: LocId, stores: bool) -> u64 {
        let n = self.g.n_events();
        let wmax = self.g.wmax(y);
        self.max_ts(x, stores, |w| {
            w == wmax || (0..n).any(|e0| self.rc.get(w, e0) && self.relseq_write.get(e0, wmax))
        })
    }

    // --- overwritten-value families ----------------------------------------

    fn value_writes(&self, x: LocId, v: Option<Value>, pairs: &CriticalPairs) -> Vec<EventId> {
        self.writes_to(x)
            .filter(|&w| {
                let written = self.g.events[w].val_written().unwrap();
                match v {
                    Some(v) => written == v,
                    // default key: values outside the critical set for x
                    None => !pairs.contains(x, written),
                }
            })
            .collect()
    }

    /// An overwritten value stays readable by a new RMW only while the
    /// overwriting write is a plain store: an RMW immediately above it is
    /// pinned there by atomicity and blocks any further RMW reader. The
    /// store-only family therefore tracks values through non-RMW immediate
    /// overwrites only; the plain family tracks any overwrite (an hb_SC path
    /// from any mo-later write factors through the immediate successor).
    fn val_max(&self, writes: &[EventId], stores: bool, targets: &[EventId]) -> i64 {
        writes
            .iter()
            .filter(|&&w| {
                if stores {
                    let Some(s) = self.imm_succ[w] else {
                        return false;
                    };
                    !self.g.events[s].is_rmw() && targets.iter().any(|&e| self.hb_sc_refl.get(s, e))
                } else {
                    targets.iter().any(|&e| self.mo_hb_sc.get(w, e))
                }
            })
            .map(|&w| self.ts_of(w, stores) as i64)
            .max()
            .unwrap_or(-1)
    }

    pub fn val_thread(
        &self,
        tau: ThreadId,
        x: LocId,
        v: Option<Value>,
        pairs: &CriticalPairs,
        stores: bool,
    ) -> i64 {
        let writes = self.value_writes(x, v, pairs);
        let targets: Vec<EventId> = self.thread_events(tau).collect();
        self.val_max(&writes, stores, &targets)
    }

    pub fn val_at_write(
        &self,
        y: LocId,
        x: LocId,
        v: Option<Value>,
        pairs: &CriticalPairs,
        stores: bool,
    ) -> i64 {
        let writes = self.value_writes(x, v, pairs);
        self.val_max(&writes, stores, &[self.g.wmax(y)])
    }

    pub fn val_at_access(
        &self,
        y: LocId,
        x: LocId,
        v: Option<Value>,
        pairs: &CriticalPairs,
        stores: bool,
    ) -> i64 {
        let writes = self.value_writes(x, v, pairs);
        let targets: Vec<EventId> = self.loc_events(y).collect();
        self.val_max(&writes, stores, &targets)
    }

    // --- race-detection vector clocks ---------------------------------------

    fn rel_events_of(&self, pi: ThreadId) -> impl Iterator<Item = EventId> + '_ {
        let g = self.g;
        (0..g.n_events())
            .filter(move |&e| g.events[e].tid == Some(pi) && g.events[e].mode().at_least_rel())
    }

    pub fn race_current(&self, tau: ThreadId, pi: ThreadId) -> u64 {
        let count = self
            .rel_events_of(pi)
            .filter(|&e1| self.thread_events(tau).any(|e| self.hb_refl.get(e1, e)))
            .count() as u64;
        count + u64::from(pi == tau)
    }

    /// Release events of `pi` that happen-before one specific event: the t2
    /// quantity of the race soundness/completeness statements.
    pub fn race_rel_before_event(&self, e: EventId, pi: ThreadId) -> u64 {
        let count = self
            .rel_events_of(pi)
            .filter(|&e1| self.hb_refl.get(e1, e))
            .count() as u64;
        count + u64::from(self.g.events[e].tid == Some(pi))
    }

    pub fn race_released(&self, tau: ThreadId, pi: ThreadId) -> u64 {
        self.rel_events_of(pi)
            .filter(|&e1| {
                self.thread_events(tau).any(|f| {
                    self.g.events[f].is_fence()
                        && self.g.events[f].mode().at_least_rel()
                        && self.hb_refl.get(e1, f)
                })
            })
            .count() as u64
    }

    pub fn race_acquired(&self, tau: ThreadId, pi: ThreadId) -> u64 {
        let n = self.g.n_events();
        self.rel_events_of(pi)
            .filter(|&e1| {
                (0..n).any(|e0| {
                    self.hb_refl.get(e1, e0)
                        && self.thread_events(tau).any(|r| {
                            self.g.events[r].is_read()
                                && !self.g.events[r].mode().at_least_acq()
                                && self.relseq_read.get(e0, r)
                        })
                })
            })
            .count() as u64
    }

    pub fn race_at_write(&self, x: LocId, pi: ThreadId) -> u64 {
        let n = self.g.n_events();
        let wmax = self.g.wmax(x);
        self.rel_events_of(pi)
            .filter(|&e1| {
                (0..n).any(|e0| self.hb_refl.get(e1, e0) && self.relseq_write.get(e0, wmax))
            })
            .count() as u64
    }

    /// Release events of `pi` po-before a write of `n`, plus one if `pi` has
    /// written `n`: the t1 quantity of the WR/WW race statements.
    pub fn race_na_write(&self, n_loc: LocId, pi: ThreadId) -> u64 {
        let has_write = self
            .writes_to(n_loc)
            .any(|w| self.g.events[w].tid == Some(pi));
        let count = self
            .rel_events_of(pi)
            .filter(|&e1| {
                self.writes_to(n_loc)
                    .any(|w| !self.g.events[w].is_init() && self.rels.po.get(e1, w))
            })
            .count() as u64;
        count + u64::from(has_write)
    }

    pub fn race_na_read(&self, n_loc: LocId, pi: ThreadId) -> u64 {
        let g = self.g;
        let reads: Vec<EventId> = (0..g.n_events())
            .filter(|&e| {
                g.events[e].is_read() && !g.events[e].is_write() && g.events[e].loc() == Some(n_loc)
            })
            .collect();
        let has_read = reads.iter().any(|&r| g.events[r].tid == Some(pi));
        let count = self
            .rel_events_of(pi)
            .filter(|&e1| reads.iter().any(|&r| self.rels.po.get(e1, r)))
            .count() as u64;
        count + u64::from(has_read)
    }

    // --- witness conditions --------------------------------------------------

    /// The robustness check evaluated from the graph instead of the
    /// incremental clocks; an extended non-robustness witness exists at this
    /// configuration exactly when it fires.
    pub fn graph_check(
        &self,
        tau: ThreadId,
        x: LocId,
        check: Check,
        pairs: &CriticalPairs,
        value_tracking: bool,
    ) -> Option<CheckHit> {
        let read_hit = || {
            let hb = self.hb_current(tau, x, false) as i64;
            let sc = self.sc_thread(tau, x, false) as i64;
            (hb < sc).then_some(CheckHit {
                hb_ts: hb,
                sc_ts: sc,
                store_based: false,
            })
        };
        let write_hit = || {
            let hb = self.hb_current(tau, x, true) as i64;
            let sc = self.sc_thread(tau, x, true) as i64;
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
                if !value_tracking {
                    return read_hit();
                }
                let hb = self.hb_current(tau, x, false) as i64;
                let val = self.val_thread(tau, x, Some(v), pairs, false);
                (hb <= val).then_some(CheckHit {
                    hb_ts: hb,
                    sc_ts: val,
                    store_based: false,
                })
            }
            Check::Bcas(v) => {
                if !value_tracking {
                    return write_hit();
                }
                let hb = self.hb_current(tau, x, true) as i64;
                let val = self.val_thread(tau, x, Some(v), pairs, true);
                (hb <= val).then_some(CheckHit {
                    hb_ts: hb,
                    sc_ts: val,
                    store_based: true,
                })
            }
            Check::StrongCas(v) => {
                if !value_tracking {
                    return write_hit();
                }
                let hb_u = self.hb_current(tau, x, true) as i64;
                let val_u = self.val_thread(tau, x, Some(v), pairs, true);
                if hb_u <= val_u {
                    return Some(CheckHit {
                        hb_ts: hb_u,
                        sc_ts: val_u,
                        store_based: true,
                    });
                }
                let hb = self.hb_current(tau, x, false) as i64;
                for u in pairs.values_for(x) {
                    if u == v {
                        continue;
                    }
                    let val = self.val_thread(tau, x, Some(u), pairs, false);
                    if hb <= val {
                        return Some(CheckHit {
                            hb_ts: hb,
                            sc_ts: val,
                            store_based: false,
                        });
                    }
                }
                let val = self.val_thread(tau, x, None, pairs, false);
                (hb <= val).then_some(CheckHit {
                    hb_ts: hb,
                    sc_ts: val,
                    store_based: false,
                })
            }
        }
    }

    /// Standard (non-predictive) non-robustness witness: the check fires
    /// with the thread hb_SC-aware of the globally latest write to `x` yet
    /// hb-unaware of it. Detecting stale views of mo-earlier writes instead
    /// is what makes the extended variant predictive.
    pub fn standard_witness(
        &self,
        tau: ThreadId,
        x: LocId,
        check: Check,
        pairs: &CriticalPairs,
        value_tracking: bool,
    ) -> bool {
        let Some(hit) = self.graph_check(tau, x, check, pairs, value_tracking) else {
            return false;
        };
        let s = hit.store_based;
        self.sc_thread(tau, x, s) == self.sc_at_write(x, x, s)
            && self.hb_current(tau, x, s) < self.hb_at_write(x, x, s)
    }
}
