//! SC interpreter with pluggable schedulers.
//!
//! Simulation is single-threaded with explicit scheduling, one DSL
//! instruction per step. The interpreter drives the location-clock monitor,
//! the race detector, and optionally the boolean-matrix baseline, and
//! side-builds the execution graph for correspondence checks and reports.
//!
//! Robustness checks are evaluated against every thread's pending atomic
//! access after every committed step, so a violation surfaces as soon as
//! some thread is "about to access" offendingly, including threads blocked
//! on a wait/BCAS, which stay at their access without ever committing it.

use crate::bm::{BmAccess, BmDump, BmError, BmState};
use crate::clocksem::GraphSem;
use crate::graph::{check_consistency_sc, Event, ExecutionGraph, Label};
use crate::ids::{LocId, Pos, ThreadId, Value};
use crate::lang::{
    self, AccessDesc, AccessEffect, CheckKind, ExecError, FlatOp, FlatThread, Mode, Pending,
    Program, ThreadState,
};
use crate::lc::{AccessClass, Check, CheckHit, LcDump, LcError, RobustnessState};
use crate::race::{RaceAccess, RaceReport, RaceState};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Lc(#[from] LcError),
    #[error(transparent)]
    Bm(#[from] BmError),
    #[error("trace replay failed: {0}")]
    Trace(String),
    #[error("internal verification failed: {0}")]
    Verify(String),
}

#[derive(Debug, Clone)]
pub struct Options {
    pub loop_bound: u32,
    /// Run the boolean-matrix baseline alongside the location clocks
    /// (release/acquire-fragment programs only).
    pub bm: bool,
    pub continue_on_violation: bool,
    /// Test-only switch for the overwritten-value clocks.
    pub value_tracking: bool,
    /// Recompute every clock family from the side graph after each step and
    /// compare; also asserts SC-consistency of the side graph. Slow.
    pub verify: bool,
    /// Exhaustive-exploration node budget.
    pub node_budget: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            loop_bound: 16,
            bm: false,
            continue_on_violation: false,
            value_tracking: true,
            verify: false,
            node_budget: 10_000_000,
        }
    }
}

/// A program compiled for execution: flattened threads plus critical pairs.
pub struct Compiled {
    pub program: Program,
    pub flats: Vec<FlatThread>,
    pub pairs: crate::clocks::CriticalPairs,
}

impl Compiled {
    pub fn new(program: Program) -> Self {
        let flats = program.threads.iter().map(lang::flatten).collect();
        let pairs = program.critical_pairs();
        Compiled {
            program,
            flats,
            pairs,
        }
    }

    pub fn thread_names(&self) -> Vec<String> {
        self.program
            .threads
            .iter()
            .map(|t| t.name.clone())
            .collect()
    }

    pub fn loc_names(&self) -> Vec<String> {
        self.program.locs.iter().map(|l| l.name.clone()).collect()
    }

    /// The boolean-matrix baseline handles only the release/acquire
    /// fragment: atomic loads and stores with acq/rel modes.
    pub fn check_ra_fragment(&self) -> Result<(), BmError> {
        for flat in &self.flats {
            for op in &flat.ops {
                let bad = match op {
                    FlatOp::Load { mode, .. } => (*mode != Mode::Acq).then_some("relaxed load"),
                    FlatOp::Store { mode, .. } => (*mode != Mode::Rel).then_some("relaxed store"),
                    FlatOp::Fadd { .. } => Some("fadd"),
                    FlatOp::CasWeak { .. } | FlatOp::CasStrong { .. } => Some("cas"),
                    FlatOp::Bcas { .. } => Some("bcas"),
                    FlatOp::Wait { .. } => Some("wait"),
                    FlatOp::Fence { .. } => Some("fence"),
                    FlatOp::NaStore { .. } | FlatOp::NaLoad { .. } => Some("non-atomic access"),
                    _ => None,
                };
                if let Some(what) = bad {
                    return Err(BmError::UnsupportedFragment(what.to_string()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TraceStep {
    pub thread: String,
    pub pc: usize,
    pub event: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Violation {
    pub engine: String,
    pub kind: String,
    pub thread: String,
    pub loc: String,
    pub access: String,
    #[serde(rename = "hbTs")]
    pub hb_ts: Option<i64>,
    #[serde(rename = "scTs")]
    pub sc_ts: Option<i64>,
    #[serde(rename = "sourceLine")]
    pub source_line: u32,
    #[serde(rename = "staleWriteEvent")]
    pub stale_write_event: Option<usize>,
    #[serde(rename = "staleWriteLine")]
    pub stale_write_line: Option<u32>,
    pub schedule: Vec<TraceStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    Completed,
    Deadlock,
    Aborted,
    TraceEnded,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub violations: Vec<Violation>,
    pub races: Vec<RaceReport>,
    #[serde(rename = "finalMemory")]
    pub final_memory: BTreeMap<String, Value>,
    #[serde(rename = "boundExhausted")]
    pub bound_exhausted: Vec<String>,
    pub trace: Vec<TraceStep>,
    #[serde(skip)]
    pub graph: ExecutionGraph,
}

pub enum Scheduler {
    RoundRobin,
    Random(Box<ChaCha8Rng>),
    Fixed { steps: Vec<usize>, at: usize },
}

impl Scheduler {
    pub fn random(seed: u64) -> Self {
        Scheduler::Random(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn fixed(steps: Vec<usize>) -> Self {
        Scheduler::Fixed { steps, at: 0 }
    }

    /// Pick among runnable thread indices. `None` means a fixed trace is
    /// exhausted and the run should stop.
    fn pick(&mut self, runnable: &[usize], last: usize) -> Result<Option<usize>, InterpError> {
        match self {
            Scheduler::RoundRobin => Ok(Some(
                runnable
                    .iter()
                    .copied()
                    .find(|&t| t > last)
                    .unwrap_or(runnable[0]),
            )),
            // Seeded-random scheduling is run-to-block: the current thread
            // keeps running until it blocks or finishes, and the successor is
            // drawn uniformly. Involuntary preemption of these tiny threads
            // is what an OS scheduler essentially never does either.
            Scheduler::Random(rng) => {
                if runnable.contains(&last) {
                    return Ok(Some(last));
                }
                Ok(Some(*runnable.choose(rng).expect("nonempty")))
            }
            Scheduler::Fixed { steps, at } => {
                if *at >= steps.len() {
                    return Ok(None);
                }
                let t = steps[*at];
                *at += 1;
                if !runnable.contains(&t) {
                    return Err(InterpError::Trace(format!(
                        "step {}: thread {t} is not runnable",
                        *at - 1
                    )));
                }
                Ok(Some(t))
            }
        }
    }
}

/// Full simulation state; cheap enough to clone for exhaustive exploration.
#[derive(Clone)]
pub struct Machine<'c> {
    c: &'c Compiled,
    opts: Options,
    pub memory: Vec<Value>,
    pub threads: Vec<ThreadState>,
    serials: Vec<u32>,
    pub graph: ExecutionGraph,
    pub event_pos: Vec<Option<Pos>>,
    pub lc: RobustnessState,
    pub race: RaceState,
    pub bm: Option<BmState>,
    pub trace: Vec<TraceStep>,
    pub violations: Vec<Violation>,
    pub races: Vec<RaceReport>,
    seen_violations: BTreeSet<ViolationKey>,
    seen_races: BTreeSet<RaceKey>,
}

/// Engine plus the source positions of access and stale write.
type ViolationKey = (String, (u32, u32), (u32, u32));
/// Location plus both endpoints as (line, thread) pairs.
type RaceKey = (String, (u32, String), (u32, String));

fn check_of(kind: CheckKind) -> Option<Check> {
    match kind {
        CheckKind::Read => Some(Check::Read),
        CheckKind::Write => Some(Check::Write),
        CheckKind::Wait(v) => Some(Check::Wait(v)),
        CheckKind::Bcas(v) => Some(Check::Bcas(v)),
        CheckKind::StrongCas(v) => Some(Check::StrongCas(v)),
        CheckKind::None => None,
    }
}

fn check_name(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::Read => "read",
        CheckKind::Write => "write",
        CheckKind::Wait(_) => "wait",
        CheckKind::Bcas(_) => "bcas",
        CheckKind::StrongCas(_) => "cas_strong",
        CheckKind::None => "none",
    }
}

impl<'c> Machine<'c> {
    pub fn new(c: &'c Compiled, opts: Options) -> Result<Self, InterpError> {
        let program = &c.program;
        let n_threads = program.n_threads();
        let n_locs = program.n_locs();
        let bm = if opts.bm {
            c.check_ra_fragment()?;
            Some(BmState::new(n_threads, n_locs)?)
        } else {
            None
        };
        let graph = ExecutionGraph::with_init(
            c.loc_names(),
            program.locs.iter().map(|l| l.atomic).collect(),
        );
        let event_pos = vec![None; graph.n_events()];
        let mut lc = RobustnessState::new(n_threads, n_locs, c.pairs.clone());
        lc.value_tracking = opts.value_tracking;
        Ok(Machine {
            c,
            opts,
            memory: vec![0; n_locs],
            threads: c.flats.iter().map(ThreadState::new).collect(),
            serials: vec![0; n_threads],
            graph,
            event_pos,
            lc,
            race: RaceState::new(n_threads, n_locs),
            bm,
            trace: Vec::new(),
            violations: Vec::new(),
            races: Vec::new(),
            seen_violations: BTreeSet::new(),
            seen_races: BTreeSet::new(),
        })
    }

    pub fn pending_of(&self, tid: usize) -> Result<Pending, ExecError> {
        lang::pending(
            &self.c.flats[tid],
            &self.threads[tid],
            &self.memory,
            &self.c.program.threads[tid].regs,
        )
    }

    pub fn runnable(&self) -> Result<Vec<usize>, ExecError> {
        let mut out = Vec::new();
        for tid in 0..self.threads.len() {
            match self.pending_of(tid)? {
                Pending::Silent { .. } | Pending::Fence { .. } | Pending::Access(_) => {
                    out.push(tid)
                }
                Pending::Blocked(_) | Pending::Finished(_) => {}
            }
        }
        Ok(out)
    }

    pub fn all_done(&self) -> bool {
        self.threads.iter().all(|t| t.done.is_some())
    }

    /// Evaluate the robustness checks against every thread's pending atomic
    /// access (blocked wait/BCAS included). Returns true when a new finding
    /// was recorded.
    pub fn sweep_checks(&mut self) -> Result<bool, InterpError> {
        let mut any_new = false;
        for tid in 0..self.threads.len() {
            let desc = match self.pending_of(tid)? {
                Pending::Access(d) | Pending::Blocked(d) if d.atomic => d,
                _ => continue,
            };
            let tau = ThreadId(tid as u32);
            if let Some(check) = check_of(desc.check) {
                if let Some(hit) = self.lc.check(tau, desc.loc, check) {
                    any_new |= self.record_violation("lc", tau, &desc, Some(hit));
                }
            }
            if let Some(bm) = &self.bm {
                if bm.check(tau, desc.loc) {
                    any_new |= self.record_violation("bm", tau, &desc, None);
                }
            }
        }
        Ok(any_new)
    }

    fn record_violation(
        &mut self,
        engine: &str,
        tau: ThreadId,
        desc: &AccessDesc,
        hit: Option<CheckHit>,
    ) -> bool {
        let stale = hit.and_then(|h| self.find_stale_write(desc.loc, h));
        let stale_pos = stale.and_then(|e| self.event_pos[e]);
        let key = (
            engine.to_string(),
            (desc.pos.line, desc.pos.col),
            stale_pos.map_or((0, 0), |p| (p.line, p.col)),
        );
        if !self.seen_violations.insert(key) {
            return false;
        }
        self.violations.push(Violation {
            engine: engine.to_string(),
            kind: if engine == "bm" {
                "bm".into()
            } else {
                check_name(desc.check).into()
            },
            thread: self.c.program.threads[tau.index()].name.clone(),
            loc: self.c.program.loc_name(desc.loc).to_string(),
            access: desc.kind_name.to_string(),
            hb_ts: hit.map(|h| h.hb_ts),
            sc_ts: hit.map(|h| h.sc_ts),
            source_line: desc.pos.line,
            stale_write_event: stale,
            stale_write_line: stale_pos.map(|p| p.line),
            schedule: self.trace.clone(),
        });
        true
    }

    /// The mo-maximal write to `loc` whose timestamp equals the SC-side
    /// timestamp of a fired check.
    fn find_stale_write(&self, loc: LocId, hit: CheckHit) -> Option<usize> {
        if hit.sc_ts < 0 {
            return None;
        }
        let want = hit.sc_ts as u64;
        for &w in self.graph.mo[loc.index()].iter().rev() {
            let (ts, ts_store) = self.graph.timestamp_of(w).ok()?;
            let have = if hit.store_based { ts_store } else { ts };
            if have == want {
                return Some(w);
            }
            if have < want {
                break;
            }
        }
        None
    }

    fn event_string(&self, label: &Label) -> String {
        match label {
            Label::R { mode, loc, val } => {
                format!("R {} {} {}", self.c.program.loc_name(*loc), val, mode)
            }
            Label::W { mode, loc, val } => {
                format!("W {} {} {}", self.c.program.loc_name(*loc), val, mode)
            }
            Label::Rmw {
                mode,
                loc,
                val_r,
                val_w,
            } => {
                format!(
                    "U {} {}->{} {}",
                    self.c.program.loc_name(*loc),
                    val_r,
                    val_w,
                    mode
                )
            }
            Label::F { mode } => format!("F {mode}"),
        }
    }

    /// Commit one step of thread `tid` (which must be runnable).
    pub fn commit(&mut self, tid: usize) -> Result<(), InterpError> {
        let pend = self.pending_of(tid)?;
        let pc = self.threads[tid].pc;
        let tau = ThreadId(tid as u32);
        let event = match pend {
            Pending::Silent { .. } => {
                lang::commit_silent(
                    &self.c.flats[tid],
                    &mut self.threads[tid],
                    self.opts.loop_bound,
                    &self.c.program.threads[tid].regs,
                )?;
                None
            }
            Pending::Fence { mode, pos } => {
                let label = Label::F { mode };
                let ev = self.event_string(&label);
                let serial = self.serials[tid];
                self.serials[tid] += 1;
                self.graph.push_event(Event {
                    tid: Some(tau),
                    serial,
                    label,
                });
                self.event_pos.push(Some(pos));
                self.lc.on_fence(tau, mode);
                self.race.on_fence(tau, mode);
                lang::advance(&self.c.flats[tid], &mut self.threads[tid]);
                Some(ev)
            }
            Pending::Access(desc) => Some(self.commit_access(tid, desc)?),
            Pending::Blocked(_) | Pending::Finished(_) => {
                return Err(InterpError::Trace(format!("thread {tid} is not runnable")));
            }
        };
        self.trace.push(TraceStep {
            thread: self.c.program.threads[tid].name.clone(),
            pc,
            event,
        });
        if self.opts.verify {
            self.verify_correspondence().map_err(InterpError::Verify)?;
        }
        Ok(())
    }

    fn commit_access(&mut self, tid: usize, desc: AccessDesc) -> Result<String, InterpError> {
        let tau = ThreadId(tid as u32);
        let xi = desc.loc.index();
        let prev = self.memory[xi];
        let label = match desc.effect {
            AccessEffect::Read => Label::R {
                mode: desc.mode,
                loc: desc.loc,
                val: prev,
            },
            AccessEffect::Write(v) => Label::W {
                mode: desc.mode,
                loc: desc.loc,
                val: v,
            },
            AccessEffect::Rmw { read, write } => Label::Rmw {
                mode: desc.mode,
                loc: desc.loc,
                val_r: read,
                val_w: write,
            },
        };
        let ev = self.event_string(&label);
        let rf_src = match desc.effect {
            AccessEffect::Read | AccessEffect::Rmw { .. } => Some(self.graph.wmax(desc.loc)),
            AccessEffect::Write(_) => None,
        };
        let serial = self.serials[tid];
        self.serials[tid] += 1;
        let eid = self.graph.push_event(Event {
            tid: Some(tau),
            serial,
            label,
        });
        self.event_pos.push(Some(desc.pos));
        if let Some(src) = rf_src {
            self.graph.rf[eid] = Some(src);
        }
        if desc.effect.is_write() {
            self.graph.mo[xi].push(eid);
        }

        if desc.atomic {
            let class = match desc.effect {
                AccessEffect::Read => AccessClass::Read,
                AccessEffect::Write(_) => AccessClass::Write,
                AccessEffect::Rmw { .. } => AccessClass::Rmw,
            };
            self.lc.on_access(tau, desc.loc, class, desc.mode, prev)?;
            let race_typ = match class {
                AccessClass::Read => RaceAccess::Read,
                AccessClass::Write => RaceAccess::Write,
                AccessClass::Rmw => RaceAccess::Rmw,
            };
            self.race.on_atomic(tau, desc.loc, race_typ, desc.mode);
            if let Some(bm) = &mut self.bm {
                let typ = match class {
                    AccessClass::Read => BmAccess::Read,
                    AccessClass::Write => BmAccess::Write,
                    AccessClass::Rmw => {
                        return Err(InterpError::Bm(BmError::UnsupportedFragment("rmw".into())))
                    }
                };
                bm.step(tau, desc.loc, typ);
            }
        } else {
            let typ = if desc.effect.is_write() {
                RaceAccess::Write
            } else {
                RaceAccess::Read
            };
            let thread_names = self.c.thread_names();
            let loc_names = self.c.loc_names();
            let reports =
                self.race
                    .on_non_atomic(tau, desc.loc, typ, desc.pos, &thread_names, &loc_names);
            for r in reports {
                let mut ends = [
                    (
                        r.access1.line,
                        format!("{}/{}", r.access1.thread, r.access1.kind),
                    ),
                    (
                        r.access2.line,
                        format!("{}/{}", r.access2.thread, r.access2.kind),
                    ),
                ];
                ends.sort();
                let key = (r.loc.clone(), ends[0].clone(), ends[1].clone());
                if self.seen_races.insert(key) {
                    self.races.push(r);
                }
            }
        }

        match desc.effect {
            AccessEffect::Write(v) => self.memory[xi] = v,
            AccessEffect::Rmw { write, .. } => self.memory[xi] = write,
            AccessEffect::Read => {}
        }
        if let Some(reg) = desc.reg {
            self.threads[tid].regs[reg.0 as usize] = Some(prev);
        }
        lang::advance(&self.c.flats[tid], &mut self.threads[tid]);
        Ok(ev)
    }

    fn finish(&self, status: RunStatus) -> RunOutcome {
        let final_memory = self
            .c
            .program
            .locs
            .iter()
            .enumerate()
            .map(|(i, l)| (l.name.clone(), self.memory[i]))
            .collect();
        let bound_exhausted = self
            .threads
            .iter()
            .enumerate()
            .filter(|(_, t)| t.done == Some(lang::DoneReason::BoundExhausted))
            .map(|(i, _)| self.c.program.threads[i].name.clone())
            .collect();
        let mut races = self.races.clone();
        if self.violations.iter().any(|v| v.engine == "lc") {
            for r in &mut races {
                r.conditional = true;
            }
        }
        RunOutcome {
            status,
            violations: self.violations.clone(),
            races,
            final_memory,
            bound_exhausted,
            trace: self.trace.clone(),
            graph: self.graph.clone(),
        }
    }

    /// Recompute every clock family from the side graph and compare with the
    /// incremental state; also check SC-consistency of the side graph and
    /// that the incremental checks agree with the graph-evaluated ones.
    pub fn verify_correspondence(&self) -> Result<(), String> {
        if !check_consistency_sc(&self.graph) {
            return Err(format!(
                "side graph is not SC-consistent; trace {:?}",
                self.trace
            ));
        }
        let sem = GraphSem::new(&self.graph);
        let p = &self.c.program;
        let n_threads = p.n_threads();
        let atomics: Vec<LocId> = p.atomic_locs().collect();
        let mismatch = |name: &str, at: String, got: i64, want: i64, trace: &[TraceStep]| {
            Err(format!(
                "{name}({at}) = {got}, graph says {want}; trace {trace:?}"
            ))
        };
        let mut lvc_keys: Vec<crate::clocks::LvcKey> = Vec::new();
        for (l, v) in self.c.pairs.iter() {
            lvc_keys.push(crate::clocks::LvcKey {
                loc: l,
                val: Some(v),
            });
        }
        for l in p.atomic_locs().filter(|l| self.c.pairs.tracks_loc(*l)) {
            lvc_keys.push(crate::clocks::LvcKey { loc: l, val: None });
        }

        for t in 0..n_threads {
            let tau = ThreadId(t as u32);
            for &x in &atomics {
                let cases: [(&str, u64, u64); 8] = [
                    (
                        "T_SC",
                        self.lc.sc.thread[t].get(x),
                        sem.sc_thread(tau, x, false),
                    ),
                    (
                        "T_SC_U",
                        self.lc.sc_stores.thread[t].get(x),
                        sem.sc_thread(tau, x, true),
                    ),
                    (
                        "T_HB_cur",
                        self.lc.hb.current[t].get(x),
                        sem.hb_current(tau, x, false),
                    ),
                    (
                        "T_HB_cur_U",
                        self.lc.hb_stores.current[t].get(x),
                        sem.hb_current(tau, x, true),
                    ),
                    (
                        "T_HB_acq",
                        self.lc.hb.acquired[t].get(x),
                        sem.hb_acquired(tau, x, false),
                    ),
                    (
                        "T_HB_acq_U",
                        self.lc.hb_stores.acquired[t].get(x),
                        sem.hb_acquired(tau, x, true),
                    ),
                    (
                        "T_HB_rel",
                        self.lc.hb.released[t].get(x),
                        sem.hb_released(tau, x, false),
                    ),
                    (
                        "T_HB_rel_U",
                        self.lc.hb_stores.released[t].get(x),
                        sem.hb_released(tau, x, true),
                    ),
                ];
                for (name, got, want) in cases {
                    if got != want {
                        let at = format!("{},{}", p.thread_name(tau), p.loc_name(x));
                        return mismatch(name, at, got as i64, want as i64, &self.trace);
                    }
                }
            }
            for &key in &lvc_keys {
                let cases = [
                    (
                        "T_v",
                        self.lc.val.thread[t].get(key),
                        sem.val_thread(tau, key.loc, key.val, &self.c.pairs, false),
                    ),
                    (
                        "T_v_U",
                        self.lc.val_stores.thread[t].get(key),
                        sem.val_thread(tau, key.loc, key.val, &self.c.pairs, true),
                    ),
                ];
                for (name, got, want) in cases {
                    if got != want {
                        let at = format!("{},{:?}", p.thread_name(tau), key);
                        return mismatch(name, at, got, want, &self.trace);
                    }
                }
            }
        }

        for &y in &atomics {
            let yi = y.index();
            if self.lc.hb.at_write[yi].get(y) != self.lc.sc.at_write[yi].get(y)
                || self.lc.hb_stores.at_write[yi].get(y) != self.lc.sc_stores.at_write[yi].get(y)
            {
                return Err(format!("write counters diverge at {}", p.loc_name(y)));
            }
            for &x in &atomics {
                let cases: [(&str, u64, u64); 6] = [
                    (
                        "W_SC",
                        self.lc.sc.at_write[yi].get(x),
                        sem.sc_at_write(y, x, false),
                    ),
                    (
                        "W_SC_U",
                        self.lc.sc_stores.at_write[yi].get(x),
                        sem.sc_at_write(y, x, true),
                    ),
                    (
                        "M_SC",
                        self.lc.sc.at_access[yi].get(x),
                        sem.sc_at_access(y, x, false),
                    ),
                    (
                        "M_SC_U",
                        self.lc.sc_stores.at_access[yi].get(x),
                        sem.sc_at_access(y, x, true),
                    ),
                    (
                        "W_HB",
                        self.lc.hb.at_write[yi].get(x),
                        sem.hb_at_write(y, x, false),
                    ),
                    (
                        "W_HB_U",
                        self.lc.hb_stores.at_write[yi].get(x),
                        sem.hb_at_write(y, x, true),
                    ),
                ];
                for (name, got, want) in cases {
                    if got != want {
                        let at = format!("{},{}", p.loc_name(y), p.loc_name(x));
                        return mismatch(name, at, got as i64, want as i64, &self.trace);
                    }
                }
            }
            for &key in &lvc_keys {
                let pairs = &self.c.pairs;
                let cases = [
                    (
                        "W_v",
                        self.lc.val.at_write[yi].get(key),
                        sem.val_at_write(y, key.loc, key.val, pairs, false),
                    ),
                    (
                        "M_v",
                        self.lc.val.at_access[yi].get(key),
                        sem.val_at_access(y, key.loc, key.val, pairs, false),
                    ),
                    (
                        "W_v_U",
                        self.lc.val_stores.at_write[yi].get(key),
                        sem.val_at_write(y, key.loc, key.val, pairs, true),
                    ),
                    (
                        "M_v_U",
                        self.lc.val_stores.at_access[yi].get(key),
                        sem.val_at_access(y, key.loc, key.val, pairs, true),
                    ),
                ];
                for (name, got, want) in cases {
                    if got != want {
                        let at = format!("{},{key:?}", p.loc_name(y));
                        return mismatch(name, at, got, want, &self.trace);
                    }
                }
            }
        }

        for t in 0..n_threads {
            let tau = ThreadId(t as u32);
            for pi in 0..n_threads {
                let p2 = ThreadId(pi as u32);
                let cases = [
                    (
                        "race T_c",
                        self.race.current[t].get(p2),
                        sem.race_current(tau, p2),
                    ),
                    (
                        "race T_r",
                        self.race.released[t].get(p2),
                        sem.race_released(tau, p2),
                    ),
                    (
                        "race T_a",
                        self.race.acquired[t].get(p2),
                        sem.race_acquired(tau, p2),
                    ),
                ];
                for (name, got, want) in cases {
                    if got != want {
                        let at = format!("{},{}", p.thread_name(tau), p.thread_name(p2));
                        return mismatch(name, at, got as i64, want as i64, &self.trace);
                    }
                }
            }
        }
        for &x in &atomics {
            for pi in 0..n_threads {
                let p2 = ThreadId(pi as u32);
                let got = self.race.at_write[x.index()].get(p2);
                let want = sem.race_at_write(x, p2);
                if got != want {
                    let at = format!("{},{}", p.loc_name(x), p.thread_name(p2));
                    return mismatch("race W", at, got as i64, want as i64, &self.trace);
                }
            }
        }
        for n in p.na_locs() {
            for pi in 0..n_threads {
                let p2 = ThreadId(pi as u32);
                let cases = [
                    (
                        "race NW",
                        self.race.na_write[n.index()].get(p2),
                        sem.race_na_write(n, p2),
                    ),
                    (
                        "race NR",
                        self.race.na_read[n.index()].get(p2),
                        sem.race_na_read(n, p2),
                    ),
                ];
                for (name, got, want) in cases {
                    if got != want {
                        let at = format!("{},{}", p.loc_name(n), p.thread_name(p2));
                        return mismatch(name, at, got as i64, want as i64, &self.trace);
                    }
                }
            }
        }

        // Check alignment: incremental checks agree with graph-evaluated ones,
        // i.e. a check fires exactly at extended-witness configurations.
        for tid in 0..n_threads {
            let desc = match self.pending_of(tid).map_err(|e| e.to_string())? {
                Pending::Access(d) | Pending::Blocked(d) if d.atomic => d,
                _ => continue,
            };
            let tau = ThreadId(tid as u32);
            if let Some(check) = check_of(desc.check) {
                let inc = self.lc.check(tau, desc.loc, check);
                let gph =
                    sem.graph_check(tau, desc.loc, check, &self.c.pairs, self.lc.value_tracking);
                if inc != gph {
                    return Err(format!(
                        "check alignment at {} {:?}: incremental {inc:?} vs graph {gph:?}; trace {:?}",
                        p.thread_name(tau),
                        desc.pos,
                        self.trace
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Execute one scheduled run to completion, deadlock, or abort.
pub fn run_once(
    c: &Compiled,
    mut sched: Scheduler,
    opts: &Options,
) -> Result<RunOutcome, InterpError> {
    let mut m = Machine::new(c, opts.clone())?;
    let mut last = usize::MAX;
    loop {
        let found_new = m.sweep_checks()?;
        if found_new && !opts.continue_on_violation {
            return Ok(m.finish(RunStatus::Aborted));
        }
        let runnable = m.runnable()?;
        if runnable.is_empty() {
            let status = if m.all_done() {
                RunStatus::Completed
            } else {
                RunStatus::Deadlock
            };
            return Ok(m.finish(status));
        }
        let Some(tid) = sched.pick(&runnable, last)? else {
            return Ok(m.finish(RunStatus::TraceEnded));
        };
        last = tid;
        m.commit(tid)?;
    }
}

/// Per-step monitor dump produced by `replay` (golden-table mode).
#[derive(Debug, Clone, Serialize)]
pub struct StepDump {
    pub step: usize,
    pub thread: String,
    pub event: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lc: Option<LcDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bm: Option<BmDump>,
}

/// Deterministic replay of an explicit schedule with full monitor-state
/// dumps after every step.
pub fn replay(
    c: &Compiled,
    steps: &[usize],
    opts: &Options,
) -> Result<(RunOutcome, Vec<StepDump>), InterpError> {
    let mut m = Machine::new(c, opts.clone())?;
    let mut dumps = Vec::new();
    let thread_names = c.thread_names();
    let loc_names = c.loc_names();
    for (i, &tid) in steps.iter().enumerate() {
        m.sweep_checks()?;
        let runnable = m.runnable()?;
        if !runnable.contains(&tid) {
            return Err(InterpError::Trace(format!(
                "step {i}: thread {tid} is not runnable"
            )));
        }
        m.commit(tid)?;
        let last = m.trace.last().unwrap();
        dumps.push(StepDump {
            step: i,
            thread: last.thread.clone(),
            event: last.event.clone(),
            lc: Some(m.lc.dump(&thread_names, &loc_names)),
            bm: m.bm.as_ref().map(|b| b.dump(&thread_names, &loc_names)),
        });
    }
    m.sweep_checks()?;
    let runnable = m.runnable()?;
    let status = if m.all_done() {
        RunStatus::Completed
    } else if runnable.is_empty() {
        RunStatus::Deadlock
    } else {
        RunStatus::TraceEnded
    };
    Ok((m.finish(status), dumps))
}

/// Resolve a recorded trace (thread names) into scheduler steps.
pub fn trace_to_steps(c: &Compiled, trace: &[TraceStep]) -> Result<Vec<usize>, InterpError> {
    trace
        .iter()
        .map(|s| {
            c.program
                .threads
                .iter()
                .position(|t| t.name == s.thread)
                .ok_or_else(|| InterpError::Trace(format!("unknown thread {:?}", s.thread)))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Seeded batches
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct AggViolation {
    #[serde(rename = "firstHit")]
    pub first_hit: u64,
    #[serde(flatten)]
    pub violation: Violation,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggRace {
    #[serde(rename = "firstHit")]
    pub first_hit: u64,
    #[serde(flatten)]
    pub race: RaceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchOutcome {
    #[serde(rename = "totalRuns")]
    pub total_runs: u64,
    #[serde(rename = "runsWithViolations")]
    pub runs_with_violations: u64,
    #[serde(rename = "runsWithRaces")]
    pub runs_with_races: u64,
    pub violations: Vec<AggViolation>,
    pub races: Vec<AggRace>,
    pub statuses: BTreeMap<String, u64>,
}

/// Independent seeded-random runs; findings are deduplicated and tagged with
/// the first iteration that hit them. Runs execute in parallel across OS
/// threads; the merge happens in seed order, so the aggregate is
/// deterministic for a fixed base seed.
pub fn run_many(
    c: &Compiled,
    seeds: u64,
    base_seed: u64,
    opts: &Options,
) -> Result<BatchOutcome, InterpError> {
    let n_workers = std::thread::available_parallelism()
        .map_or(1, |p| p.get())
        .clamp(1, 8);
    let mut outcomes: Vec<Option<RunOutcome>> = Vec::new();
    outcomes.resize_with(seeds as usize, || None);
    let chunk = (seeds as usize).div_ceil(n_workers).max(1);
    let errors: std::sync::Mutex<Vec<String>> = std::sync::Mutex::new(Vec::new());
    if seeds > 0 {
        std::thread::scope(|scope| {
            for (w, slot_chunk) in outcomes.chunks_mut(chunk).enumerate() {
                let errors = &errors;
                scope.spawn(move || {
                    for (i, slot) in slot_chunk.iter_mut().enumerate() {
                        let idx = w * chunk + i;
                        let sched = Scheduler::random(base_seed.wrapping_add(idx as u64));
                        match run_once(c, sched, opts) {
                            Ok(out) => *slot = Some(out),
                            Err(e) => errors.lock().unwrap().push(e.to_string()),
                        }
                    }
                });
            }
        });
    }
    if let Some(e) = errors.lock().unwrap().first() {
        return Err(InterpError::Trace(e.clone()));
    }

    let mut batch = BatchOutcome {
        total_runs: seeds,
        runs_with_violations: 0,
        runs_with_races: 0,
        violations: Vec::new(),
        races: Vec::new(),
        statuses: BTreeMap::new(),
    };
    let mut seen_v: BTreeSet<(String, String, u32, Option<u32>)> = BTreeSet::new();
    let mut seen_r: BTreeSet<(String, (u32, String), (u32, String))> = BTreeSet::new();
    let mut any_violation = false;
    for (i, out) in outcomes.into_iter().enumerate() {
        let out = out.expect("all runs completed");
        *batch
            .statuses
            .entry(format!("{:?}", out.status))
            .or_insert(0) += 1;
        if !out.violations.is_empty() {
            batch.runs_with_violations += 1;
            any_violation = true;
        }
        if !out.races.is_empty() {
            batch.runs_with_races += 1;
        }
        for v in out.violations {
            let key = (
                v.engine.clone(),
                v.kind.clone(),
                v.source_line,
                v.stale_write_line,
            );
            if seen_v.insert(key) {
                batch.violations.push(AggViolation {
                    first_hit: i as u64,
                    violation: v,
                });
            }
        }
        for r in out.races {
            let mut ends = [
                (
                    r.access1.line,
                    format!("{}/{}", r.access1.thread, r.access1.kind),
                ),
                (
                    r.access2.line,
                    format!("{}/{}", r.access2.thread, r.access2.kind),
                ),
            ];
            ends.sort();
            let key = (r.loc.clone(), ends[0].clone(), ends[1].clone());
            if seen_r.insert(key) {
                batch.races.push(AggRace {
                    first_hit: i as u64,
                    race: r,
                });
            }
        }
    }
    if any_violation {
        for r in &mut batch.races {
            r.race.conditional = true;
        }
    }
    Ok(batch)
}

// ---------------------------------------------------------------------------
// Exhaustive exploration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ExploreOutcome {
    pub violations: Vec<Violation>,
    pub races: Vec<RaceReport>,
    pub schedules: u64,
    pub nodes: u64,
    pub deadlocks: u64,
    /// Set when the node budget or depth cap was exhausted before the whole
    /// schedule space was covered.
    pub inconclusive: bool,
}

impl ExploreOutcome {
    pub fn clean(&self) -> bool {
        self.violations.is_empty() && self.races.is_empty()
    }
}

struct ExploreCtx {
    violations: Vec<Violation>,
    races: Vec<RaceReport>,
    seen_v: BTreeSet<(String, String, u32, Option<u32>)>,
    seen_r: BTreeSet<(String, (u32, String), (u32, String))>,
    schedules: u64,
    nodes: u64,
    deadlocks: u64,
    budget: u64,
    inconclusive: bool,
}

/// Upper bound on per-thread step counts, loops expanded by the unroll
/// bound.
fn max_steps(body: &[crate::lang::Inst], bound: u128) -> u128 {
    use crate::lang::Inst;
    let mut steps = 0u128;
    for inst in body {
        steps = steps.saturating_add(match inst {
            Inst::If {
                then_body,
                else_body,
                ..
            } => 1 + max_steps(then_body, bound).max(max_steps(else_body, bound)),
            Inst::While { body, .. } => (1 + max_steps(body, bound)).saturating_mul(bound + 1),
            _ => 1,
        });
    }
    steps
}

/// Multinomial estimate of the interleaving count, saturating at `cap`.
fn schedule_estimate(per_thread: &[u128], cap: u128) -> u128 {
    let mut remaining: u128 = per_thread.iter().fold(0, |a, b| a.saturating_add(*b));
    let mut total = 1u128;
    for &n in per_thread {
        // total *= C(remaining, n), computed incrementally
        let mut binom = 1u128;
        for k in 0..n.min(remaining) {
            binom = match binom.checked_mul(remaining - k) {
                Some(v) => v / (k + 1),
                None => return cap,
            };
            if binom >= cap {
                return cap;
            }
        }
        total = match total.checked_mul(binom) {
            Some(v) => v,
            None => return cap,
        };
        if total >= cap {
            return cap;
        }
        remaining = remaining.saturating_sub(n);
    }
    total
}

/// Enumerate all interleavings up to `depth_cap` scheduler steps (naive DFS
/// over scheduler choices), collecting every distinct finding with its first
/// witness trace. Programs whose schedule-space estimate exceeds the node
/// budget are refused upfront as inconclusive.
pub fn explore(
    c: &Compiled,
    depth_cap: u64,
    opts: &Options,
) -> Result<ExploreOutcome, InterpError> {
    let per_thread: Vec<u128> = c
        .program
        .threads
        .iter()
        .map(|t| max_steps(&t.body, opts.loop_bound as u128))
        .collect();
    if schedule_estimate(&per_thread, opts.node_budget as u128) >= opts.node_budget as u128 {
        return Ok(ExploreOutcome {
            violations: Vec::new(),
            races: Vec::new(),
            schedules: 0,
            nodes: 0,
            deadlocks: 0,
            inconclusive: true,
        });
    }
    let mut ctx = ExploreCtx {
        violations: Vec::new(),
        races: Vec::new(),
        seen_v: BTreeSet::new(),
        seen_r: BTreeSet::new(),
        schedules: 0,
        nodes: 0,
        deadlocks: 0,
        budget: opts.node_budget,
        inconclusive: false,
    };
    let m = Machine::new(c, opts.clone())?;
    dfs(m, depth_cap, &mut ctx)?;
    Ok(ExploreOutcome {
        violations: ctx.violations,
        races: ctx.races,
        schedules: ctx.schedules,
        nodes: ctx.nodes,
        deadlocks: ctx.deadlocks,
        inconclusive: ctx.inconclusive,
    })
}

fn dfs(mut m: Machine, depth_left: u64, ctx: &mut ExploreCtx) -> Result<(), InterpError> {
    ctx.nodes += 1;
    if ctx.nodes > ctx.budget {
        ctx.inconclusive = true;
        return Ok(());
    }
    m.sweep_checks()?;
    for v in &m.violations {
        let key = (
            v.engine.clone(),
            v.kind.clone(),
            v.source_line,
            v.stale_write_line,
        );
        if ctx.seen_v.insert(key) {
            ctx.violations.push(v.clone());
        }
    }
    for r in &m.races {
        let mut ends = [
            (
                r.access1.line,
                format!("{}/{}", r.access1.thread, r.access1.kind),
            ),
            (
                r.access2.line,
                format!("{}/{}", r.access2.thread, r.access2.kind),
            ),
        ];
        ends.sort();
        let key = (r.loc.clone(), ends[0].clone(), ends[1].clone());
        if ctx.seen_r.insert(key) {
            ctx.races.push(r.clone());
        }
    }
    let runnable = m.runnable()?;
    if runnable.is_empty() {
        ctx.schedules += 1;
        if !m.all_done() {
            ctx.deadlocks += 1;
        }
        return Ok(());
    }
    if depth_left == 0 {
        ctx.inconclusive = true;
        return Ok(());
    }
    for &tid in &runnable {
        let mut next = m.clone();
        next.commit(tid)?;
        dfs(next, depth_left - 1, ctx)?;
        if ctx.inconclusive && ctx.nodes > ctx.budget {
            return Ok(());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn compiled(src: &str) -> Compiled {
        Compiled::new(parse(src).unwrap())
    }

    const SB: &str = "\
atomic x1, x2;
thread t1 { x1.store(1, rel); r1 = x2.load(acq); }
thread t2 { x2.store(1, rel); r2 = x1.load(acq); }
";

    const MP: &str = "\
atomic x1, x2;
thread t1 { x1.store(1, rel); x2.store(1, rel); }
thread t2 { r1 = x2.load(acq); r2 = x1.load(acq); }
";

    #[test]
    fn sb_fixed_trace_flags_once() {
        let c = compiled(SB);
        let opts = Options {
            continue_on_violation: true,
            verify: true,
            ..Options::default()
        };
        let out = run_once(&c, Scheduler::fixed(vec![0, 0, 1, 1]), &opts).unwrap();
        let lc: Vec<_> = out.violations.iter().filter(|v| v.engine == "lc").collect();
        assert_eq!(lc.len(), 1, "{:?}", out.violations);
        assert_eq!(lc[0].thread, "t2");
        assert_eq!(lc[0].loc, "x1");
        assert_eq!((lc[0].hb_ts, lc[0].sc_ts), (Some(0), Some(1)));
        assert_eq!(out.status, RunStatus::Completed);
    }

    #[test]
    fn mp_is_clean_everywhere() {
        let c = compiled(MP);
        let opts = Options {
            verify: true,
            ..Options::default()
        };
        let out = explore(&c, 100, &opts).unwrap();
        assert!(out.clean(), "{:?}", out.violations);
        assert!(!out.inconclusive);
        assert_eq!(
            out.schedules, 6,
            "C(4,2) interleavings of two 2-step threads"
        );
    }

    #[test]
    fn sb_explore_finds_violation_with_witness() {
        let c = compiled(SB);
        let out = explore(&c, 100, &Options::default()).unwrap();
        assert!(!out.violations.is_empty());
        let v = &out.violations[0];
        assert!(
            v.schedule.len() >= 3,
            "witness needs at least a 3-step prefix"
        );
    }

    #[test]
    fn determinism_same_seed_same_outcome() {
        let c = compiled(SB);
        let opts = Options {
            continue_on_violation: true,
            ..Options::default()
        };
        let a = run_once(&c, Scheduler::random(7), &opts).unwrap();
        let b = run_once(&c, Scheduler::random(7), &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn replaying_trace_regenerates_graph() {
        let c = compiled(SB);
        let opts = Options {
            continue_on_violation: true,
            ..Options::default()
        };
        let out = run_once(&c, Scheduler::random(3), &opts).unwrap();
        let steps = trace_to_steps(&c, &out.trace).unwrap();
        let (replayed, _) = replay(&c, &steps, &opts).unwrap();
        assert_eq!(out.graph, replayed.graph);
        assert_eq!(out.trace, replayed.trace);
    }

    #[test]
    fn deadlock_is_an_outcome() {
        let c = compiled(
            "atomic x1, x2;
             thread t1 { x1.store(1, rel); wait(x2, 5); }
             thread t2 { x2.store(1, rel); wait(x1, 5); }",
        );
        let out = run_once(&c, Scheduler::RoundRobin, &Options::default()).unwrap();
        assert_eq!(out.status, RunStatus::Deadlock);
    }

    #[test]
    fn explore_verdict_invariant_under_thread_renaming() {
        let a = compiled(SB);
        let b = compiled(
            "atomic x2, x1;
             thread t2 { x2.store(1, rel); r2 = x1.load(acq); }
             thread t1 { x1.store(1, rel); r1 = x2.load(acq); }",
        );
        let oa = explore(&a, 100, &Options::default()).unwrap();
        let ob = explore(&b, 100, &Options::default()).unwrap();
        assert_eq!(oa.violations.is_empty(), ob.violations.is_empty());
        assert_eq!(oa.schedules, ob.schedules);
    }
}
