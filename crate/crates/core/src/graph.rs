//! Execution graphs, derived relations, and consistency predicates.
//!
//! Graphs are events plus a reads-from mapping and per-location modification
//! orders. Relations are materialized as dense boolean matrices over event
//! indices; closures are computed by iterated squaring. Non-atomic events
//! participate only in program order: rf/mo/fr edges at non-atomic locations
//! are excluded from the consistency axioms and from synchronization.

use crate::ids::{LocId, ThreadId, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub type EventId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("event {0} is not a write")]
    NotAWrite(EventId),
    #[error("graph outside the release/acquire fragment: {0}")]
    NotRaFragment(String),
    #[error("malformed graph: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    R {
        mode: crate::lang::Mode,
        loc: LocId,
        val: Value,
    },
    W {
        mode: crate::lang::Mode,
        loc: LocId,
        val: Value,
    },
    Rmw {
        mode: crate::lang::Mode,
        loc: LocId,
        val_r: Value,
        val_w: Value,
    },
    F {
        mode: crate::lang::Mode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    /// `None` for initialization events.
    pub tid: Option<ThreadId>,
    pub serial: u32,
    pub label: Label,
}

impl Event {
    pub fn is_init(&self) -> bool {
        self.tid.is_none()
    }

    pub fn loc(&self) -> Option<LocId> {
        match self.label {
            Label::R { loc, .. } | Label::W { loc, .. } | Label::Rmw { loc, .. } => Some(loc),
            Label::F { .. } => None,
        }
    }

    pub fn mode(&self) -> crate::lang::Mode {
        match self.label {
            Label::R { mode, .. }
            | Label::W { mode, .. }
            | Label::Rmw { mode, .. }
            | Label::F { mode } => mode,
        }
    }

    pub fn is_write(&self) -> bool {
        matches!(self.label, Label::W { .. } | Label::Rmw { .. })
    }

    pub fn is_read(&self) -> bool {
        matches!(self.label, Label::R { .. } | Label::Rmw { .. })
    }

    pub fn is_rmw(&self) -> bool {
        matches!(self.label, Label::Rmw { .. })
    }

    pub fn is_fence(&self) -> bool {
        matches!(self.label, Label::F { .. })
    }

    pub fn val_written(&self) -> Option<Value> {
        match self.label {
            Label::W { val, .. } => Some(val),
            Label::Rmw { val_w, .. } => Some(val_w),
            _ => None,
        }
    }

    pub fn val_read(&self) -> Option<Value> {
        match self.label {
            Label::R { val, .. } => Some(val),
            Label::Rmw { val_r, .. } => Some(val_r),
            _ => None,
        }
    }
}

/// Dense boolean relation over event indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rel {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Rel {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Rel {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn union_with(&mut self, other: &Rel) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    pub fn union(&self, other: &Rel) -> Rel {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    /// Left composition: (self ; other)(i, j).
    pub fn compose(&self, other: &Rel) -> Rel {
        let mut out = Rel::new(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                if self.get(i, k) {
                    let (dst, src) = (i * self.words, k * self.words);
                    for w in 0..self.words {
                        out.bits[dst + w] |= other.bits[src + w];
                    }
                }
            }
        }
        out
    }

    /// Transitive closure by iterated squaring to a fixpoint.
    pub fn transitive_closure(&self) -> Rel {
        let mut r = self.clone();
        loop {
            let next = r.union(&r.compose(&r));
            if next == r {
                return r;
            }
            r = next;
        }
    }

    pub fn reflexive(&self) -> Rel {
        let mut r = self.clone();
        for i in 0..self.n {
            r.set(i, i);
        }
        r
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|i| !self.get(i, i))
    }

    pub fn is_acyclic(&self) -> bool {
        self.transitive_closure().is_irreflexive()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionGraph {
    pub loc_names: Vec<String>,
    pub loc_atomic: Vec<bool>,
    pub events: Vec<Event>,
    /// rf source per event (set for reads and RMWs).
    pub rf: Vec<Option<EventId>>,
    /// Per-location modification order, including the initialization write.
    pub mo: Vec<Vec<EventId>>,
}

impl ExecutionGraph {
    /// A graph holding one initialization write per location.
    pub fn with_init(loc_names: Vec<String>, loc_atomic: Vec<bool>) -> Self {
        let n_locs = loc_names.len();
        let mut g = ExecutionGraph {
            loc_names,
            loc_atomic,
            events: Vec::new(),
            rf: Vec::new(),
            mo: vec![Vec::new(); n_locs],
        };
        for l in 0..n_locs {
            let id = g.push_event(Event {
                tid: None,
                serial: 0,
                label: Label::W {
                    mode: crate::lang::Mode::Rlx,
                    loc: LocId(l as u32),
                    val: 0,
                },
            });
            g.mo[l].push(id);
        }
        g
    }

    pub fn push_event(&mut self, e: Event) -> EventId {
        self.events.push(e);
        self.rf.push(None);
        self.events.len() - 1
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn init_event(&self, loc: LocId) -> EventId {
        self.events
            .iter()
            .position(|e| e.is_init() && e.loc() == Some(loc))
            .expect("init event per location")
    }

    /// The mo-maximal write to `loc`.
    pub fn wmax(&self, loc: LocId) -> EventId {
        *self.mo[loc.index()].last().expect("mo contains init")
    }

    pub fn is_atomic_loc(&self, loc: LocId) -> bool {
        self.loc_atomic[loc.index()]
    }

    /// Timestamp pair (ts, tsU): ts counts non-init writes mo-at-or-before
    /// the event; tsU counts only non-RMW non-init writes.
    pub fn timestamp_of(&self, w: EventId) -> Result<(u64, u64), GraphError> {
        let ev = &self.events[w];
        if !ev.is_write() {
            return Err(GraphError::NotAWrite(w));
        }
        let loc = ev.loc().unwrap();
        let mut ts = 0;
        let mut ts_store = 0;
        for &other in &self.mo[loc.index()] {
            let oe = &self.events[other];
            if !oe.is_init() {
                ts += 1;
                if !oe.is_rmw() {
                    ts_store += 1;
                }
            }
            if other == w {
                return Ok((ts, ts_store));
            }
        }
        Err(GraphError::Malformed(format!(
            "write {w} missing from its mo order"
        )))
    }

    pub fn readers_of(&self, w: EventId) -> impl Iterator<Item = EventId> + '_ {
        self.rf
            .iter()
            .enumerate()
            .filter(move |(_, src)| **src == Some(w))
            .map(|(r, _)| r)
    }

    /// Check rf and mo well-formedness.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (id, e) in self.events.iter().enumerate() {
            if e.is_read() {
                let Some(src) = self.rf[id] else {
                    return Err(GraphError::Malformed(format!("read {id} has no rf source")));
                };
                let w = &self.events[src];
                if !w.is_write() {
                    return Err(GraphError::Malformed(format!(
                        "rf source {src} is not a write"
                    )));
                }
                if w.loc() != e.loc() {
                    return Err(GraphError::Malformed(format!(
                        "rf {src}->{id} crosses locations"
                    )));
                }
                if w.val_written() != e.val_read() {
                    return Err(GraphError::Malformed(format!(
                        "rf {src}->{id} value mismatch"
                    )));
                }
            } else if self.rf[id].is_some() {
                return Err(GraphError::Malformed(format!(
                    "non-read {id} has an rf source"
                )));
            }
        }
        for (l, order) in self.mo.iter().enumerate() {
            let loc = LocId(l as u32);
            let writes: Vec<EventId> = (0..self.events.len())
                .filter(|&i| self.events[i].is_write() && self.events[i].loc() == Some(loc))
                .collect();
            if order.len() != writes.len() || !writes.iter().all(|w| order.contains(w)) {
                return Err(GraphError::Malformed(format!(
                    "mo for {} does not totally order its writes",
                    self.loc_names[l]
                )));
            }
        }
        Ok(())
    }
}

/// Derived relations of one graph.
pub struct Rels {
    pub po: Rel,
    /// rf restricted to atomic locations.
    pub rf: Rel,
    /// mo restricted to atomic locations.
    pub mo: Rel,
    /// fr = rf⁻¹;mo minus identity, atomic locations only.
    pub fr: Rel,
    pub sw: Rel,
    /// RC20 happens-before: (po ∪ sw)+.
    pub hb: Rel,
    /// SC happens-before: (po ∪ rf ∪ mo ∪ fr)+.
    pub hb_sc: Rel,
}

pub fn derive_po(g: &ExecutionGraph) -> Rel {
    let n = g.n_events();
    let mut po = Rel::new(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (&g.events[i], &g.events[j]);
            let before = match (a.tid, b.tid) {
                (None, Some(_)) => true,
                (Some(ta), Some(tb)) => ta == tb && a.serial < b.serial,
                _ => false,
            };
            if before {
                po.set(i, j);
            }
        }
    }
    po
}

fn atomic_rf(g: &ExecutionGraph) -> Rel {
    let mut rf = Rel::new(g.n_events());
    for (r, src) in g.rf.iter().enumerate() {
        if let Some(w) = src {
            if g.events[r].loc().is_some_and(|l| g.is_atomic_loc(l)) {
                rf.set(*w, r);
            }
        }
    }
    rf
}

fn atomic_mo(g: &ExecutionGraph) -> Rel {
    let mut mo = Rel::new(g.n_events());
    for (l, order) in g.mo.iter().enumerate() {
        if !g.loc_atomic[l] {
            continue;
        }
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                mo.set(order[i], order[j]);
            }
        }
    }
    mo
}

/// fr = rf⁻¹;mo with the identity pairs removed (an RMW reading its
/// mo-predecessor is not fr-before itself).
pub fn derive_fr(g: &ExecutionGraph) -> Rel {
    let mo = atomic_mo(g);
    let mut fr = Rel::new(g.n_events());
    for (r, src) in g.rf.iter().enumerate() {
        let Some(w) = src else { continue };
        if !g.events[r].loc().is_some_and(|l| g.is_atomic_loc(l)) {
            continue;
        }
        for w2 in 0..g.n_events() {
            if mo.get(*w, w2) && w2 != r {
                fr.set(r, w2);
            }
        }
    }
    fr
}

/// hb of the release/acquire fragment: (po ∪ rf)+.
/// Rejects graphs with relaxed or non-atomic events or fences.
pub fn derive_hb_ra(g: &ExecutionGraph) -> Result<Rel, GraphError> {
    for (i, e) in g.events.iter().enumerate() {
        if e.is_init() {
            continue;
        }
        if e.is_fence() {
            return Err(GraphError::NotRaFragment(format!("event {i} is a fence")));
        }
        match e.mode() {
            crate::lang::Mode::Acq | crate::lang::Mode::Rel | crate::lang::Mode::AcqRel => {}
            m => {
                return Err(GraphError::NotRaFragment(format!("event {i} has mode {m}")));
            }
        }
    }
    Ok(derive_po(g).union(&atomic_rf(g)).transitive_closure())
}

/// Synchronizes-with: release heads (or writes po-after a release fence)
/// reach an acquire end through an rf chain whose intermediate events are
/// RMWs; a relaxed final read still synchronizes a po-later acquire fence.
pub fn derive_sw(g: &ExecutionGraph) -> Rel {
    let n = g.n_events();
    let po = derive_po(g);
    let mut sw = Rel::new(n);
    for e0 in 0..n {
        let head = &g.events[e0];
        if head.is_init() || !head.mode().at_least_rel() {
            continue;
        }
        let mut starts: Vec<EventId> = Vec::new();
        if head.is_write() {
            starts.push(e0);
        } else if head.is_fence() {
            for w in 0..n {
                if g.events[w].is_write()
                    && !g.events[w].is_init()
                    && g.events[w].loc().is_some_and(|l| g.is_atomic_loc(l))
                    && po.get(e0, w)
                {
                    starts.push(w);
                }
            }
        }
        for start in starts {
            // rf chain from `start`, passing only through RMWs
            let mut frontier = vec![start];
            let mut reads: Vec<EventId> = Vec::new();
            while let Some(w) = frontier.pop() {
                for r in g.readers_of(w) {
                    if !g.events[r].loc().is_some_and(|l| g.is_atomic_loc(l)) {
                        continue;
                    }
                    reads.push(r);
                    if g.events[r].is_rmw() {
                        frontier.push(r);
                    }
                }
            }
            for r in reads {
                if g.events[r].mode().at_least_acq() {
                    sw.set(e0, r);
                }
                for f in 0..n {
                    if g.events[f].is_fence() && g.events[f].mode().at_least_acq() && po.get(r, f) {
                        sw.set(e0, f);
                    }
                }
            }
        }
    }
    sw
}

pub fn derive_hb_rc20(g: &ExecutionGraph) -> Rel {
    derive_po(g).union(&derive_sw(g)).transitive_closure()
}

pub fn derive_hb_sc(g: &ExecutionGraph) -> Rel {
    let mut u = derive_po(g);
    u.union_with(&atomic_rf(g));
    u.union_with(&atomic_mo(g));
    u.union_with(&derive_fr(g));
    u.transitive_closure()
}

pub fn derive(g: &ExecutionGraph) -> Rels {
    let po = derive_po(g);
    let rf = atomic_rf(g);
    let mo = atomic_mo(g);
    let fr = derive_fr(g);
    let sw = derive_sw(g);
    let hb = po.union(&sw).transitive_closure();
    let mut u = po.union(&rf);
    u.union_with(&mo);
    u.union_with(&fr);
    let hb_sc = u.transitive_closure();
    Rels {
        po,
        rf,
        mo,
        fr,
        sw,
        hb,
        hb_sc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    WriteCoherence,
    ReadCoherence,
    AcycPoRf,
    Atomicity,
    /// Per-location coherence via the extended coherence order, catching
    /// cycles that thread through relaxed rf edges (invisible to hb).
    Coherence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Consistent,
    Violated(Axiom),
}

impl Verdict {
    pub fn is_consistent(self) -> bool {
        self == Verdict::Consistent
    }
}

/// RC20 consistency: write/read coherence, po∪rf acyclicity, atomicity.
pub fn check_consistency_rc20(g: &ExecutionGraph) -> Verdict {
    let r = derive(g);
    check_rc20_with(&r)
}

pub fn check_rc20_with(r: &Rels) -> Verdict {
    if !r.mo.compose(&r.hb).is_irreflexive() {
        return Verdict::Violated(Axiom::WriteCoherence);
    }
    if !r.fr.compose(&r.hb).is_irreflexive() {
        return Verdict::Violated(Axiom::ReadCoherence);
    }
    if !r.po.union(&r.rf).is_acyclic() {
        return Verdict::Violated(Axiom::AcycPoRf);
    }
    // An RMW reads its immediate mo-predecessor: reading anything mo-earlier
    // leaves a write between source and RMW (fr;mo reflexive), reading
    // anything mo-later puts the source in the RMW's own mo-future (mo;rf
    // reflexive).
    if !r.fr.compose(&r.mo).is_irreflexive() || !r.mo.compose(&r.rf).is_irreflexive() {
        return Verdict::Violated(Axiom::Atomicity);
    }
    // Full per-location coherence: hb;eco? irreflexive with
    // eco = (rf ∪ mo ∪ fr)+. The named checks above are special cases kept
    // for their report labels; with relaxed accesses an eco path can take
    // several steps between hb-ordered events.
    let mut eco = r.rf.union(&r.mo);
    eco.union_with(&r.fr);
    let eco = eco.transitive_closure();
    if !r.hb.compose(&eco.reflexive()).is_irreflexive() {
        return Verdict::Violated(Axiom::Coherence);
    }
    Verdict::Consistent
}

/// SC consistency: hb_SC is irreflexive.
pub fn check_consistency_sc(g: &ExecutionGraph) -> bool {
    derive_hb_sc(g).is_irreflexive()
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LabelJson {
    kind: String,
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    loc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    val: Option<Value>,
    #[serde(rename = "valR", skip_serializing_if = "Option::is_none")]
    val_r: Option<Value>,
    #[serde(rename = "valW", skip_serializing_if = "Option::is_none")]
    val_w: Option<Value>,
}

#[derive(Serialize, Deserialize)]
struct EventJson {
    id: usize,
    /// 1-based thread number; null for initialization events.
    tid: Option<u32>,
    serial: u32,
    label: LabelJson,
}

#[derive(Serialize, Deserialize)]
pub struct GraphJson {
    events: Vec<EventJson>,
    rf: Vec<[usize; 2]>,
    mo: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    nonatomic: Vec<String>,
}

fn mode_name(m: crate::lang::Mode) -> String {
    m.name().to_string()
}

fn mode_from(name: &str) -> Result<crate::lang::Mode, GraphError> {
    use crate::lang::Mode;
    Ok(match name {
        "na" => Mode::Na,
        "rlx" => Mode::Rlx,
        "acq" => Mode::Acq,
        "rel" => Mode::Rel,
        "acqrel" => Mode::AcqRel,
        other => return Err(GraphError::Malformed(format!("unknown mode {other:?}"))),
    })
}

impl ExecutionGraph {
    pub fn to_json(&self) -> GraphJson {
        let events = self
            .events
            .iter()
            .enumerate()
            .map(|(id, e)| {
                let label = match e.label {
                    Label::R { mode, loc, val } => LabelJson {
                        kind: "R".into(),
                        mode: mode_name(mode),
                        loc: Some(self.loc_names[loc.index()].clone()),
                        val: Some(val),
                        val_r: None,
                        val_w: None,
                    },
                    Label::W { mode, loc, val } => LabelJson {
                        kind: "W".into(),
                        mode: mode_name(mode),
                        loc: Some(self.loc_names[loc.index()].clone()),
                        val: Some(val),
                        val_r: None,
                        val_w: None,
                    },
                    Label::Rmw {
                        mode,
                        loc,
                        val_r,
                        val_w,
                    } => LabelJson {
                        kind: "RMW".into(),
                        mode: mode_name(mode),
                        loc: Some(self.loc_names[loc.index()].clone()),
                        val: None,
                        val_r: Some(val_r),
                        val_w: Some(val_w),
                    },
                    Label::F { mode } => LabelJson {
                        kind: "F".into(),
                        mode: mode_name(mode),
                        loc: None,
                        val: None,
                        val_r: None,
                        val_w: None,
                    },
                };
                EventJson {
                    id,
                    tid: e.tid.map(|t| t.0 + 1),
                    serial: e.serial,
                    label,
                }
            })
            .collect();
        let rf = self
            .rf
            .iter()
            .enumerate()
            .filter_map(|(r, src)| src.map(|w| [w, r]))
            .collect();
        let mo = self
            .mo
            .iter()
            .enumerate()
            .filter(|(_, order)| !order.is_empty())
            .map(|(l, order)| (self.loc_names[l].clone(), order.clone()))
            .collect();
        let nonatomic = self
            .loc_names
            .iter()
            .zip(&self.loc_atomic)
            .filter(|(_, at)| !**at)
            .map(|(n, _)| n.clone())
            .collect();
        GraphJson {
            events,
            rf,
            mo,
            nonatomic,
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self, GraphError> {
        let mut loc_names: Vec<String> = Vec::new();
        let intern = |name: &str, loc_names: &mut Vec<String>| -> LocId {
            if let Some(i) = loc_names.iter().position(|n| n == name) {
                LocId(i as u32)
            } else {
                loc_names.push(name.to_string());
                LocId(loc_names.len() as u32 - 1)
            }
        };
        let mut events = Vec::new();
        for (at, e) in json.events.iter().enumerate() {
            if e.id != at {
                return Err(GraphError::Malformed(format!(
                    "event ids must be dense and ordered; found {} at {}",
                    e.id, at
                )));
            }
            let mode = mode_from(&e.label.mode)?;
            let need_loc = |label: &LabelJson| {
                label
                    .loc
                    .clone()
                    .ok_or_else(|| GraphError::Malformed("access label without loc".into()))
            };
            let label = match e.label.kind.as_str() {
                "R" => Label::R {
                    mode,
                    loc: intern(&need_loc(&e.label)?, &mut loc_names),
                    val: e
                        .label
                        .val
                        .ok_or_else(|| GraphError::Malformed("R without val".into()))?,
                },
                "W" => Label::W {
                    mode,
                    loc: intern(&need_loc(&e.label)?, &mut loc_names),
                    val: e
                        .label
                        .val
                        .ok_or_else(|| GraphError::Malformed("W without val".into()))?,
                },
                "RMW" => Label::Rmw {
                    mode,
                    loc: intern(&need_loc(&e.label)?, &mut loc_names),
                    val_r: e
                        .label
                        .val_r
                        .ok_or_else(|| GraphError::Malformed("RMW without valR".into()))?,
                    val_w: e
                        .label
                        .val_w
                        .ok_or_else(|| GraphError::Malformed("RMW without valW".into()))?,
                },
                "F" => Label::F { mode },
                other => {
                    return Err(GraphError::Malformed(format!(
                        "unknown label kind {other:?}"
                    )))
                }
            };
            events.push(Event {
                tid: e
                    .tid
                    .map(|t| ThreadId(t.checked_sub(1).expect("tid is 1-based"))),
                serial: e.serial,
                label,
            });
        }
        let loc_atomic: Vec<bool> = loc_names
            .iter()
            .map(|n| !json.nonatomic.contains(n))
            .collect();
        let mut mo = vec![Vec::new(); loc_names.len()];
        for (name, order) in &json.mo {
            let Some(l) = loc_names.iter().position(|n| n == name) else {
                return Err(GraphError::Malformed(format!(
                    "mo for unknown location {name:?}"
                )));
            };
            mo[l] = order.clone();
        }
        let mut rf = vec![None; events.len()];
        for [w, r] in &json.rf {
            if *w >= events.len() || *r >= events.len() {
                return Err(GraphError::Malformed("rf edge out of range".into()));
            }
            if rf[*r].is_some() {
                return Err(GraphError::Malformed(format!(
                    "read {r} has two rf sources"
                )));
            }
            rf[*r] = Some(*w);
        }
        let g = ExecutionGraph {
            loc_names,
            loc_atomic,
            events,
            rf,
            mo,
        };
        g.validate()?;
        Ok(g)
    }
}
