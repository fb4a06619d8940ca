//! Graph-model invariants: the derived-relation inclusions and the
//! agreement of the SC-consistency predicate with the linearization-based
//! definition, checked by exhaustive linearization search on small graphs.

use std::ops::ControlFlow;
use wmrobust::graph::{
    check_consistency_sc, derive, derive_hb_ra, derive_hb_rc20, derive_hb_sc, ExecutionGraph,
};
use wmrobust::interp::Compiled;
use wmrobust::lang::parse;
use wmrobust::oracle::{enumerate_candidates, OracleLimits};

fn candidates_of(src: &str, cap: usize) -> Vec<ExecutionGraph> {
    let c = Compiled::new(parse(src).unwrap());
    let mut out = Vec::new();
    enumerate_candidates(&c, 4, &OracleLimits::default(), |g| {
        out.push(g.clone());
        if out.len() >= cap {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .unwrap();
    out
}

const SB_RA: &str = "\
atomic x1, x2;
thread t1 { x1.store(1, rel); r1 = x2.load(acq); }
thread t2 { x2.store(1, rel); r2 = x1.load(acq); }
";

const MIXED: &str = "\
atomic x1, x2;
thread t1 { x1.store(1, rlx); fence(rel); r1 = fadd(x2, 1, rlx); }
thread t2 { x2.store(1, rel); r2 = x1.load(acq); }
";

#[test]
fn hb_ra_contained_in_hb_sc_and_equals_hb_rc20_on_ra_graphs() {
    for g in candidates_of(SB_RA, 400) {
        let hb_ra = derive_hb_ra(&g).expect("RA graph");
        let hb_sc = derive_hb_sc(&g);
        let hb_rc20 = derive_hb_rc20(&g);
        for (i, j) in hb_ra.pairs() {
            assert!(hb_sc.get(i, j), "hb_RA ⊆ hb_SC");
        }
        // on pure release/acquire graphs every rf edge synchronizes
        assert_eq!(hb_rc20, hb_ra, "rf ⊆ sw makes the two hb notions agree");
    }
}

#[test]
fn hb_rc20_contained_in_hb_sc_on_mixed_graphs() {
    for g in candidates_of(MIXED, 400) {
        let r = derive(&g);
        for (i, j) in r.hb.pairs() {
            assert!(
                r.hb_sc.get(i, j),
                "sw edges are rf chains, all inside hb_SC"
            );
        }
    }
}

/// Linearization-based SC definition: po ∪ rf ∪ mo extends to a total order
/// in which every read is immediately justified by the last same-location
/// write before it.
fn sc_by_linearization(g: &ExecutionGraph) -> bool {
    let n = g.n_events();
    let r = derive(g);
    // order must extend po, rf (source first), and mo
    let mut must_precede = r.po.clone();
    for (read, src) in g.rf.iter().enumerate() {
        if let Some(w) = src {
            must_precede.set(*w, read);
        }
    }
    for order in g.mo.iter() {
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                must_precede.set(order[i], order[j]);
            }
        }
    }
    fn search(
        g: &ExecutionGraph,
        must_precede: &wmrobust::graph::Rel,
        placed: &mut Vec<usize>,
        used: &mut Vec<bool>,
        last_write: &mut Vec<Option<usize>>,
    ) -> bool {
        let n = g.n_events();
        if placed.len() == n {
            return true;
        }
        for e in 0..n {
            if used[e] {
                continue;
            }
            if (0..n).any(|p| must_precede.get(p, e) && !used[p]) {
                continue;
            }
            // a read must read from the latest placed same-location write
            if let Some(loc) = g.events[e].loc() {
                if g.events[e].is_read() && g.rf[e] != last_write[loc.index()] {
                    continue;
                }
                let saved = last_write[loc.index()];
                if g.events[e].is_write() {
                    last_write[loc.index()] = Some(e);
                }
                used[e] = true;
                placed.push(e);
                if search(g, must_precede, placed, used, last_write) {
                    return true;
                }
                placed.pop();
                used[e] = false;
                last_write[loc.index()] = saved;
            } else {
                used[e] = true;
                placed.push(e);
                if search(g, must_precede, placed, used, last_write) {
                    return true;
                }
                placed.pop();
                used[e] = false;
            }
        }
        false
    }
    let mut placed = Vec::new();
    let mut used = vec![false; n];
    let mut last_write = vec![None; g.mo.len()];
    search(g, &must_precede, &mut placed, &mut used, &mut last_write)
}

#[test]
fn sc_consistency_agrees_with_linearization_search() {
    let mut checked = 0;
    let mut inconsistent = 0;
    for src in [SB_RA, MIXED] {
        for g in candidates_of(src, 600) {
            if g.n_events() > 8 {
                continue;
            }
            let by_def = check_consistency_sc(&g);
            let by_lin = sc_by_linearization(&g);
            assert_eq!(by_def, by_lin, "events: {:?}", g.events);
            checked += 1;
            if !by_def {
                inconsistent += 1;
            }
        }
    }
    assert!(checked > 100, "checked {checked}");
    assert!(
        inconsistent > 0,
        "the sample must contain SC-inconsistent graphs"
    );
}
