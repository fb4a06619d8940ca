//! The candidate enumeration reproduces the serialized corpus graphs: every
//! complete store-buffering and message-passing graph shipped as JSON is
//! among the oracle's candidates, event for event.

use std::ops::ControlFlow;
use std::path::PathBuf;
use wmrobust::graph::{ExecutionGraph, GraphJson};
use wmrobust::interp::Compiled;
use wmrobust::lang::parse;
use wmrobust::oracle::{enumerate_candidates, OracleLimits};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn load_graph(name: &str) -> ExecutionGraph {
    let gj: GraphJson =
        serde_json::from_str(&std::fs::read_to_string(corpus(name)).unwrap()).unwrap();
    ExecutionGraph::from_json(&gj).unwrap()
}

fn candidates(name: &str) -> Vec<ExecutionGraph> {
    let c = Compiled::new(parse(&std::fs::read_to_string(corpus(name)).unwrap()).unwrap());
    let mut out = Vec::new();
    enumerate_candidates(&c, 16, &OracleLimits::default(), |g| {
        out.push(g.clone());
        ControlFlow::Continue(())
    })
    .unwrap();
    out
}

#[test]
fn sb_candidates_include_all_four_serialized_graphs() {
    let cands = candidates("sb.lit");
    for i in 1..=4 {
        let g = load_graph(&format!("fig1-sb-{i}.json"));
        assert!(
            cands.contains(&g),
            "fig1-sb-{i} missing from the candidate stream"
        );
    }
}

/// The borderline prefix graph (t1 complete, t2 after its store, with t1's
/// read from the initial x2 write) is itself a candidate: candidates come
/// from every run prefix, not just complete runs.
#[test]
fn sb_candidates_include_the_borderline_prefix() {
    use wmrobust::graph::{Event, Label};
    use wmrobust::ids::{LocId, ThreadId};
    use wmrobust::lang::Mode;
    let mut g = ExecutionGraph::with_init(vec!["x1".into(), "x2".into()], vec![true, true]);
    let w1 = g.push_event(Event {
        tid: Some(ThreadId(0)),
        serial: 0,
        label: Label::W {
            mode: Mode::Rel,
            loc: LocId(0),
            val: 1,
        },
    });
    g.mo[0].push(w1);
    let r1 = g.push_event(Event {
        tid: Some(ThreadId(0)),
        serial: 1,
        label: Label::R {
            mode: Mode::Acq,
            loc: LocId(1),
            val: 0,
        },
    });
    g.rf[r1] = Some(g.init_event(LocId(1)));
    let w2 = g.push_event(Event {
        tid: Some(ThreadId(1)),
        serial: 0,
        label: Label::W {
            mode: Mode::Rel,
            loc: LocId(1),
            val: 1,
        },
    });
    g.mo[1].push(w2);
    g.validate().unwrap();
    assert!(
        candidates("sb.lit").contains(&g),
        "borderline prefix must be enumerated"
    );
}

#[test]
fn mp_candidates_include_the_inconsistent_third_graph() {
    let cands = candidates("mp.lit");
    for i in 1..=4 {
        let g = load_graph(&format!("fig1-mp-{i}.json"));
        assert!(
            cands.contains(&g),
            "fig1-mp-{i} missing from the candidate stream"
        );
    }
    // the third graph is enumerated as a candidate and only then rejected
    let g3 = load_graph("fig1-mp-3.json");
    assert!(!wmrobust::graph::check_consistency_rc20(&g3).is_consistent());
}
