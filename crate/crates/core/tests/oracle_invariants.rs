//! Oracle-side invariants: witness search over SC runs agrees with the
//! candidate-graph robustness definition, and extended witnesses always
//! come with a standard witness in some (possibly different) schedule.

use wmrobust::interp::{Compiled, Options};
use wmrobust::lang::parse;
use wmrobust::oracle::{self, OracleLimits, WitnessKind};

fn corpus(name: &str) -> Compiled {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    Compiled::new(parse(&std::fs::read_to_string(path).unwrap()).unwrap())
}

const SMALL_CORPUS: &[&str] = &[
    "sb.lit",
    "mp.lit",
    "mp-store-rlx.lit",
    "mp-load-rlx.lit",
    "2p2w.lit",
    "sb-writes.lit",
    "sb-fadd.lit",
    "ww-fadd.lit",
    "ww-plain.lit",
    "barw11.lit",
    "barw02.lit",
    "barw00.lit",
    "mp-na.lit",
    "mp-na-rlx.lit",
];

/// findWitnessSC returns a witness iff the candidate-graph oracle says
/// non-robust, over the whole loop-free corpus at bound 2.
#[test]
fn witness_search_matches_robustness_verdict() {
    let opts = Options {
        loop_bound: 2,
        ..Options::default()
    };
    for name in SMALL_CORPUS {
        let c = corpus(name);
        let witnesses = oracle::find_witnesses(&c, &opts, 64).unwrap();
        let robust = oracle::is_robust(&c, 2, &OracleLimits::default()).is_robust();
        assert_eq!(
            witnesses.is_empty(),
            robust,
            "{name}: witnesses {witnesses:?} vs robust {robust}"
        );
    }
}

/// Whenever an extended witness exists on some schedule, a standard witness
/// exists on some schedule too.
#[test]
fn extended_witness_implies_standard_witness_somewhere() {
    let opts = Options {
        loop_bound: 2,
        ..Options::default()
    };
    let mut extended_seen = 0;
    for name in SMALL_CORPUS {
        let c = corpus(name);
        let witnesses = oracle::find_witnesses(&c, &opts, 64).unwrap();
        let has_ext = witnesses.iter().any(|w| w.kind == WitnessKind::Extended);
        let has_std = witnesses.iter().any(|w| w.kind == WitnessKind::Standard);
        if has_ext {
            extended_seen += 1;
            assert!(
                has_std,
                "{name}: extended witness without a standard one: {witnesses:?}"
            );
        }
    }
    assert!(extended_seen >= 4, "the corpus exercises the implication");
}

/// The predictive gap: the trailing-writes program has schedules (the fully
/// sequential one) where only the extended witness is present, never the
/// standard one.
#[test]
fn sequential_schedule_has_extended_witness_only() {
    use wmrobust::clocksem::GraphSem;
    use wmrobust::ids::ThreadId;
    use wmrobust::interp::Machine;
    use wmrobust::lang::{CheckKind, Pending};
    let c = corpus("sb-writes.lit");
    let mut m = Machine::new(&c, Options::default()).unwrap();
    for tid in [0, 0, 0, 1] {
        m.commit(tid).unwrap();
    }
    // t2 is now about to read x1
    let Ok(Pending::Access(desc)) = m.pending_of(1) else {
        panic!("t2 should be at its load")
    };
    assert_eq!(desc.check, CheckKind::Read);
    let sem = GraphSem::new(&m.graph);
    assert!(
        !sem.standard_witness(
            ThreadId(1),
            desc.loc,
            wmrobust::lc::Check::Read,
            &c.pairs,
            true
        ),
        "standard witness misses this run"
    );
    assert!(
        sem.graph_check(
            ThreadId(1),
            desc.loc,
            wmrobust::lc::Check::Read,
            &c.pairs,
            true
        )
        .is_some(),
        "extended witness catches it"
    );
}
