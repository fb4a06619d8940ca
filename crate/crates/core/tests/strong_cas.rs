//! Strong CAS needs all three legs of its check: a stale *expected* value
//! (store-only clocks), a stale tracked value different from the expected
//! one, and a stale value outside the tracked set (the per-location default
//! key). A strong CAS that could read any of those under RC20 would fail
//! where SC forces it to succeed.

use wmrobust::interp::{self, Compiled, Machine, Options};
use wmrobust::lang::parse;
use wmrobust::lc::Check;
use wmrobust::oracle::{self, OracleLimits};

fn compiled(src: &str) -> Compiled {
    Compiled::new(parse(src).unwrap())
}

/// x briefly holds 5 (untracked) before settling at the expected value 1;
/// the flag is relaxed, so the reader is not hb-aware of either write. The
/// CAS must succeed under SC, yet RC20 lets it read the stale 5 and fail:
/// the default-key leg flags.
const STALE_UNTRACKED: &str = "\
atomic x, y;
thread t1 { x.store(5, rlx); x.store(1, rlx); y.store(1, rlx); }
thread t2 { r1 = y.load(acq); r2 = cas_strong(x, 1, 7, acqrel); }
";

/// As above, but a third thread's wait makes (x, 5) a tracked pair, so the
/// some-other-value leg fires instead of the default key.
const STALE_TRACKED: &str = "\
atomic x, y;
thread t1 { x.store(5, rlx); x.store(1, rlx); y.store(1, rlx); }
thread t2 { r1 = y.load(acq); r2 = cas_strong(x, 1, 7, acqrel); }
thread t3 { wait(x, 5); }
";

#[test]
fn stale_untracked_value_fires_the_default_key_leg() {
    let c = compiled(STALE_UNTRACKED);
    let mut m = Machine::new(&c, Options::default()).unwrap();
    for tid in [0, 0, 0, 1] {
        m.commit(tid).unwrap();
    }
    let x = wmrobust::ids::LocId(0);
    let tau = wmrobust::ids::ThreadId(1);
    let hit =
        m.lc.check(tau, x, Check::StrongCas(1))
            .expect("default-key leg fires");
    assert!(
        !hit.store_based,
        "the stale-other-value legs compare plain timestamps"
    );
    assert_eq!(
        (hit.hb_ts, hit.sc_ts),
        (0, 1),
        "the overwritten write of 5 has timestamp 1"
    );
    // the store-only leg alone stays quiet: the expected value 1 is the
    // latest write, not an overwritten one
    assert!(m.lc.check(tau, x, Check::Bcas(1)).is_none());
}

#[test]
fn stale_tracked_value_fires_the_other_value_leg() {
    let c = compiled(STALE_TRACKED);
    assert!(c.pairs.contains(wmrobust::ids::LocId(0), 5));
    let mut m = Machine::new(&c, Options::default()).unwrap();
    for tid in [0, 0, 0, 1] {
        m.commit(tid).unwrap();
    }
    let hit =
        m.lc.check(
            wmrobust::ids::ThreadId(1),
            wmrobust::ids::LocId(0),
            Check::StrongCas(1),
        )
        .expect("tracked other-value leg fires");
    assert_eq!((hit.hb_ts, hit.sc_ts), (0, 1));
}

#[test]
fn strong_cas_staleness_agrees_with_the_oracle() {
    for src in [STALE_UNTRACKED, STALE_TRACKED] {
        let c = compiled(src);
        assert!(
            oracle::is_robust(&c, 4, &OracleLimits::default()).is_non_robust(),
            "a failing read of the stale value is RC20-consistent but SC forbids it"
        );
        let opts = Options {
            verify: true,
            ..Options::default()
        };
        let out = interp::explore(&c, 100_000, &opts).unwrap();
        assert!(
            out.violations
                .iter()
                .any(|v| v.engine == "lc" && v.access == "cas_strong"),
            "{:?}",
            out.violations
        );
    }
    // strengthening the flag to release/acquire makes both robust
    let robust = "\
atomic x, y;
thread t1 { x.store(5, rlx); x.store(1, rlx); y.store(1, rel); }
thread t2 { r1 = y.load(acq); if (r1 == 1) { r2 = cas_strong(x, 1, 7, acqrel); } }
";
    let c = compiled(robust);
    assert!(oracle::is_robust(&c, 4, &OracleLimits::default()).is_robust());
    let out = interp::explore(&c, 100_000, &Options::default()).unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
}
