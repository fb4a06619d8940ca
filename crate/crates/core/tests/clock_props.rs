//! Property tests for the clock lattices.

use proptest::prelude::*;
use wmrobust::clocks::{CriticalPairs, LocationClock, LvcKey, ValueClock, VectorClock};
use wmrobust::ids::{LocId, ThreadId};

fn arb_lc() -> impl Strategy<Value = LocationClock> {
    proptest::collection::vec((0u32..6, 0u64..10), 0..6).prop_map(|entries| {
        let mut c = LocationClock::new();
        for (l, t) in entries {
            c.set_max(LocId(l), t);
        }
        c
    })
}

fn arb_vc() -> impl Strategy<Value = VectorClock> {
    proptest::collection::vec((0u32..4, 0u64..10), 0..5).prop_map(|entries| {
        let mut c = VectorClock::new();
        for (t, ts) in entries {
            c.set_max(ThreadId(t), ts);
        }
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn lc_join_is_semilattice(a in arb_lc(), b in arb_lc(), c in arb_lc()) {
        prop_assert_eq!(a.join(&b), b.join(&a));
        prop_assert_eq!(a.join(&b).join(&c), a.join(&b.join(&c)));
        prop_assert_eq!(a.join(&a), a.clone());
        prop_assert_eq!(a.join(&LocationClock::new()), a.clone());
    }

    #[test]
    fn lc_join_is_least_upper_bound(a in arb_lc(), b in arb_lc(), c in arb_lc()) {
        let ab = a.join(&b);
        prop_assert!(a.leq(&ab) && b.leq(&ab));
        if a.leq(&c) && b.leq(&c) {
            prop_assert!(ab.leq(&c));
        }
    }

    #[test]
    fn lc_lookup_after_join_is_max(a in arb_lc(), b in arb_lc()) {
        let ab = a.join(&b);
        for l in 0..6 {
            prop_assert_eq!(ab.get(LocId(l)), a.get(LocId(l)).max(b.get(LocId(l))));
        }
        let mut in_place = a.clone();
        in_place.join_in_place(&b);
        prop_assert_eq!(in_place, ab);
    }

    #[test]
    fn vc_leq_is_a_partial_order(a in arb_vc(), b in arb_vc(), c in arb_vc()) {
        prop_assert!(a.leq(&a));
        if a.leq(&b) && b.leq(&a) {
            prop_assert_eq!(a.clone(), b.clone());
        }
        if a.leq(&b) && b.leq(&c) {
            prop_assert!(a.leq(&c));
        }
        prop_assert_eq!(a.leq(&b), (0..4).all(|t| a.get(ThreadId(t)) <= b.get(ThreadId(t))));
    }

    #[test]
    fn lvc_join_laws(entries_a in proptest::collection::vec((0u32..2, -1i64..5), 0..5),
                     entries_b in proptest::collection::vec((0u32..2, -1i64..5), 0..5)) {
        let pairs = CriticalPairs::from_pairs([(LocId(0), 1), (LocId(1), 2)]);
        let key = |l: u32| LvcKey { loc: LocId(l), val: if l == 0 { Some(1) } else { Some(2) } };
        let build = |entries: &[(u32, i64)]| {
            let mut c = ValueClock::new();
            for &(l, t) in entries {
                c.set_max(key(l), t);
            }
            c
        };
        let (a, b) = (build(&entries_a), build(&entries_b));
        let ab = a.join(&b);
        prop_assert_eq!(ab.clone(), b.join(&a));
        prop_assert!(a.leq(&ab) && b.leq(&ab));
        for l in 0..2 {
            prop_assert_eq!(ab.get(key(l)), a.get(key(l)).max(b.get(key(l))));
            prop_assert!(ab.lookup(&pairs, LocId(l), key(l).val).is_ok());
        }
    }
}
