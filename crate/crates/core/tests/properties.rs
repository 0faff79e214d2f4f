use proptest::prelude::*;

use haem_core::lang::Registry;
use haem_core::oracle::Oracle;
use haem_core::reduce::Reducer;
use haem_core::syntax::term_from_str;
use haem_core::term::{System, Term};
use haem_core::translate::{erase, simulate_step};

fn arith() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u64..4).prop_map(|n| n.to_string()),
        Just("n".to_owned()),
        Just("(S n)".to_owned()),
    ]
}

fn cite(labeled: bool) -> impl Strategy<Value = String> {
    (prop::bool::ANY, prop::bool::ANY).prop_map(move |(hyp, a)| {
        let (label, pred) = if a {
            ("a", "(eq x 1)")
        } else {
            ("b", "(not_eq x 0)")
        };
        let label = if labeled {
            format!("{label} ")
        } else {
            String::new()
        };
        if hyp {
            format!("(hyp {label}{pred} x)")
        } else {
            format!("(wit {label}{pred} x)")
        }
    })
}

/// Source text of arbitrary, possibly ill-formed terms of one system.
fn term(labeled: bool) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("true".to_owned()),
        Just("y".to_owned()),
        cite(labeled),
        (cite(labeled), arith()).prop_map(|(c, m)| format!("(aapp {c} {m})")),
    ];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        let em_label = if labeled { "a " } else { "" };
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, a)| format!("(app (lam y {f}) {a})")),
            (inner.clone(), inner.clone()).prop_map(|(f, a)| format!("(app {f} {a})")),
            (inner.clone(), arith()).prop_map(|(u, m)| format!("(aapp (alam n {u}) {m})")),
            (inner.clone(), arith()).prop_map(|(u, m)| format!("(aapp {u} {m})")),
            (inner.clone(), inner.clone()).prop_map(|(u, v)| format!("(proj0 (pair {u} {v}))")),
            inner.clone().prop_map(|u| format!("(proj1 {u})")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(s, l, r)| format!("(case {s} y {l} z {r})")),
            inner.clone().prop_map(|u| format!("(inj1 {u})")),
            (arith(), inner.clone()).prop_map(|(m, u)| format!("(wpair {m} {u})")),
            (inner.clone(), inner.clone()).prop_map(|(s, b)| format!("(dest {s} k y {b})")),
            (inner.clone(), arith()).prop_map(|(b, m)| format!("(rec {b} (alam n (lam y y)) {m})")),
            (inner.clone(), inner.clone())
                .prop_map(move |(l, r)| format!("(em {em_label}{l} {r})")),
        ]
    })
}

fn parse(src: &str) -> Term {
    term_from_str(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rendering_round_trips(src in term(true)) {
        let t = parse(&src);
        let again = parse(&t.to_string());
        prop_assert!(again.alpha_eq(&t));
        prop_assert_eq!(again.to_string(), t.to_string());
    }

    #[test]
    fn erasure_keeps_positions(src in term(true)) {
        let t = parse(&src);
        let u = erase(&t);
        prop_assert_eq!(t.positions(), u.positions());
        prop_assert_eq!(erase(&u), u.clone());
        prop_assert!(u.check_well_formed(System::Nem).is_ok());
    }

    #[test]
    fn oracle_agrees_in_em1(src in term(true)) {
        let t = parse(&src);
        let red = Reducer::new(Registry::standard(), System::Em1).with_witness_bound(3);
        if let Ok(mine) = red.redexes(&t) {
            let oracle = Oracle::new(Registry::standard(), System::Em1, 3);
            prop_assert_eq!(&mine, &oracle.redexes(&t));
            for r in &mine {
                let a = red.apply_step(&t, r).unwrap();
                let b = oracle.contract(&t, r).unwrap();
                prop_assert!(a.alpha_eq(&b), "{} at {}: {} vs {}", t, r, a, b);
            }
        }
    }

    #[test]
    fn oracle_agrees_in_nem(src in term(false)) {
        let t = parse(&src);
        let red = Reducer::new(Registry::standard(), System::Nem).with_witness_bound(3);
        let mine = red.redexes(&t).unwrap();
        let oracle = Oracle::new(Registry::standard(), System::Nem, 3);
        prop_assert_eq!(&mine, &oracle.redexes(&t));
    }

    #[test]
    fn simulation_paths_replay(src in term(true)) {
        let t = parse(&src);
        let red = Reducer::new(Registry::standard(), System::Em1);
        if let Ok(redexes) = red.redexes(&t) {
            for r in &redexes {
                let p = simulate_step(&red, &t, r).unwrap();
                let w = erase(&red.apply_step(&t, r).unwrap());
                prop_assert!(!p.steps.is_empty());
                prop_assert_eq!(p.verify(red.registry(), red.witness_bound(), &w), Ok(()));
                // replay is deterministic
                let a = p.replay(red.registry(), red.witness_bound()).unwrap();
                let b = p.replay(red.registry(), red.witness_bound()).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
