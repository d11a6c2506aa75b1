use std::collections::BTreeSet;

use proptest::prelude::*;

use kaw_core::spec::{check_trace, parse_ltl, satisfaction};
use kaw_core::LtlFormula;

fn arb_formula() -> impl Strategy<Value = LtlFormula> {
    let leaf = prop_oneof![
        Just(LtlFormula::True),
        Just(LtlFormula::prop("p")),
        Just(LtlFormula::prop("q")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(LtlFormula::not),
            inner.clone().prop_map(LtlFormula::next),
            inner.clone().prop_map(LtlFormula::always),
            inner.clone().prop_map(LtlFormula::eventually),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| LtlFormula::until(a, b)),
        ]
    })
}

fn arb_trace() -> impl Strategy<Value = Vec<BTreeSet<String>>> {
    proptest::collection::vec((any::<bool>(), any::<bool>()), 1..9).prop_map(|v| {
        v.into_iter()
            .map(|(p, q)| {
                let mut s = BTreeSet::new();
                if p {
                    s.insert("p".to_string());
                }
                if q {
                    s.insert("q".to_string());
                }
                s
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn desugaring_preserves_truth(phi in arb_formula(), trace in arb_trace()) {
        prop_assert_eq!(check_trace(&phi, &trace), check_trace(&phi.desugar(), &trace));
    }

    #[test]
    fn printed_formulas_evaluate_alike(phi in arb_formula(), trace in arb_trace()) {
        let back = parse_ltl(&phi.to_string()).unwrap();
        prop_assert_eq!(check_trace(&phi, &trace), check_trace(&back, &trace));
    }

    #[test]
    fn temporal_identities(a in arb_formula(), b in arb_formula(), trace in arb_trace()) {
        let holds = |name: &str, i: usize| trace[i].contains(name);
        let n = trace.len();
        let sat = |f: &LtlFormula| satisfaction(f, n, &holds);
        prop_assert_eq!(sat(&LtlFormula::eventually(a.clone())), sat(&LtlFormula::until(LtlFormula::True, a.clone())));
        prop_assert_eq!(
            sat(&LtlFormula::always(a.clone())),
            sat(&LtlFormula::not(LtlFormula::eventually(LtlFormula::not(a.clone()))))
        );
        // expansion law of until
        let unfolded = LtlFormula::or(
            b.clone(),
            LtlFormula::and(a.clone(), LtlFormula::next(LtlFormula::until(a.clone(), b.clone()))),
        );
        prop_assert_eq!(sat(&LtlFormula::until(a, b)), sat(&unfolded));
    }
}

#[test]
fn empty_trace_satisfies_nothing() {
    for text in ["true", "G p", "!p", "p U q"] {
        assert!(!check_trace(&parse_ltl(text).unwrap(), &[]), "{text}");
    }
}
