use proptest::prelude::*;

use kaw_core::synthesis::{cpre, respected_region, solve_reach_avoid};
use kaw_core::{Abstraction, CellId, CellSet, GameObjective, Grid, HyperRect};

type Lists = Vec<Vec<Option<Vec<CellId>>>>;

fn line(n: usize) -> Grid {
    Grid::new(HyperRect::new(vec![0.0], vec![(n - 1) as f64]).unwrap(), vec![1.0], vec![false]).unwrap()
}

fn arb_game() -> impl Strategy<Value = (Lists, Vec<bool>, Vec<bool>, Vec<bool>)> {
    (1usize..40, 1usize..5).prop_flat_map(|(n, m)| {
        let succ = proptest::option::weighted(0.85, proptest::collection::btree_set(0..n as u32, 1..4));
        (
            proptest::collection::vec(proptest::collection::vec(succ, m), n),
            proptest::collection::vec(proptest::bool::weighted(0.1), n),
            proptest::collection::vec(proptest::bool::weighted(0.15), n),
            proptest::collection::vec(proptest::bool::weighted(0.15), n),
        )
            .prop_map(|(lists, target, avoid, extra)| {
                let lists: Lists = lists
                    .into_iter()
                    .map(|row| row.into_iter().map(|s| s.map(|s| s.into_iter().map(CellId).collect())).collect())
                    .collect();
                let avoid: Vec<bool> = avoid.iter().zip(&target).map(|(a, t)| *a && !*t).collect();
                (lists, target, avoid, extra)
            })
    })
}

fn set(flags: &[bool]) -> CellSet {
    CellSet::from_cells(flags.len(), flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| CellId(i as u32)))
}

fn build(lists: &Lists) -> Abstraction {
    Abstraction::from_lists(line(lists.len()), line(lists[0].len()), lists)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn controller_decreases_rank_and_stays_out_of_avoid((lists, target, avoid, _) in arb_game()) {
        let abs = build(&lists);
        let obj = GameObjective::new(set(&target), set(&avoid)).unwrap();
        let k = solve_reach_avoid(&abs, &obj).unwrap();
        prop_assert!(set(&target).is_subset(k.winning()));
        prop_assert!(k.winning().is_disjoint(&set(&avoid)));
        for x in k.winning().iter() {
            let r = k.rank(x).unwrap();
            if target[x.index()] {
                prop_assert_eq!(r, 0);
                prop_assert!(k.policy(x).is_none());
                continue;
            }
            prop_assert!(!k.allowed(x).is_empty());
            prop_assert_eq!(k.policy(x), k.allowed(x).first().copied());
            for &u in k.allowed(x) {
                for y in abs.post(x, u).unwrap() {
                    prop_assert!(k.rank(*y).is_some_and(|ry| ry < r));
                }
            }
        }
    }

    #[test]
    fn winning_set_is_a_fixpoint_of_cpre((lists, target, avoid, _) in arb_game()) {
        let abs = build(&lists);
        let obj = GameObjective::new(set(&target), set(&avoid)).unwrap();
        let k = solve_reach_avoid(&abs, &obj).unwrap();
        let step = cpre(&abs, k.winning(), &set(&avoid)).union(&set(&target));
        prop_assert_eq!(&step, k.winning());
    }

    #[test]
    fn enlarging_avoid_never_enlarges_winning((lists, target, avoid, extra) in arb_game()) {
        let abs = build(&lists);
        let bigger: Vec<bool> = (0..avoid.len()).map(|i| avoid[i] || (extra[i] && !target[i])).collect();
        let small = solve_reach_avoid(&abs, &GameObjective::new(set(&target), set(&avoid)).unwrap()).unwrap();
        let large = solve_reach_avoid(&abs, &GameObjective::new(set(&target), set(&bigger)).unwrap()).unwrap();
        prop_assert!(large.winning().is_subset(small.winning()));
        for x in large.winning().iter() {
            prop_assert!(large.rank(x) >= small.rank(x));
        }
        let r_small = respected_region(&abs, &set(&avoid)).unwrap();
        let r_large = respected_region(&abs, &set(&bigger)).unwrap();
        prop_assert!(r_large.is_subset(&r_small));
    }

    #[test]
    fn respected_region_is_closed((lists, _t, avoid, _) in arb_game()) {
        let abs = build(&lists);
        let r = respected_region(&abs, &set(&avoid)).unwrap();
        prop_assert!(r.is_disjoint(&set(&avoid)));
        for x in r.iter() {
            let stays = (0..abs.num_inputs()).any(|u| {
                abs.post(x, CellId(u as u32)).is_ok_and(|s| !abs.is_blocked(x, CellId(u as u32)).unwrap() && s.iter().all(|y| r.contains(*y)))
            });
            prop_assert!(stays, "cell {x:?} cannot stay");
        }
    }
}
