use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kaw_core::knowledge::{parse_concept, proximity, Interpretation, KnowledgeBase, RoleDef};
use kaw_core::{CellId, CellSet, Grid, HyperRect};

fn line(n: usize) -> Grid {
    Grid::new(HyperRect::new(vec![0.0], vec![(n - 1) as f64]).unwrap(), vec![1.0], vec![false]).unwrap()
}

fn set(n: usize, flags: &[bool]) -> CellSet {
    CellSet::from_cells(n, flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| CellId(i as u32)))
}

/// Random interpretation over `n` cells with atoms `A`, `B` and an explicit role `r`.
fn interpretation(a: &[bool], b: &[bool], edges: &[(usize, usize)]) -> (Interpretation, Vec<Vec<usize>>) {
    let n = a.len();
    let mut kb = KnowledgeBase::new();
    kb.declare_concept("A").unwrap();
    kb.declare_concept("B").unwrap();
    kb.declare_role("r", RoleDef::Explicit).unwrap();
    let mut adj = vec![Vec::new(); n];
    for &(x, y) in edges {
        kb.assert_role(CellId(x as u32), CellId(y as u32), "r").unwrap();
        adj[x].push(y);
    }
    let extents = BTreeMap::from([("A".to_string(), set(n, a)), ("B".to_string(), set(n, b))]);
    (Interpretation::from_extents(&kb, &line(n), extents, Vec::new()).unwrap(), adj)
}

fn arb_case() -> impl Strategy<Value = (Vec<bool>, Vec<bool>, Vec<(usize, usize)>)> {
    (1usize..25).prop_flat_map(|n| {
        (
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec((0..n, 0..n), 0..3 * n),
        )
    })
}

fn eval(i: &Interpretation, text: &str) -> CellSet {
    i.eval(&parse_concept(text).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn boolean_and_role_dualities((a, b, edges) in arb_case()) {
        let (i, _) = interpretation(&a, &b, &edges);
        prop_assert_eq!(eval(&i, "!(A & B)"), eval(&i, "!A | !B"));
        prop_assert_eq!(eval(&i, "!(A | B)"), eval(&i, "!A & !B"));
        prop_assert_eq!(eval(&i, "forall r.A"), eval(&i, "!(exists r.!A)"));
        prop_assert_eq!(eval(&i, "exists r.(A | B)"), eval(&i, "exists r.A | exists r.B"));
        prop_assert_eq!(eval(&i, "forall r.(A & B)"), eval(&i, "forall r.A & forall r.B"));
        prop_assert_eq!(eval(&i, "A | !A"), eval(&i, "Top"));
    }

    #[test]
    fn role_restrictions_match_their_definition((a, b, edges) in arb_case()) {
        let (i, adj) = interpretation(&a, &b, &edges);
        let n = a.len();
        let exists: Vec<bool> = (0..n).map(|x| adj[x].iter().any(|&y| a[y])).collect();
        let forall: Vec<bool> = (0..n).map(|x| adj[x].iter().all(|&y| b[y])).collect();
        prop_assert_eq!(eval(&i, "exists r.A"), set(n, &exists));
        prop_assert_eq!(eval(&i, "forall r.B"), set(n, &forall));
    }
}

/// Inner approximation of the proximity relation from a 5 x 5 x 5 sample of
/// the source cell and a 5 x 5 sample of the target cell's planar footprint.
/// Returns (sampled minimum distance, sampled maximum directional term).
fn sampled(grid: &Grid, x: CellId, y: CellId) -> (f64, f64) {
    let rx = grid.cell_rect(x).unwrap();
    let ry = grid.cell_rect(y).unwrap();
    let pts = |lo: f64, hi: f64| (0..5).map(move |k| lo + (hi - lo) * k as f64 / 4.0);
    let mut min_d = f64::INFINITY;
    let mut max_dir = f64::NEG_INFINITY;
    for x1 in pts(rx.lower[0], rx.upper[0]) {
        for x2 in pts(rx.lower[1], rx.upper[1]) {
            for x3 in pts(rx.lower[2], rx.upper[2]) {
                for y1 in pts(ry.lower[0], ry.upper[0]) {
                    for y2 in pts(ry.lower[1], ry.upper[1]) {
                        min_d = min_d.min((y1 - x1).hypot(y2 - x2));
                        max_dir = max_dir.max((y1 - x1) * x3.cos() + (y2 - x2) * x3.sin());
                    }
                }
            }
        }
    }
    (min_d, max_dir)
}

#[test]
fn proximity_agrees_with_a_sampled_oracle() {
    let grid =
        Grid::new(HyperRect::new(vec![0.0, 0.0, -PI], vec![6.0, 6.0, PI]).unwrap(), vec![0.3, 0.3, 0.52], vec![
            false, false, true,
        ])
        .unwrap();
    let range = 1.5;
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let (mut related, mut borderline) = (0, 0);
    for _ in 0..500 {
        let x = CellId(rng.random_range(0..grid.len() as u32));
        let cx = grid.center(x).unwrap();
        // targets concentrated around the detection range
        let r = rng.random_range(0.0..2.5);
        let phi = rng.random_range(-PI..PI);
        let p = [cx[0] + r * phi.cos(), cx[1] + r * phi.sin(), rng.random_range(-PI..PI)];
        let Ok(y) = grid.quantize(&p) else { continue };
        let exact = proximity(&grid, x, y, range).unwrap();
        let (min_d, max_dir) = sampled(&grid, x, y);
        // ties at the range or at a zero directional term differ only by rounding
        if min_d < range - 1e-9 && max_dir > 1e-9 {
            assert!(exact, "sampled witness but not related: {x:?} {y:?}");
        }
        if exact {
            related += 1;
            if !(min_d < range && max_dir > 1e-9) {
                // the samples can only miss by less than their spacing
                let slack = 0.3 / 4.0 * 2f64.sqrt() + 1e-9;
                assert!(min_d < range + slack && max_dir > -(slack + 0.13), "{x:?} {y:?}: {min_d} {max_dir}");
                borderline += 1;
            }
        }
    }
    assert!(related > 50, "only {related} related pairs sampled");
    assert!(borderline < related / 2);
}
