//! Finite abstractions `(X̄, Ū, T)` of sampled continuous systems.
//!
//! For every state cell and input point the growth-bound reach box of the cell
//! is computed, and every state cell that some point of that box quantizes to
//! becomes a successor. If the
//! box leaves the gridded domain along a non-periodic dimension the pair is
//! *blocked*: it has no successors and the input is unusable from that cell.
//!
//! Successor lists are stored in compressed sparse row form, indexed by
//! `state * |Ū| + input`.

mod cache;

use std::f64::consts::PI;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ContinuousSystem, ReachSet};
use crate::grid::{CellId, Grid, GridError};

pub use cache::CacheError;

#[derive(Debug, Error)]
pub enum AbstractionError {
    #[error("state grid has {grid} dimensions but the system has {system}")]
    StateDim { grid: usize, system: usize },
    #[error("input grid has {grid} dimensions but the system has {system}")]
    InputDim { grid: usize, system: usize },
    #[error("state dimension {0} must be periodic over [-pi, pi] exactly when the model treats it as an angle")]
    AngleMismatch(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Which concrete inputs a transition `(x̄, ū, x̄')` accounts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSemantics {
    /// Only the grid input point itself, which is what the controller applies.
    #[default]
    Point,
    /// Every input in the input cell around the grid point.
    Cell,
}

impl InputSemantics {
    fn as_str(self) -> &'static str {
        match self {
            InputSemantics::Point => "point",
            InputSemantics::Cell => "cell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbstractionStats {
    pub states: usize,
    pub inputs: usize,
    pub transitions: usize,
    pub blocked_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Abstraction {
    grid_x: Grid,
    grid_u: Grid,
    tau: f64,
    fingerprint: String,
    offsets: Vec<u64>,
    successors: Vec<CellId>,
    blocked: FixedBitSet,
}

/// Identifies the system a cached abstraction was built for.
pub fn system_fingerprint(sys: &ContinuousSystem, semantics: InputSemantics) -> String {
    let w = sys.disturbance();
    format!(
        "{};tau={:?};w={:?}..{:?};l={:?};g={:?};inputs={}",
        sys.field().name(),
        sys.tau(),
        w.lower,
        w.upper,
        sys.lipschitz(),
        sys.input_gain(),
        semantics.as_str()
    )
}

/// Checks grid dimensions against the system and that exactly the model's angle
/// dimensions are periodic over `[-pi, pi]`.
pub fn check_compatible(sys: &ContinuousSystem, grid_x: &Grid, grid_u: &Grid) -> Result<(), AbstractionError> {
    if grid_x.dim() != sys.state_dim() {
        return Err(AbstractionError::StateDim { grid: grid_x.dim(), system: sys.state_dim() });
    }
    if grid_u.dim() != sys.input_dim() {
        return Err(AbstractionError::InputDim { grid: grid_u.dim(), system: sys.input_dim() });
    }
    let angles = sys.field().angle_dims();
    for d in 0..grid_x.dim() {
        let is_angle = angles.contains(&d);
        let b = grid_x.bounds();
        let full_circle = (b.lower[d] + PI).abs() < 1e-9 && (b.upper[d] - PI).abs() < 1e-9;
        if is_angle != grid_x.periodic()[d] || (is_angle && !full_circle) {
            return Err(AbstractionError::AngleMismatch(d));
        }
    }
    Ok(())
}

/// Successors of one state cell under one input; `None` if blocked.
fn compute_post(
    sys: &ContinuousSystem,
    grid_x: &Grid,
    extent: &crate::grid::HyperRect,
    cell: &ReachSet,
    u: &[f64],
    input_radius: Option<&[f64]>,
) -> Option<Vec<CellId>> {
    let reach = sys.reach_with_input_radius(cell, u, input_radius);
    let mut per_dim = Vec::with_capacity(grid_x.dim());
    for d in 0..grid_x.dim() {
        let lo = reach.center[d] - reach.radius[d];
        let hi = reach.center[d] + reach.radius[d];
        if !grid_x.periodic()[d] && (lo < extent.lower[d] || hi > extent.upper[d]) {
            return None;
        }
        per_dim.push(grid_x.indices_quantized(d, lo, hi));
    }
    let mut out = Vec::new();
    grid_x.for_each_product(&per_dim, |c| out.push(c));
    out.sort_unstable();
    out.dedup();
    Some(out)
}

impl Abstraction {
    /// Builds the abstraction, parallel over state cells. The result does not
    /// depend on the number of worker threads.
    pub fn build(
        sys: &ContinuousSystem,
        grid_x: &Grid,
        grid_u: &Grid,
        semantics: InputSemantics,
    ) -> Result<Self, AbstractionError> {
        check_compatible(sys, grid_x, grid_u)?;
        let nu = grid_u.len();
        let extent = grid_x.covered_extent();
        let radius = grid_x.cell_radius();
        let input_radius = grid_u.cell_radius();
        let inputs: Vec<Vec<f64>> = grid_u.cells().map(|u| grid_u.center(u)).collect::<Result<_, _>>()?;
        let input_radius = match semantics {
            InputSemantics::Point => None,
            InputSemantics::Cell => Some(input_radius.as_slice()),
        };

        let per_state: Vec<(Vec<u32>, Vec<CellId>)> = (0..grid_x.len())
            .into_par_iter()
            .map(|x| {
                let cell = ReachSet::new(grid_x.center(CellId::from(x)).expect("valid cell"), radius.clone());
                let mut lens = Vec::with_capacity(nu);
                let mut succ = Vec::new();
                for u in &inputs {
                    match compute_post(sys, grid_x, &extent, &cell, u, input_radius) {
                        Some(list) => {
                            lens.push(list.len() as u32 + 1);
                            succ.extend(list);
                        }
                        None => lens.push(0),
                    }
                }
                (lens, succ)
            })
            .collect();

        let total: usize = per_state.iter().map(|(_, s)| s.len()).sum();
        let mut offsets = Vec::with_capacity(grid_x.len() * nu + 1);
        let mut successors = Vec::with_capacity(total);
        let mut blocked = FixedBitSet::with_capacity(grid_x.len() * nu);
        offsets.push(0u64);
        for (x, (lens, succ)) in per_state.into_iter().enumerate() {
            for (u, &tag) in lens.iter().enumerate() {
                if tag == 0 {
                    blocked.insert(x * nu + u);
                }
                let len = tag.saturating_sub(1) as u64;
                offsets.push(offsets.last().unwrap() + len);
            }
            successors.extend(succ);
        }
        Ok(Self {
            grid_x: grid_x.clone(),
            grid_u: grid_u.clone(),
            tau: sys.tau(),
            fingerprint: system_fingerprint(sys, semantics),
            offsets,
            successors,
            blocked,
        })
    }

    /// Builds an abstraction directly from successor lists (`None` = blocked),
    /// indexed `[state][input]`. Intended for hand-made and randomized games.
    pub fn from_lists(grid_x: Grid, grid_u: Grid, lists: &[Vec<Option<Vec<CellId>>>]) -> Self {
        let nx = grid_x.len();
        let nu = grid_u.len();
        assert_eq!(lists.len(), nx, "one row per state cell");
        let mut offsets = vec![0u64];
        let mut successors = Vec::new();
        let mut blocked = FixedBitSet::with_capacity(nx * nu);
        for (x, row) in lists.iter().enumerate() {
            assert_eq!(row.len(), nu, "one entry per input");
            for (u, entry) in row.iter().enumerate() {
                match entry {
                    Some(list) => {
                        let mut list = list.clone();
                        list.sort_unstable();
                        list.dedup();
                        assert!(list.iter().all(|c| c.index() < nx), "successor out of range");
                        successors.extend(list);
                    }
                    None => blocked.insert(x * nu + u),
                }
                offsets.push(successors.len() as u64);
            }
        }
        Self {
            grid_x,
            grid_u,
            tau: 1.0,
            fingerprint: "explicit".to_string(),
            offsets,
            successors,
            blocked,
        }
    }

    pub fn grid_x(&self) -> &Grid {
        &self.grid_x
    }

    pub fn grid_u(&self) -> &Grid {
        &self.grid_u
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn num_states(&self) -> usize {
        self.grid_x.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.grid_u.len()
    }

    fn pair(&self, x: CellId, u: CellId) -> Result<usize, GridError> {
        if x.index() >= self.num_states() {
            return Err(GridError::InvalidCell(x.index()));
        }
        if u.index() >= self.num_inputs() {
            return Err(GridError::InvalidCell(u.index()));
        }
        Ok(x.index() * self.num_inputs() + u.index())
    }

    /// Stored successors of `(x, u)`; empty when the pair is blocked.
    pub fn post(&self, x: CellId, u: CellId) -> Result<&[CellId], GridError> {
        let p = self.pair(x, u)?;
        Ok(self.post_unchecked(p))
    }

    /// Successors by flat pair index `x * |Ū| + u`.
    pub fn post_unchecked(&self, pair: usize) -> &[CellId] {
        &self.successors[self.offsets[pair] as usize..self.offsets[pair + 1] as usize]
    }

    pub fn is_blocked(&self, x: CellId, u: CellId) -> Result<bool, GridError> {
        Ok(self.blocked.contains(self.pair(x, u)?))
    }

    /// A pair is usable when it is not blocked and has at least one successor.
    pub fn is_usable(&self, pair: usize) -> bool {
        !self.blocked.contains(pair) && self.offsets[pair + 1] > self.offsets[pair]
    }

    pub fn stats(&self) -> AbstractionStats {
        AbstractionStats {
            states: self.num_states(),
            inputs: self.num_inputs(),
            transitions: self.successors.len(),
            blocked_pairs: self.blocked.count_ones(..),
        }
    }

    /// True if this abstraction was built for exactly this system and grids.
    pub fn matches(&self, sys: &ContinuousSystem, grid_x: &Grid, grid_u: &Grid, semantics: InputSemantics) -> bool {
        self.fingerprint == system_fingerprint(sys, semantics)
            && &self.grid_x == grid_x
            && &self.grid_u == grid_u
            && self.tau == sys.tau()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::VectorField;
    use crate::grid::HyperRect;

    fn dubins_grids(eta: [f64; 3]) -> (Grid, Grid) {
        let gx = Grid::new(
            HyperRect::new(vec![0.0, 0.0, -PI], vec![8.0, 11.0, PI]).unwrap(),
            eta.to_vec(),
            vec![false, false, true],
        )
        .unwrap();
        let gu = Grid::new(HyperRect::new(vec![-2.0 * PI], vec![2.0 * PI]).unwrap(), vec![0.26], vec![false]).unwrap();
        (gx, gu)
    }

    #[test]
    fn stationary_system_loops_on_itself() {
        let sys = ContinuousSystem::new(VectorField::Stationary { dim: 1 }, 0.5).unwrap();
        let gx = Grid::new(HyperRect::new(vec![0.0], vec![2.0]).unwrap(), vec![0.25], vec![false]).unwrap();
        let gu = Grid::new(HyperRect::new(vec![-1.0], vec![1.0]).unwrap(), vec![1.0], vec![false]).unwrap();
        let abs = Abstraction::build(&sys, &gx, &gu, InputSemantics::Point).unwrap();
        for x in gx.cells() {
            for u in gu.cells() {
                // the lower face of a cell quantizes to the cell below it
                let want: Vec<CellId> = (x.index().saturating_sub(1)..=x.index()).map(CellId::from).collect();
                assert_eq!(abs.post(x, u).unwrap(), want.as_slice());
            }
        }
        assert_eq!(abs.stats().blocked_pairs, 0);
    }

    #[test]
    fn origin_cell_successors_match_hand_composition() {
        let (gx, _) = dubins_grids([0.15, 0.15, 0.26]);
        let sys = ContinuousSystem::new(VectorField::DubinsCar, 0.2).unwrap();
        let extent = gx.covered_extent();
        let cell_at = |p: [f64; 3]| ReachSet::new(gx.center(gx.quantize(&p).unwrap()).unwrap(), gx.cell_radius());

        // reach box of the origin cell: centre (0.2, 0, 0), radius 0.075 + 0.2 * h3
        // with h3 = pi / 24 the heading half-width; it dips below x2 = -0.075,
        // outside the gridded domain, so the pair is blocked
        let origin = cell_at([0.0, 0.0, 0.0]);
        let reach = sys.reach_over_approx(&origin, &[0.0]);
        let r = 0.075 + 0.2 * PI / 24.0;
        assert!((reach.center[0] - 0.2).abs() < 1e-12 && reach.center[1].abs() < 1e-12);
        assert!((reach.radius[0] - r).abs() < 1e-12 && (reach.radius[1] - r).abs() < 1e-12);
        assert!(reach.center[1] - reach.radius[1] < extent.lower[1]);
        assert_eq!(compute_post(&sys, &gx, &extent, &origin, &[0.0], None), None);

        // one row up the box stays inside: x1 centres {0.15, 0.30}, x2 centres {0.15, 0.30, 0.45}
        let above = cell_at([0.0, 0.3, 0.0]);
        let list = compute_post(&sys, &gx, &extent, &above, &[0.0], None).unwrap();
        // every interior sample of the reach box must quantize into the list
        let reach = sys.reach_over_approx(&above, &[0.0]);
        let mut sampled = std::collections::BTreeSet::new();
        for i in 1..8 {
            for j in 1..8 {
                for k in 1..8 {
                    let p: Vec<f64> = [i, j, k]
                        .iter()
                        .enumerate()
                        .map(|(d, &t)| reach.center[d] + reach.radius[d] * (t as f64 / 4.0 - 1.0))
                        .collect();
                    sampled.insert(gx.quantize(&p).unwrap());
                }
            }
        }
        assert!(sampled.iter().all(|c| list.contains(c)));
        let planar = |cells: &mut dyn Iterator<Item = CellId>| {
            cells.map(|c| gx.multi_index(c).unwrap()[..2].to_vec()).collect::<std::collections::BTreeSet<_>>()
        };
        assert_eq!(planar(&mut sampled.iter().copied()), planar(&mut list.iter().copied()));
        let mut xs: Vec<i64> = list.iter().map(|&c| (gx.center(c).unwrap()[0] / 0.15).round() as i64).collect();
        let mut ys: Vec<i64> = list.iter().map(|&c| (gx.center(c).unwrap()[1] / 0.15).round() as i64).collect();
        xs.dedup();
        ys.sort();
        ys.dedup();
        assert_eq!(xs, vec![1, 2]);
        assert_eq!(ys, vec![1, 2, 3]);
    }

    fn abs_build_small(sys: &ContinuousSystem) -> Result<Abstraction, AbstractionError> {
        let gx = Grid::new(
            HyperRect::new(vec![0.0, 0.0, -PI], vec![1.0, 1.0, PI]).unwrap(),
            vec![0.5, 0.5, PI / 2.0],
            vec![false, false, true],
        )?;
        let gu = Grid::new(HyperRect::new(vec![-1.0], vec![1.0]).unwrap(), vec![1.0], vec![false])?;
        Abstraction::build(sys, &gx, &gu, InputSemantics::Point)
    }

    #[test]
    fn post_rejects_invalid_ids_and_blocks_exits() {
        let sys = ContinuousSystem::new(VectorField::DubinsCar, 0.2).unwrap();
        let abs = abs_build_small(&sys).unwrap();
        assert!(abs.post(CellId(10_000), CellId(0)).is_err());
        assert!(abs.post(CellId(0), CellId(99)).is_err());
        let stats = abs.stats();
        assert!(stats.blocked_pairs > 0);
        for x in abs.grid_x().cells() {
            for u in abs.grid_u().cells() {
                if abs.is_blocked(x, u).unwrap() {
                    assert!(abs.post(x, u).unwrap().is_empty());
                }
                let post = abs.post(x, u).unwrap();
                assert!(post.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn rejects_mismatched_grids() {
        let sys = ContinuousSystem::new(VectorField::DubinsCar, 0.2).unwrap();
        let gx = Grid::new(
            HyperRect::new(vec![0.0, 0.0, -PI], vec![1.0, 1.0, PI]).unwrap(),
            vec![0.5, 0.5, 0.5],
            vec![false, false, false],
        )
        .unwrap();
        let gu = Grid::new(HyperRect::new(vec![-1.0], vec![1.0]).unwrap(), vec![1.0], vec![false]).unwrap();
        assert!(matches!(
            Abstraction::build(&sys, &gx, &gu, InputSemantics::Point),
            Err(AbstractionError::AngleMismatch(2))
        ));
    }

    #[test]
    fn explicit_lists_round_trip() {
        let gx = Grid::new(HyperRect::new(vec![0.0], vec![2.0]).unwrap(), vec![1.0], vec![false]).unwrap();
        let gu = Grid::new(HyperRect::new(vec![0.0], vec![1.0]).unwrap(), vec![1.0], vec![false]).unwrap();
        let lists = vec![
            vec![Some(vec![CellId(1), CellId(0), CellId(1)]), None],
            vec![Some(vec![CellId(2)]), Some(vec![])],
            vec![None, None],
        ];
        let abs = Abstraction::from_lists(gx, gu, &lists);
        assert_eq!(abs.post(CellId(0), CellId(0)).unwrap(), &[CellId(0), CellId(1)]);
        assert!(abs.is_blocked(CellId(0), CellId(1)).unwrap());
        assert!(!abs.is_usable(3));
        assert_eq!(abs.stats().transitions, 3);
    }
}
