//! The Proximity role on a planar vehicle grid.
//!
//! Cells `x̄` and `x̄'` are related when
//!
//! 1. the planar boxes of the two cells are closer than `D`, and
//! 2. some position in `x̄`, some position in `x̄'` and some heading `θ` in the
//!    heading interval of `x̄` give `(x₁' − x₁) cos θ + (x₂' − x₂) sin θ > 0`.
//!
//! Dimensions 0 and 1 are positions and dimension 2 is the periodic heading.
//! The heading of `x̄'` plays no role, so the relation only depends on the
//! planar index of the target cell.

use crate::grid::{CellId, Grid};

use super::KnowledgeError;

/// Checks that `grid` is laid out as (x, y, heading).
pub fn check_geometry(grid: &Grid) -> Result<(), KnowledgeError> {
    if grid.dim() != 3 || grid.periodic()[0] || grid.periodic()[1] || !grid.periodic()[2] {
        return Err(KnowledgeError::InvalidRole(
            "proximity needs a grid of two planar dimensions followed by a periodic heading".into(),
        ));
    }
    Ok(())
}

/// Precomputed geometry for repeated proximity queries on one grid.
#[derive(Debug, Clone)]
pub struct ProximityGeometry {
    range: f64,
    spacing: [f64; 3],
    lower: [f64; 3],
    counts: [usize; 3],
    /// Largest planar index offset that can still be within range, per axis.
    reach: [usize; 2],
    /// Related planar offsets `(di, dj)` for each heading index.
    offsets: Vec<Vec<(i64, i64)>>,
}

impl ProximityGeometry {
    pub fn new(grid: &Grid, range: f64) -> Result<Self, KnowledgeError> {
        let mut geo = Self::bare(grid, range)?;
        geo.offsets = (0..geo.counts[2])
            .map(|h| {
                let (ri, rj) = (geo.reach[0] as i64, geo.reach[1] as i64);
                let mut list = Vec::new();
                for di in -ri..=ri {
                    for dj in -rj..=rj {
                        if geo.related_offset(di, dj, h) {
                            list.push((di, dj));
                        }
                    }
                }
                list
            })
            .collect();
        Ok(geo)
    }

    /// Geometry without the offset tables, for one-off queries through
    /// [`related`](Self::related).
    fn bare(grid: &Grid, range: f64) -> Result<Self, KnowledgeError> {
        check_geometry(grid)?;
        if !(range > 0.0 && range.is_finite()) {
            return Err(KnowledgeError::InvalidRole(format!("proximity range must be positive, got {range}")));
        }
        let s = grid.spacing();
        let spacing = [s[0], s[1], s[2]];
        let lower = [grid.bounds().lower[0], grid.bounds().lower[1], grid.bounds().lower[2]];
        let counts = [grid.counts()[0], grid.counts()[1], grid.counts()[2]];
        // planar gap along an axis is (|k|-1) * s, so |k| < D/s + 1
        let reach = [0, 1].map(|d| ((range / spacing[d]).ceil() as usize + 1).min(counts[d]));
        Ok(Self { range, spacing, lower, counts, reach, offsets: Vec::new() })
    }

    fn related_offset(&self, di: i64, dj: i64, h: usize) -> bool {
        let (di, dj) = (di as f64, dj as f64);
        let gap = |d: f64, s: f64| (d.abs() * s - s).max(0.0);
        let gx = gap(di, self.spacing[0]);
        let gy = gap(dj, self.spacing[1]);
        if (gx * gx + gy * gy).sqrt() >= self.range {
            return false;
        }
        let cx = di * self.spacing[0];
        let cy = dj * self.spacing[1];
        let theta_c = self.lower[2] + h as f64 * self.spacing[2];
        let half = 0.5 * self.spacing[2];
        max_directional(
            [cx - self.spacing[0], cx + self.spacing[0]],
            [cy - self.spacing[1], cy + self.spacing[1]],
            theta_c - half,
            theta_c + half,
        ) > 0.0
    }

    /// Planar offsets `(di, dj)` related to a source with heading index `h`.
    pub fn offsets(&self, h: usize) -> &[(i64, i64)] {
        &self.offsets[h]
    }

    /// Calls `f` with the planar index of every position related to `src`.
    pub fn for_each_related(&self, src: [usize; 3], mut f: impl FnMut([usize; 2]) -> bool) -> bool {
        for &(di, dj) in &self.offsets[src[2]] {
            let k = src[0] as i64 + di;
            let l = src[1] as i64 + dj;
            if k < 0 || l < 0 || k >= self.counts[0] as i64 || l >= self.counts[1] as i64 {
                continue;
            }
            if f([k as usize, l as usize]) {
                return true;
            }
        }
        false
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn planar_counts(&self) -> [usize; 2] {
        [self.counts[0], self.counts[1]]
    }

    pub fn heading_count(&self) -> usize {
        self.counts[2]
    }

    /// Relation between the source cell with indices `(i, j, h)` and every
    /// target cell at planar index `(k, l)`.
    pub fn related(&self, src: [usize; 3], dst: [usize; 2]) -> bool {
        let di = dst[0] as i64 - src[0] as i64;
        let dj = dst[1] as i64 - src[1] as i64;
        if di.unsigned_abs() as usize > self.reach[0] || dj.unsigned_abs() as usize > self.reach[1] {
            return false;
        }
        self.related_offset(di, dj, src[2])
    }

    pub fn split(&self, cell: CellId) -> [usize; 3] {
        let idx = cell.index();
        let h = idx % self.counts[2];
        let rest = idx / self.counts[2];
        [rest / self.counts[1], rest % self.counts[1], h]
    }

    pub fn planar_of(&self, cell: CellId) -> [usize; 2] {
        let [i, j, _] = self.split(cell);
        [i, j]
    }
}

/// Maximum of `dx cos θ + dy sin θ` over the box `dx × dy` and `θ ∈ [t0, t1]`.
///
/// For fixed `θ` the maximum over the box sits at a corner; for a fixed corner
/// `(a, b)` the function `a cos θ + b sin θ` peaks at `atan2(b, a)`, so it is
/// enough to look at the interval ends and that angle when it falls inside.
pub fn max_directional(dx: [f64; 2], dy: [f64; 2], t0: f64, t1: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for a in dx {
        for b in dy {
            for t in [t0, t1] {
                best = best.max(a * t.cos() + b * t.sin());
            }
            if a != 0.0 || b != 0.0 {
                let phi = b.atan2(a);
                let two_pi = std::f64::consts::TAU;
                // shift phi into [t0, t0 + 2 pi)
                let shifted = t0 + (phi - t0).rem_euclid(two_pi);
                if shifted <= t1 {
                    best = best.max(a.hypot(b));
                }
            }
        }
    }
    best
}

/// Proximity between two cells of a (x, y, heading) grid.
pub fn proximity(grid: &Grid, x: CellId, xp: CellId, range: f64) -> Result<bool, KnowledgeError> {
    let geo = ProximityGeometry::bare(grid, range)?;
    for c in [x, xp] {
        if c.index() >= grid.len() {
            return Err(KnowledgeError::InvalidInstance(c));
        }
    }
    Ok(geo.related(geo.split(x), geo.planar_of(xp)))
}
