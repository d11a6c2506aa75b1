//! Uniform rectangular grids over compact boxes.
//!
//! Grid points along a non-periodic dimension sit at `lower + k * eta` for
//! `k = 0..=floor((upper - lower) / eta)`. If that leaves the upper end of the
//! box more than `eta / 2` away from the last point, one extra point is appended
//! so every point of the box is within half a cell of some grid point. With
//! `U = [-2pi, 2pi]` and `eta = 0.26` this gives the 49 input points used by the
//! urban case study.
//!
//! Periodic (angle-like) dimensions hold `round((upper - lower) / eta)` points
//! and drop the duplicate endpoint. The spacing actually used on such a
//! dimension is `(upper - lower) / count`, so the cells tile the circle exactly.
//!
//! Cells are the closed boxes `[c - s/2, c + s/2]` around each grid point `c`,
//! `s` being the dimension's spacing. Multi-indices are flattened row-major in
//! declaration order (the last dimension varies fastest). A point on the face
//! shared by two cells quantizes to the lower-index cell.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid box in dimension {dim}: lower {lower} > upper {upper}")]
    InvalidBounds { dim: usize, lower: f64, upper: f64 },
    #[error("grid spacing in dimension {dim} must be positive and finite, got {eta}")]
    InvalidEta { dim: usize, eta: f64 },
    #[error("coordinate {value} in dimension {dim} lies outside the gridded domain")]
    OutOfDomain { dim: usize, value: f64 },
    #[error("cell index {0} is out of range")]
    InvalidCell(usize),
}

/// Closed axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl HyperRect {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GridError> {
        let rect = Self { lower, upper };
        rect.validate()?;
        Ok(rect)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.lower.len() != self.upper.len() {
            return Err(GridError::DimensionMismatch {
                expected: self.lower.len(),
                got: self.upper.len(),
            });
        }
        for (dim, (&lower, &upper)) in self.lower.iter().zip(&self.upper).enumerate() {
            // also rejects NaN
            if !(lower <= upper) {
                return Err(GridError::InvalidBounds { dim, lower, upper });
            }
        }
        Ok(())
    }

    /// Box of half-widths `radius` around `center`.
    pub fn around(center: &[f64], radius: &[f64]) -> Self {
        Self {
            lower: center.iter().zip(radius).map(|(c, r)| c - r).collect(),
            upper: center.iter().zip(radius).map(|(c, r)| c + r).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }

    /// Closed-box intersection test (touching faces count).
    pub fn intersects(&self, other: &HyperRect) -> bool {
        (0..self.dim()).all(|i| self.lower[i] <= other.upper[i] && other.lower[i] <= self.upper[i])
    }
}

/// Flattened cell index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(transparent)]
pub struct CellId(pub u32);

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for CellId {
    fn from(i: usize) -> Self {
        CellId(u32::try_from(i).expect("cell index exceeds u32"))
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bounds: HyperRect,
    eta: Vec<f64>,
    spacing: Vec<f64>,
    periodic: Vec<bool>,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(bounds: HyperRect, eta: Vec<f64>, periodic: Vec<bool>) -> Result<Self, GridError> {
        bounds.validate()?;
        let n = bounds.dim();
        for len in [eta.len(), periodic.len()] {
            if len != n {
                return Err(GridError::DimensionMismatch { expected: n, got: len });
            }
        }
        let mut counts = Vec::with_capacity(n);
        let mut spacing = Vec::with_capacity(n);
        for dim in 0..n {
            let step = eta[dim];
            if !(step > 0.0 && step.is_finite()) {
                return Err(GridError::InvalidEta { dim, eta: step });
            }
            let span = bounds.upper[dim] - bounds.lower[dim];
            let ratio = span / step;
            if periodic[dim] {
                let count = (ratio.round() as usize).max(1);
                counts.push(count);
                spacing.push(if span > 0.0 { span / count as f64 } else { step });
            } else {
                let mut count = (ratio + 1e-9).floor() as usize + 1;
                let remainder = span - (count - 1) as f64 * step;
                if remainder > 0.5 * step * (1.0 + 1e-9) {
                    count += 1;
                }
                counts.push(count);
                spacing.push(step);
            }
        }
        let mut strides = vec![1usize; n];
        for dim in (0..n.saturating_sub(1)).rev() {
            strides[dim] = strides[dim + 1] * counts[dim + 1];
        }
        Ok(Self { bounds, eta, spacing, periodic, counts, strides })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn bounds(&self) -> &HyperRect {
        &self.bounds
    }

    /// The spacing as requested.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// The spacing actually used (differs from `eta` only on periodic dims).
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        (0..self.len()).map(CellId::from)
    }

    /// Union of all cell boxes. Contains `bounds`; on non-periodic dims it sticks
    /// out by up to half a cell.
    pub fn covered_extent(&self) -> HyperRect {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for dim in 0..self.dim() {
            if self.periodic[dim] {
                lower.push(self.bounds.lower[dim]);
                upper.push(self.bounds.upper[dim]);
            } else {
                let h = 0.5 * self.spacing[dim];
                lower.push(self.bounds.lower[dim] - h);
                upper.push(self.point(dim, self.counts[dim] - 1) + h);
            }
        }
        HyperRect { lower, upper }
    }

    fn point(&self, dim: usize, k: usize) -> f64 {
        self.bounds.lower[dim] + k as f64 * self.spacing[dim]
    }

    /// Wraps periodic coordinates into `[lower, upper)`.
    pub fn wrap(&self, x: &mut [f64]) {
        for dim in 0..self.dim().min(x.len()) {
            if self.periodic[dim] {
                x[dim] = wrap_into(x[dim], self.bounds.lower[dim], self.bounds.upper[dim]);
            }
        }
    }

    pub fn multi_index(&self, cell: CellId) -> Result<Vec<usize>, GridError> {
        self.check(cell)?;
        let mut rest = cell.index();
        Ok(self
            .strides
            .iter()
            .map(|&s| {
                let k = rest / s;
                rest %= s;
                k
            })
            .collect())
    }

    pub fn flatten(&self, multi: &[usize]) -> Result<CellId, GridError> {
        if multi.len() != self.dim() {
            return Err(GridError::DimensionMismatch { expected: self.dim(), got: multi.len() });
        }
        let mut index = 0;
        for ((&k, &n), &s) in multi.iter().zip(&self.counts).zip(&self.strides) {
            if k >= n {
                return Err(GridError::InvalidCell(k));
            }
            index += k * s;
        }
        Ok(CellId::from(index))
    }

    fn check(&self, cell: CellId) -> Result<(), GridError> {
        if cell.index() < self.len() {
            Ok(())
        } else {
            Err(GridError::InvalidCell(cell.index()))
        }
    }

    /// Per-dimension index of the cell containing `value`.
    pub fn quantize_coord(&self, dim: usize, value: f64) -> Result<usize, GridError> {
        let lower = self.bounds.lower[dim];
        let step = self.spacing[dim];
        let n = self.counts[dim];
        if !value.is_finite() {
            return Err(GridError::OutOfDomain { dim, value });
        }
        if self.periodic[dim] {
            let v = wrap_into(value, lower, self.bounds.upper[dim]);
            let k = ((v - lower) / step - 0.5).ceil() as i64;
            return Ok(k.rem_euclid(n as i64) as usize);
        }
        let h = 0.5 * step;
        let tol = 1e-9 * step;
        if value < lower - h - tol || value > self.point(dim, n - 1) + h + tol {
            return Err(GridError::OutOfDomain { dim, value });
        }
        let k = ((value - lower) / step - 0.5).ceil();
        Ok(k.clamp(0.0, (n - 1) as f64) as usize)
    }

    pub fn quantize(&self, x: &[f64]) -> Result<CellId, GridError> {
        if x.len() != self.dim() {
            return Err(GridError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let mut index = 0;
        for dim in 0..self.dim() {
            index += self.quantize_coord(dim, x[dim])? * self.strides[dim];
        }
        Ok(CellId::from(index))
    }

    pub fn center(&self, cell: CellId) -> Result<Vec<f64>, GridError> {
        let multi = self.multi_index(cell)?;
        Ok(multi.iter().enumerate().map(|(dim, &k)| self.point(dim, k)).collect())
    }

    pub fn cell_rect(&self, cell: CellId) -> Result<HyperRect, GridError> {
        let center = self.center(cell)?;
        let radius: Vec<f64> = self.spacing.iter().map(|s| 0.5 * s).collect();
        Ok(HyperRect::around(&center, &radius))
    }

    /// Half cell widths.
    pub fn cell_radius(&self) -> Vec<f64> {
        self.spacing.iter().map(|s| 0.5 * s).collect()
    }

    /// Indices along `dim` whose cell interval meets `[a, b]`. Periodic dims
    /// accept wrapped intervals; the result may then be unsorted.
    pub fn indices_meeting(&self, dim: usize, a: f64, b: f64) -> Vec<usize> {
        let lower = self.bounds.lower[dim];
        let step = self.spacing[dim];
        let n = self.counts[dim];
        if !(a <= b) {
            return Vec::new();
        }
        if self.periodic[dim] {
            let span = self.bounds.upper[dim] - lower;
            if b - a >= span {
                return (0..n).collect();
            }
            let kmin = ((a - lower) / step - 0.5).ceil() as i64;
            let kmax = ((b - lower) / step + 0.5).floor() as i64;
            if kmax - kmin + 1 >= n as i64 {
                return (0..n).collect();
            }
            return (kmin..=kmax).map(|k| k.rem_euclid(n as i64) as usize).collect();
        }
        let kmin = ((a - lower) / step - 0.5).ceil().max(0.0);
        let kmax = ((b - lower) / step + 0.5).floor().min((n - 1) as f64);
        if kmin > kmax {
            return Vec::new();
        }
        (kmin as usize..=kmax as usize).collect()
    }

    /// Indices along `dim` that points of `[a, b]` quantize to, i.e. the image of
    /// the interval under [`quantize`](Self::quantize). Same conventions as
    /// [`indices_meeting`](Self::indices_meeting).
    pub fn indices_quantized(&self, dim: usize, a: f64, b: f64) -> Vec<usize> {
        let lower = self.bounds.lower[dim];
        let step = self.spacing[dim];
        let n = self.counts[dim];
        if !(a <= b) {
            return Vec::new();
        }
        let kmin = ((a - lower) / step - 0.5).ceil();
        let kmax = ((b - lower) / step - 0.5).ceil();
        if self.periodic[dim] {
            let span = self.bounds.upper[dim] - lower;
            if b - a >= span || kmax - kmin + 1.0 >= n as f64 {
                return (0..n).collect();
            }
            return (kmin as i64..=kmax as i64).map(|k| k.rem_euclid(n as i64) as usize).collect();
        }
        let kmin = kmin.max(0.0);
        let kmax = kmax.min((n - 1) as f64);
        if kmin > kmax {
            return Vec::new();
        }
        (kmin as usize..=kmax as usize).collect()
    }

    /// All cells whose closed box meets `region`, in ascending order.
    pub fn cells_intersecting(&self, region: &HyperRect) -> Vec<CellId> {
        if region.dim() != self.dim() {
            return Vec::new();
        }
        let per_dim: Vec<Vec<usize>> = (0..self.dim())
            .map(|d| self.indices_meeting(d, region.lower[d], region.upper[d]))
            .collect();
        let mut out = Vec::new();
        self.for_each_product(&per_dim, |c| out.push(c));
        out.sort_unstable();
        out
    }

    /// Calls `f` on every cell of the cartesian product of per-dimension indices.
    pub fn for_each_product(&self, per_dim: &[Vec<usize>], mut f: impl FnMut(CellId)) {
        if per_dim.iter().any(Vec::is_empty) {
            return;
        }
        let n = per_dim.len();
        let mut cursor = vec![0usize; n];
        loop {
            let index: usize = (0..n).map(|d| per_dim[d][cursor[d]] * self.strides[d]).sum();
            f(CellId::from(index));
            let mut d = n;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                cursor[d] += 1;
                if cursor[d] < per_dim[d].len() {
                    break;
                }
                cursor[d] = 0;
            }
        }
    }
}

/// Wraps `v` into `[lower, upper)`.
pub fn wrap_into(v: f64, lower: f64, upper: f64) -> f64 {
    let span = upper - lower;
    if span <= 0.0 {
        return lower;
    }
    let w = lower + (v - lower).rem_euclid(span);
    // rem_euclid can round up to exactly `span`
    if w >= upper {
        lower
    } else {
        w
    }
}

/// Signed distance on a circle of circumference `span`, in `[-span/2, span/2]`.
pub fn wrapped_delta(a: f64, b: f64, span: f64) -> f64 {
    let d = (a - b).rem_euclid(span);
    if d > 0.5 * span {
        d - span
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(lower: f64, upper: f64, eta: f64, periodic: bool) -> Grid {
        Grid::new(HyperRect::new(vec![lower], vec![upper]).unwrap(), vec![eta], vec![periodic])
            .unwrap()
    }

    /// Nearest grid point by exhaustive search, ties to the lower index.
    fn nearest_point_oracle(g: &Grid, x: f64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for k in 0..g.counts()[0] {
            let d = (x - g.center(CellId::from(k)).unwrap()[0]).abs();
            if d < best.0 - 1e-12 {
                best = (d, k);
            }
        }
        best.1
    }

    #[test]
    fn quantize_lower_bound_is_first_cell() {
        let g = line(0.0, 8.0, 0.15, false);
        assert_eq!(g.quantize(&[0.0]).unwrap(), CellId(0));
        assert_eq!(g.center(CellId(0)).unwrap(), vec![0.0]);
    }

    #[test]
    fn quantize_matches_nearest_point_oracle() {
        let g = line(0.0, 8.0, 0.15, false);
        let c = g.quantize(&[0.31]).unwrap();
        assert_eq!(c.index(), nearest_point_oracle(&g, 0.31));
        assert!((g.center(c).unwrap()[0] - 0.30).abs() < 1e-12);
        for i in 0..=800 {
            let x = i as f64 * 0.01 + 0.0037;
            if x > 8.0 {
                break;
            }
            assert_eq!(g.quantize(&[x]).unwrap().index(), nearest_point_oracle(&g, x), "x={x}");
        }
    }

    #[test]
    fn periodic_wrap_is_consistent() {
        let g = line(-PI, PI, 0.26, true);
        let a = g.quantize(&[PI - 0.01]).unwrap();
        let b = g.quantize(&[-PI - 0.01 + 2.0 * PI]).unwrap();
        let c = g.quantize(&[-PI - 0.01]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        // just below +pi is closer to -pi than to the last point
        assert_eq!(a, CellId(0));
    }

    #[test]
    fn last_center_of_unit_interval_grid() {
        let g = line(0.0, 8.0, 0.15, false);
        assert_eq!(g.counts(), &[54]);
        let last = g.center(CellId(53)).unwrap()[0];
        assert!((last - 7.95).abs() < 1e-12);
        assert_eq!(g.center(CellId(54)), Err(GridError::InvalidCell(54)));
    }

    #[test]
    fn round_trip_on_small_3d_grid() {
        let g = Grid::new(
            HyperRect::new(vec![0.0, -1.0, -PI], vec![1.0, 1.0, PI]).unwrap(),
            vec![0.5, 1.0, 2.0 * PI / 3.0],
            vec![false, false, true],
        )
        .unwrap();
        assert_eq!(g.counts(), &[3, 3, 3]);
        for c in g.cells() {
            assert_eq!(g.quantize(&g.center(c).unwrap()).unwrap(), c);
        }
    }

    #[test]
    fn cell_rect_is_half_spacing_box() {
        let g = line(0.0, 8.0, 0.15, false);
        let r = g.cell_rect(CellId(2)).unwrap();
        assert!((r.lower[0] - 0.225).abs() < 1e-12);
        assert!((r.upper[0] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn adjacent_cells_share_only_a_face() {
        let g = line(0.0, 8.0, 0.15, false);
        let a = g.cell_rect(CellId(4)).unwrap();
        let b = g.cell_rect(CellId(5)).unwrap();
        assert!((a.upper[0] - b.lower[0]).abs() < 1e-12);
    }

    #[test]
    fn face_points_go_to_lower_index() {
        let g = line(0.0, 1.0, 0.25, false);
        assert_eq!(g.quantize(&[0.125]).unwrap(), CellId(0));
        assert_eq!(g.quantize(&[0.375]).unwrap(), CellId(1));
    }

    #[test]
    fn cells_intersecting_by_exhaustive_overlap() {
        let g = line(0.0, 8.0, 0.15, false);
        let region = HyperRect::new(vec![0.2], vec![0.4]).unwrap();
        let fast = g.cells_intersecting(&region);
        let oracle: Vec<CellId> =
            g.cells().filter(|&c| g.cell_rect(c).unwrap().intersects(&region)).collect();
        assert_eq!(fast, oracle);
        let centers: Vec<f64> = fast.iter().map(|&c| g.center(c).unwrap()[0]).collect();
        assert_eq!(centers.len(), 3);
        for (got, want) in centers.iter().zip([0.15, 0.30, 0.45]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cells_intersecting_whole_domain_and_single_cell() {
        let g = line(0.0, 8.0, 0.15, false);
        assert_eq!(g.cells_intersecting(g.bounds()).len(), g.len());
        let inner = HyperRect::new(vec![0.29], vec![0.31]).unwrap();
        assert_eq!(g.cells_intersecting(&inner), vec![CellId(2)]);
    }

    #[test]
    fn quantized_range_is_image_of_quantize() {
        let g = line(0.0, 2.0, 0.25, false);
        let (a, b) = (0.125, 0.375);
        let image: Vec<usize> = (0..=1000)
            .map(|i| a + (b - a) * i as f64 / 1000.0)
            .map(|x| g.quantize(&[x]).unwrap().index())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(g.indices_quantized(0, a, b), image);
        assert_eq!(image, vec![0, 1]);
    }

    #[test]
    fn periodic_intersection_wraps() {
        let g = line(-PI, PI, 0.26, true);
        let n = g.counts()[0];
        let region = HyperRect::new(vec![PI - 0.2], vec![PI + 0.1]).unwrap();
        let cells = g.cells_intersecting(&region);
        assert!(cells.contains(&CellId(0)));
        assert!(cells.contains(&CellId::from(n - 1)));
    }

    #[test]
    fn grid_counts_for_case_study() {
        let u = line(-2.0 * PI, 2.0 * PI, 0.26, false);
        assert_eq!(u.counts(), &[49]);
        let x = Grid::new(
            HyperRect::new(vec![0.0, 0.0, -PI], vec![8.0, 11.0, PI]).unwrap(),
            vec![0.15, 0.15, 0.26],
            vec![false, false, true],
        )
        .unwrap();
        assert_eq!(x.counts(), &[54, 74, 24]);
        assert_eq!(x.len(), 95904);
    }

    #[test]
    fn extra_point_added_when_remainder_exceeds_half_cell() {
        // floor(8 / 0.3) + 1 = 27 points would stop at 7.8
        let g = line(0.0, 8.0, 0.3, false);
        assert_eq!(g.counts(), &[28]);
        assert!(g.covered_extent().upper[0] >= 8.0);
        assert!(g.quantize(&[8.0]).is_ok());
        assert!(g.quantize(&[8.3]).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(HyperRect::new(vec![1.0], vec![0.0]).is_err());
        let b = HyperRect::new(vec![0.0], vec![1.0]).unwrap();
        assert!(Grid::new(b.clone(), vec![0.0], vec![false]).is_err());
        assert!(Grid::new(b, vec![0.1, 0.1], vec![false]).is_err());
        let g = line(0.0, 1.0, 0.1, false);
        assert!(matches!(g.quantize(&[-0.5]), Err(GridError::OutOfDomain { .. })));
        assert!(matches!(g.quantize(&[f64::NAN]), Err(GridError::OutOfDomain { .. })));
    }
}
