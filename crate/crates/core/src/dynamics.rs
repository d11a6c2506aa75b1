//! Continuous-time control systems `x' in f(x, u) + W` and sampled reachability.
//!
//! Reach sets are over-approximated with a linear growth bound: for a box of
//! half-widths `r` around `c` and constant input `u`, every disturbed solution
//! at time `tau` lies in the box around `flow(c, u, tau)` with half-widths
//!
//! ```text
//! exp(L tau) r + (int_0^tau exp(L s) ds) w
//! ```
//!
//! where `w` is the half-width of `W` and `L` bounds the Jacobian: `L[i][i]` is
//! an upper bound on `df_i/dx_i` and `L[i][j]` (i != j) bounds `|df_i/dx_j|`
//! over the whole state and input domain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{wrap_into, wrapped_delta, HyperRect};

/// Substeps per sampling period.
pub const RK4_SUBSTEPS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("sampling time must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("disturbance set must contain the origin")]
    DisturbanceExcludesOrigin,
    #[error("{what} has dimension {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("Jacobian bound entries must be finite, off-diagonal ones non-negative")]
    InvalidBound,
}

/// Built-in vector fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum VectorField {
    /// Unit-speed car: `x1' = cos x3, x2' = sin x3, x3' = u`.
    DubinsCar,
    /// `x' = 0`.
    Stationary { dim: usize },
    /// `x' = u`.
    Integrator { dim: usize },
}

impl VectorField {
    pub fn name(&self) -> &'static str {
        match self {
            VectorField::DubinsCar => "dubins_car",
            VectorField::Stationary { .. } => "stationary",
            VectorField::Integrator { .. } => "integrator",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            VectorField::DubinsCar => 3,
            VectorField::Stationary { dim } | VectorField::Integrator { dim } => *dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            VectorField::DubinsCar => 1,
            VectorField::Stationary { .. } => 1,
            VectorField::Integrator { dim } => *dim,
        }
    }

    /// Dimensions that are angles, wrapped to `[-pi, pi)` after integration.
    pub fn angle_dims(&self) -> &'static [usize] {
        match self {
            VectorField::DubinsCar => &[2],
            _ => &[],
        }
    }

    pub fn eval(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        match self {
            VectorField::DubinsCar => {
                out[0] = x[2].cos();
                out[1] = x[2].sin();
                out[2] = u[0];
            }
            VectorField::Stationary { .. } => out.fill(0.0),
            VectorField::Integrator { .. } => out.copy_from_slice(u),
        }
    }

    /// Growth-bound matrix, row-major `n x n`.
    pub fn default_lipschitz(&self) -> Vec<f64> {
        let n = self.state_dim();
        let mut l = vec![0.0; n * n];
        if let VectorField::DubinsCar = self {
            // |d cos(x3)/dx3|, |d sin(x3)/dx3| <= 1
            l[2] = 1.0;
            l[n + 2] = 1.0;
        }
        l
    }

    /// Bound on `|df/du|`, row-major `n x m`.
    pub fn default_input_gain(&self) -> Vec<f64> {
        let n = self.state_dim();
        let m = self.input_dim();
        let mut g = vec![0.0; n * m];
        match self {
            VectorField::DubinsCar => g[2] = 1.0,
            VectorField::Integrator { dim } => {
                for i in 0..*dim {
                    g[i * m + i] = 1.0;
                }
            }
            VectorField::Stationary { .. } => {}
        }
        g
    }
}

/// Box-shaped reachable set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachSet {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
}

impl ReachSet {
    pub fn new(center: Vec<f64>, radius: Vec<f64>) -> Self {
        debug_assert!(radius.iter().all(|r| *r >= 0.0));
        Self { center, radius }
    }

    pub fn to_rect(&self) -> HyperRect {
        HyperRect::around(&self.center, &self.radius)
    }

    /// Membership with wrapped distance on `angle_dims`.
    pub fn contains(&self, x: &[f64], angle_dims: &[usize], tol: f64) -> bool {
        (0..self.center.len()).all(|i| {
            let d = if angle_dims.contains(&i) {
                wrapped_delta(x[i], self.center[i], 2.0 * PI).abs()
            } else {
                (x[i] - self.center[i]).abs()
            };
            d <= self.radius[i] + tol
        })
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousSystem {
    field: VectorField,
    tau: f64,
    disturbance: HyperRect,
    lipschitz: Vec<f64>,
    input_gain: Vec<f64>,
    // exp(L tau) and int_0^tau exp(L s) ds, both n x n
    growth: Vec<f64>,
    growth_integral: Vec<f64>,
    w_max: Vec<f64>,
}

impl ContinuousSystem {
    /// System with the model's default Jacobian bounds and `W = {0}`.
    pub fn new(field: VectorField, tau: f64) -> Result<Self, DynamicsError> {
        let n = field.state_dim();
        let zero = HyperRect { lower: vec![0.0; n], upper: vec![0.0; n] };
        Self::with_disturbance(field, tau, zero)
    }

    pub fn with_disturbance(
        field: VectorField,
        tau: f64,
        disturbance: HyperRect,
    ) -> Result<Self, DynamicsError> {
        let l = field.default_lipschitz();
        let g = field.default_input_gain();
        Self::with_bounds(field, tau, disturbance, l, g)
    }

    pub fn with_bounds(
        field: VectorField,
        tau: f64,
        disturbance: HyperRect,
        lipschitz: Vec<f64>,
        input_gain: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        let n = field.state_dim();
        let m = field.input_dim();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(DynamicsError::InvalidTau(tau));
        }
        if disturbance.dim() != n {
            return Err(DynamicsError::Dimension {
                what: "disturbance",
                expected: n,
                got: disturbance.dim(),
            });
        }
        if disturbance.validate().is_err() || !disturbance.contains(&vec![0.0; n]) {
            return Err(DynamicsError::DisturbanceExcludesOrigin);
        }
        if lipschitz.len() != n * n {
            return Err(DynamicsError::Dimension {
                what: "Jacobian bound",
                expected: n * n,
                got: lipschitz.len(),
            });
        }
        if input_gain.len() != n * m {
            return Err(DynamicsError::Dimension {
                what: "input gain",
                expected: n * m,
                got: input_gain.len(),
            });
        }
        let off_diag_ok = (0..n * n).all(|k| lipschitz[k].is_finite() && (k / n == k % n || lipschitz[k] >= 0.0));
        if !off_diag_ok || input_gain.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(DynamicsError::InvalidBound);
        }
        let (growth, growth_integral) = growth_matrices(&lipschitz, n, tau);
        let w_max = disturbance
            .lower
            .iter()
            .zip(&disturbance.upper)
            .map(|(l, u)| l.abs().max(u.abs()))
            .collect();
        Ok(Self { field, tau, disturbance, lipschitz, input_gain, growth, growth_integral, w_max })
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn state_dim(&self) -> usize {
        self.field.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.field.input_dim()
    }

    pub fn disturbance(&self) -> &HyperRect {
        &self.disturbance
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn input_gain(&self) -> &[f64] {
        &self.input_gain
    }

    /// `exp(L tau)`, row-major.
    pub fn growth_matrix(&self) -> &[f64] {
        &self.growth
    }

    /// Nominal flow (`w = 0`) of duration `t`.
    pub fn flow(&self, x0: &[f64], u: &[f64], t: f64) -> Vec<f64> {
        let zero = vec![0.0; self.state_dim()];
        self.flow_disturbed(x0, u, &zero, t)
    }

    /// Flow of `x' = f(x, u) + w` with constant `w`, angle dims wrapped.
    pub fn flow_disturbed(&self, x0: &[f64], u: &[f64], w: &[f64], t: f64) -> Vec<f64> {
        let n = self.state_dim();
        let steps = ((RK4_SUBSTEPS as f64 * t / self.tau).ceil() as usize).max(RK4_SUBSTEPS);
        let h = t / steps as f64;
        let mut x = x0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        let rhs = |x: &[f64], out: &mut [f64]| {
            self.field.eval(x, u, out);
            for (o, wi) in out.iter_mut().zip(w) {
                *o += wi;
            }
        };
        for _ in 0..steps {
            rhs(&x, &mut k1);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            rhs(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            rhs(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            rhs(&tmp, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        for &d in self.field.angle_dims() {
            x[d] = wrap_into(x[d], -PI, PI);
        }
        x
    }

    /// Over-approximation of the states reachable after one sampling period from
    /// the box `cell` under the exact input `u` and any disturbance in `W`.
    pub fn reach_over_approx(&self, cell: &ReachSet, u: &[f64]) -> ReachSet {
        self.reach_with_input_radius(cell, u, None)
    }

    /// As [`reach_over_approx`](Self::reach_over_approx), but also covering every
    /// input within `input_radius` of `u` (per input dim).
    pub fn reach_with_input_radius(
        &self,
        cell: &ReachSet,
        u: &[f64],
        input_radius: Option<&[f64]>,
    ) -> ReachSet {
        let n = self.state_dim();
        let m = self.input_dim();
        let center = self.flow(&cell.center, u, self.tau);
        let mut offset = self.w_max.clone();
        if let Some(du) = input_radius {
            for i in 0..n {
                offset[i] += (0..m).map(|j| self.input_gain[i * m + j] * du[j]).sum::<f64>();
            }
        }
        let mut radius = vec![0.0; n];
        for i in 0..n {
            let mut r = 0.0;
            for j in 0..n {
                r += self.growth[i * n + j] * cell.radius[j] + self.growth_integral[i * n + j] * offset[j];
            }
            radius[i] = r.max(0.0);
        }
        for &d in self.field.angle_dims() {
            radius[d] = radius[d].min(PI);
        }
        ReachSet { center, radius }
    }
}

fn growth_matrices(l: &[f64], n: usize, tau: f64) -> (Vec<f64>, Vec<f64>) {
    // exp([[L tau, tau I], [0, 0]]) = [[exp(L tau), int_0^tau exp(L s) ds], [0, I]]
    let big = 2 * n;
    let mut m = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            m[i * big + j] = l[i * n + j] * tau;
        }
        m[i * big + n + i] = tau;
    }
    let e = expm(&m, big);
    let mut growth = vec![0.0; n * n];
    let mut integral = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            growth[i * n + j] = e[i * big + j];
            integral[i * n + j] = e[i * big + n + j];
        }
    }
    (growth, integral)
}

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// Matrix exponential by scaling and squaring with a Taylor series, accurate to
/// well below `1e-10` relative for moderate norms.
pub fn expm(a: &[f64], n: usize) -> Vec<f64> {
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled: Vec<f64> = a.iter().map(|v| v * scale).collect();
    let mut sum = vec![0.0; n * n];
    for i in 0..n {
        sum[i * n + i] = 1.0;
    }
    let mut term = sum.clone();
    for k in 1..=30 {
        term = mat_mul(&term, &scaled, n);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|t| *t *= inv);
        let mut biggest = 0.0f64;
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
            biggest = biggest.max(t.abs());
        }
        if biggest < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = mat_mul(&sum, &sum, n);
    }
    sum
}
