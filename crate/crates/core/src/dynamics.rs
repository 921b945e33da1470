//! Linear product/influence dynamics in the plane and the scalar stochastic
//! supply-demand equation.
//!
//! The planar system is
//!
//! ```text
//! dQ/dt = a11·Q + a12·I
//! dI/dt = a21·Q + a22·I
//! ```
//!
//! with its fixed point at the origin. Its type follows from the trace `T`,
//! determinant `D` and discriminant `Δ = T² - 4D` of the coefficient matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polynomial::Polynomial;

/// Default tolerance for classification boundaries.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Off-diagonal entries at or below this size count as decoupled.
pub const DECOUPLED_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("matrix entries must be finite")]
    NonFiniteMatrix,
    #[error("system is coupled (a12 = {a12}, a21 = {a21})")]
    NotDecoupled { a12: f64, a21: f64 },
    #[error("invalid step: need dt > 0 and t_end > t0 (dt = {dt}, t0 = {t0}, t_end = {t_end})")]
    InvalidStep { dt: f64, t0: f64, t_end: f64 },
    #[error("state must be finite")]
    NonFiniteState,
    #[error("grid needs at least 2 points per axis, got {0}")]
    InvalidGrid(usize),
    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("noise amplitude must be finite and non-negative, got {0}")]
    InvalidSigma(f64),
    #[error("supply-demand parameters must be finite")]
    NonFiniteParameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct LinearSystem2D {
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
}

impl LinearSystem2D {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Result<Self, DynamicsError> {
        if [a11, a12, a21, a22].iter().all(|a| a.is_finite()) {
            Ok(Self { a11, a12, a21, a22 })
        } else {
            Err(DynamicsError::NonFiniteMatrix)
        }
    }

    pub fn diagonal(a11: f64, a22: f64) -> Result<Self, DynamicsError> {
        Self::new(a11, 0.0, 0.0, a22)
    }

    /// Row-major `[a11, a12, a21, a22]`.
    pub fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn scaled(&self, c: f64) -> Result<Self, DynamicsError> {
        Self::new(c * self.a11, c * self.a12, c * self.a21, c * self.a22)
    }

    pub fn is_decoupled(&self) -> bool {
        self.a12.abs() <= DECOUPLED_TOLERANCE && self.a21.abs() <= DECOUPLED_TOLERANCE
    }

    /// `(dQ/dt, dI/dt)` at `(q, i)`.
    pub fn rate(&self, q: f64, i: f64) -> (f64, f64) {
        (self.a11 * q + self.a12 * i, self.a21 * q + self.a22 * i)
    }
}

impl TryFrom<[f64; 4]> for LinearSystem2D {
    type Error = DynamicsError;
    fn try_from([a11, a12, a21, a22]: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(a11, a12, a21, a22)
    }
}

impl From<LinearSystem2D> for [f64; 4] {
    fn from(s: LinearSystem2D) -> Self {
        s.entries()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicReport {
    pub trace: f64,
    pub determinant: f64,
    pub discriminant: f64,
    pub eigenvalues: [Eigenvalue; 2],
}

/// Roots of `λ² - Tλ + D = 0`.
pub fn characteristic(sys: &LinearSystem2D) -> CharacteristicReport {
    let trace = sys.a11 + sys.a22;
    let determinant = sys.a11 * sys.a22 - sys.a12 * sys.a21;
    let discriminant = trace * trace - 4.0 * determinant;
    let eigenvalues = if discriminant >= 0.0 {
        let root = discriminant.sqrt();
        // Avoid cancellation: take the larger-magnitude root first and get
        // the other from the product D.
        let big = 0.5 * (trace + trace.signum() * root);
        let small = if big != 0.0 { determinant / big } else { 0.5 * (trace - root) };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        [Eigenvalue { re: hi, im: 0.0 }, Eigenvalue { re: lo, im: 0.0 }]
    } else {
        let re = 0.5 * trace;
        let im = 0.5 * (-discriminant).sqrt();
        [Eigenvalue { re, im }, Eigenvalue { re, im: -im }]
    };
    CharacteristicReport { trace, determinant, discriminant, eigenvalues }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedPointClass {
    StableNode,
    UnstableNode,
    Saddle,
    StableSpiral,
    UnstableSpiral,
    Center,
    Degenerate,
}

impl FixedPointClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::StableNode => "StableNode",
            Self::UnstableNode => "UnstableNode",
            Self::Saddle => "Saddle",
            Self::StableSpiral => "StableSpiral",
            Self::UnstableSpiral => "UnstableSpiral",
            Self::Center => "Center",
            Self::Degenerate => "Degenerate",
        }
    }
}

impl std::fmt::Display for FixedPointClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trace-determinant classification of the origin. Repeated eigenvalues and
/// a vanishing determinant (within `eps`) are reported as `Degenerate`.
pub fn classify(sys: &LinearSystem2D, eps: f64) -> FixedPointClass {
    let CharacteristicReport { trace: t, determinant: d, discriminant: disc, .. } = characteristic(sys);
    if d < -eps {
        FixedPointClass::Saddle
    } else if d.abs() <= eps || disc.abs() <= eps {
        FixedPointClass::Degenerate
    } else if disc > eps {
        if t < -eps {
            FixedPointClass::StableNode
        } else {
            FixedPointClass::UnstableNode
        }
    } else if t.abs() <= eps {
        FixedPointClass::Center
    } else if t < 0.0 {
        FixedPointClass::StableSpiral
    } else {
        FixedPointClass::UnstableSpiral
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub q: f64,
    pub i: f64,
}

impl State {
    pub fn new(t: f64, q: f64, i: f64) -> Result<Self, DynamicsError> {
        if t.is_finite() && q.is_finite() && i.is_finite() {
            Ok(Self { t, q, i })
        } else {
            Err(DynamicsError::NonFiniteState)
        }
    }
}

/// Closed-form solution `Q0·e^{a11 t}`, `I0·e^{a22 t}` of a decoupled system,
/// advancing `s0` by `t`.
pub fn solve_decoupled(sys: &LinearSystem2D, s0: State, t: f64) -> Result<State, DynamicsError> {
    if !sys.is_decoupled() {
        return Err(DynamicsError::NotDecoupled { a12: sys.a12, a21: sys.a21 });
    }
    Ok(State { t: s0.t + t, q: s0.q * (sys.a11 * t).exp(), i: s0.i * (sys.a22 * t).exp() })
}

/// Grid `t0, t0 + dt, ..., t_end` with `ceil((t_end - t0) / dt)` steps, the
/// last one shortened to land on `t_end`.
pub fn time_grid(t0: f64, t_end: f64, dt: f64) -> Result<Vec<f64>, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite() && t0.is_finite() && t_end.is_finite() && t_end > t0) {
        return Err(DynamicsError::InvalidStep { dt, t0, t_end });
    }
    let ratio = (t_end - t0) / dt;
    // A ratio that is integral up to rounding must not gain a sliver step.
    let nearest = ratio.round();
    let steps =
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { ratio.ceil() }.max(1.0) as usize;
    let mut grid: Vec<f64> = (0..steps).map(|k| t0 + k as f64 * dt).collect();
    grid.push(t_end);
    Ok(grid)
}

fn rk4_step(sys: &LinearSystem2D, q: f64, i: f64, h: f64) -> (f64, f64) {
    let (k1q, k1i) = sys.rate(q, i);
    let (k2q, k2i) = sys.rate(q + 0.5 * h * k1q, i + 0.5 * h * k1i);
    let (k3q, k3i) = sys.rate(q + 0.5 * h * k2q, i + 0.5 * h * k2i);
    let (k4q, k4i) = sys.rate(q + h * k3q, i + h * k3i);
    (q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), i + h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i))
}

/// Classic fourth-order Runge-Kutta trajectory from `s0` to `t_end`
/// inclusive, on the grid of [`time_grid`].
pub fn integrate(sys: &LinearSystem2D, s0: State, t_end: f64, dt: f64) -> Result<Vec<State>, DynamicsError> {
    let grid = time_grid(s0.t, t_end, dt)?;
    let mut out = Vec::with_capacity(grid.len());
    out.push(s0);
    let (mut q, mut i) = (s0.q, s0.i);
    for w in grid.windows(2) {
        (q, i) = rk4_step(sys, q, i, w[1] - w[0]);
        out.push(State { t: w[1], q, i });
    }
    Ok(out)
}

/// Scalar supply-demand law `dQ/dt = f(Q) + V + σ·ξ(t)` with Gaussian white
/// noise `ξ` drawn from a generator seeded with `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyDemandSpec {
    /// Excess-demand response `f(Q)`.
    pub response: Polynomial,
    /// Governmental potential `V`.
    pub potential: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl SupplyDemandSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(DynamicsError::InvalidSigma(self.sigma));
        }
        if !self.potential.is_finite() || !self.response.is_finite() {
            return Err(DynamicsError::NonFiniteParameter);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplyPoint {
    pub t: f64,
    pub q: f64,
}

/// Euler-Maruyama path from `(0, q0)` to `t_end`:
/// `Q_{k+1} = Q_k + (f(Q_k) + V)·h + σ·√h·ξ_k`.
///
/// With `sigma == 0` no random numbers are drawn, so the path does not
/// depend on the seed.
pub fn supply_demand_simulate(
    spec: &SupplyDemandSpec,
    q0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<SupplyPoint>, DynamicsError> {
    spec.validate()?;
    if !q0.is_finite() {
        return Err(DynamicsError::NonFiniteState);
    }
    let grid = time_grid(0.0, t_end, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut q = q0;
    let mut out = Vec::with_capacity(grid.len());
    out.push(SupplyPoint { t: 0.0, q });
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let drift = spec.response.eval(q) + spec.potential;
        q += drift * h;
        if spec.sigma > 0.0 {
            let xi: f64 = StandardNormal.sample(&mut rng);
            q += spec.sigma * h.sqrt() * xi;
        }
        out.push(SupplyPoint { t: w[1], q });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub q: f64,
    pub i: f64,
    pub dq: f64,
    pub di: f64,
}

/// Vector field on a `grid_n × grid_n` lattice spanning both ranges, `Q`
/// varying slowest.
pub fn phase_field(
    sys: &LinearSystem2D,
    q_range: (f64, f64),
    i_range: (f64, f64),
    grid_n: usize,
) -> Result<Vec<FieldSample>, DynamicsError> {
    if grid_n < 2 {
        return Err(DynamicsError::InvalidGrid(grid_n));
    }
    for (lo, hi) in [q_range, i_range] {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(DynamicsError::InvalidRange { lo, hi });
        }
    }
    let axis = |(lo, hi): (f64, f64), k: usize| {
        if k == grid_n - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (grid_n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(grid_n * grid_n);
    for a in 0..grid_n {
        let q = axis(q_range, a);
        for b in 0..grid_n {
            let i = axis(i_range, b);
            let (dq, di) = sys.rate(q, i);
            out.push(FieldSample { q, i, dq, di });
        }
    }
    Ok(out)
}
