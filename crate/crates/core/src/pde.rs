//! Moving-frame survival PDE.
//!
//! In the frame y = x − f(t) a single Brownian particle killed on leaving
//! (−L, L) has density u solving
//!
//!     ∂u/∂t = ½ ∂²u/∂y² + f'(t) ∂u/∂y,   u(±L, t) = 0,
//!
//! and the tube-survival probability is p(t) = ∫ u dy. Together with the
//! population identity E|N̂(t)| = e^{rt} p(t) this gives a deterministic
//! oracle for the Monte Carlo estimates.
//!
//! Discretization: θ-scheme (Crank–Nicolson by default) with central
//! differences and a tridiagonal solve per step. The delta initial
//! condition is replaced by the exact unconfined Gaussian at a small warm
//! start time, projected onto cell averages so its mass is exact at any
//! resolution.

use thiserror::Error;

use crate::path::PathSpec;
use crate::stats::{linear_fit, normal_cdf};

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("invalid grid: {msg}")]
    InvalidGrid { msg: String },
    #[error("cell Péclet number {peclet:.3} exceeds 2 at t = {t}; refine the spatial grid (smaller dy) so that max|f'|·dy ≤ 1")]
    PecletViolation { t: f64, peclet: f64 },
    #[error("invalid argument: {msg}")]
    InvalidArg { msg: String },
}

/// Spatial/temporal resolution of the θ-scheme.
#[derive(Debug, Clone, Copy)]
pub struct PdeGrid {
    /// interior spatial points
    pub ny: usize,
    /// time step
    pub dt: f64,
    /// implicitness: 0 explicit, 0.5 Crank–Nicolson, 1 implicit
    pub theta: f64,
}

impl PdeGrid {
    pub fn new(ny: usize, dt: f64, theta: f64) -> Result<Self, PdeError> {
        if ny < 3 {
            return Err(PdeError::InvalidGrid { msg: format!("ny must be at least 3, got {ny}") });
        }
        if !(dt > 0.0) {
            return Err(PdeError::InvalidGrid { msg: format!("dt must be positive, got {dt}") });
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(PdeError::InvalidGrid { msg: format!("theta must lie in [0,1], got {theta}") });
        }
        Ok(PdeGrid { ny, dt, theta })
    }

    /// ny = 400, dt = 1e-3, Crank–Nicolson.
    pub fn default_resolution() -> Self {
        PdeGrid { ny: 400, dt: 1e-3, theta: 0.5 }
    }
}

/// Survival curve and final density profile in the moving frame.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub t_grid: Vec<f64>,
    /// p(t) = remaining probability mass; p = 1 up to the warm start
    pub survival: Vec<f64>,
    /// density on the interior grid at the final time
    pub mass_profile: Vec<f64>,
    pub l: f64,
    pub dy: f64,
    pub warm_start: f64,
}

impl PdeSolution {
    /// p(t) by linear interpolation.
    pub fn survival_at(&self, t: f64) -> f64 {
        let ts = &self.t_grid;
        let n = ts.len() - 1;
        if t <= ts[0] {
            return self.survival[0];
        }
        if t >= ts[n] {
            return self.survival[n];
        }
        let i = ts.partition_point(|&v| v < t).max(1) - 1;
        let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
        self.survival[i] * (1.0 - w) + self.survival[i + 1] * w
    }

    pub fn y_grid(&self) -> Vec<f64> {
        (1..=self.mass_profile.len()).map(|j| -self.l + j as f64 * self.dy).collect()
    }
}

/// Number of initial fully-implicit steps smoothing the warm-start profile
/// before Crank–Nicolson takes over (Rannacher startup).
const STARTUP_IMPLICIT_STEPS: usize = 4;

/// Solve the moving-frame survival problem for `path` on [0, horizon].
pub fn solve_survival(
    path: &PathSpec,
    l: f64,
    horizon: f64,
    grid: &PdeGrid,
) -> Result<PdeSolution, PdeError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(PdeError::InvalidArg { msg: format!("L must be positive and finite, got {l}") });
    }
    if !(horizon > 0.0) {
        return Err(PdeError::InvalidArg { msg: format!("horizon must be positive, got {horizon}") });
    }
    let ny = grid.ny;
    let dy = 2.0 * l / (ny + 1) as f64;
    let dt = grid.dt;

    let t0 = (1e-3f64).min(10.0 * dt);
    if horizon <= t0 {
        return Err(PdeError::InvalidArg {
            msg: format!("horizon {horizon} must exceed the warm start {t0}"),
        });
    }

    // warm start: cell averages of the exact unconfined Gaussian at t0
    let sigma = t0.sqrt();
    let mu = -path.position(t0);
    let mut u: Vec<f64> = (1..=ny)
        .map(|j| {
            let y = -l + j as f64 * dy;
            let hi = normal_cdf((y + 0.5 * dy - mu) / sigma);
            let lo = normal_cdf((y - 0.5 * dy - mu) / sigma);
            (hi - lo) / dy
        })
        .collect();

    let n_steps = ((horizon - t0) / dt).ceil() as usize;
    let mut t_grid = Vec::with_capacity(n_steps + 2);
    let mut survival = Vec::with_capacity(n_steps + 2);
    t_grid.push(0.0);
    survival.push(1.0);
    t_grid.push(t0);
    survival.push(mass(&u, dy).min(1.0));

    // Thomas algorithm scratch space
    let mut cp = vec![0.0; ny];
    let mut dp = vec![0.0; ny];
    let mut rhs = vec![0.0; ny];

    let mut t = t0;
    for step in 0..n_steps {
        let theta = if step < STARTUP_IMPLICIT_STEPS { 1.0 } else { grid.theta };
        let t_next = t0 + (step + 1) as f64 * dt;
        let b_now = path.slope(t);
        let b_next = path.slope(t_next);
        for (tt, b) in [(t, b_now), (t_next, b_next)] {
            let peclet = b.abs() * dy / 0.5;
            if peclet > 2.0 + 1e-12 {
                return Err(PdeError::PecletViolation { t: tt, peclet });
            }
        }

        // explicit part
        let ed = 0.5 / (dy * dy);
        let ea = dt * (1.0 - theta);
        for j in 0..ny {
            let um = if j > 0 { u[j - 1] } else { 0.0 };
            let up = if j + 1 < ny { u[j + 1] } else { 0.0 };
            rhs[j] = u[j] + ea * (ed * (up - 2.0 * u[j] + um) + b_now * (up - um) / (2.0 * dy));
        }

        // implicit part: tridiagonal (sub, diag, super) constant across j
        let ia = dt * theta;
        let sub = -ia * (ed - b_next / (2.0 * dy));
        let diag = 1.0 + 2.0 * ia * ed;
        let sup = -ia * (ed + b_next / (2.0 * dy));

        // Thomas forward sweep
        cp[0] = sup / diag;
        dp[0] = rhs[0] / diag;
        for j in 1..ny {
            let m = diag - sub * cp[j - 1];
            cp[j] = sup / m;
            dp[j] = (rhs[j] - sub * dp[j - 1]) / m;
        }
        u[ny - 1] = dp[ny - 1];
        for j in (0..ny - 1).rev() {
            u[j] = dp[j] - cp[j] * u[j + 1];
        }

        t = t_next;
        t_grid.push(t);
        // survival is nonincreasing for the exact flow; clamp the
        // discretization's sub-roundoff wiggle to preserve that
        let p = mass(&u, dy).min(*survival.last().unwrap());
        survival.push(p);
    }

    Ok(PdeSolution { t_grid, survival, mass_profile: u, l, dy, warm_start: t0 })
}

fn mass(u: &[f64], dy: f64) -> f64 {
    u.iter().sum::<f64>() * dy
}

/// Exact tube-survival probability for the constant (f ≡ 0) tube via the
/// Dirichlet eigenfunction expansion, truncated when the next term bound
/// falls below 1e-14.
pub fn constant_tube_exact(l: f64, t: f64, y0: f64) -> f64 {
    assert!(l > 0.0);
    if y0.abs() >= l {
        return 0.0;
    }
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for n in 0..200_000u32 {
        let k = 2 * n + 1;
        let kf = k as f64;
        let coeff = 4.0 / (kf * std::f64::consts::PI);
        let decay = (-(kf * kf) * std::f64::consts::PI.powi(2) * t / (8.0 * l * l)).exp();
        if coeff * decay < 1e-14 {
            break;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * coeff * (kf * std::f64::consts::PI * y0 / (2.0 * l)).cos() * decay;
    }
    sum.clamp(0.0, 1.0)
}

/// Expected population size E|N̂(t)| = e^{rt} p(t) and its running log-slope.
#[derive(Debug, Clone)]
pub struct CountCurve {
    pub t_grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub expected_count: Vec<f64>,
    /// d/dt log(e^{rt} p(t)) by centered differences; NaN at the endpoints
    pub log_slope: Vec<f64>,
}

impl CountCurve {
    /// Least-squares slope of log expected count over [t_lo, t_hi],
    /// with its standard error.
    pub fn fit_log_slope(&self, t_lo: f64, t_hi: f64) -> (f64, f64) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &t) in self.t_grid.iter().enumerate() {
            if t >= t_lo && t <= t_hi && self.expected_count[i] > 0.0 {
                xs.push(t);
                ys.push(self.expected_count[i].ln());
            }
        }
        let (slope, _, se) = linear_fit(&xs, &ys);
        (slope, se)
    }
}

pub fn expected_count_curve(
    path: &PathSpec,
    r: f64,
    l: f64,
    horizon: f64,
    grid: &PdeGrid,
) -> Result<CountCurve, PdeError> {
    if !(r > 0.0) {
        return Err(PdeError::InvalidArg { msg: format!("r must be positive, got {r}") });
    }
    let sol = solve_survival(path, l, horizon, grid)?;
    let expected: Vec<f64> =
        sol.t_grid.iter().zip(&sol.survival).map(|(&t, &p)| (r * t).exp() * p).collect();
    let n = sol.t_grid.len();
    let mut log_slope = vec![f64::NAN; n];
    for i in 1..n.saturating_sub(1) {
        let (e0, e1) = (expected[i - 1], expected[i + 1]);
        if e0 > 0.0 && e1 > 0.0 {
            log_slope[i] = (e1.ln() - e0.ln()) / (sol.t_grid[i + 1] - sol.t_grid[i - 1]);
        }
    }
    Ok(CountCurve { t_grid: sol.t_grid, survival: sol.survival, expected_count: expected, log_slope })
}
