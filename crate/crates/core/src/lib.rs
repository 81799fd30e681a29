//! Branching Brownian motion confined to a moving tube.
//!
//! A dyadic branching Brownian motion is run with killing on exit from the
//! tube {x : |x − f(t)| < L} around a prescribed path f. The crate provides:
//!
//! - [`path`]: the catalog of center-line paths with analytic derivatives;
//! - [`functionals`]: the deterministic energy/curvature functionals of a
//!   path and the growth-rate predictions they induce;
//! - [`sim`]: the forward Monte Carlo simulator with Brownian-bridge exit
//!   correction, the additive martingale Z(t), and ensemble estimators;
//! - [`spine`]: the single distinguished line under the changed measure
//!   (tangent confinement drift, doubled branch rate) and the full tree it
//!   immigrates into;
//! - [`pde`]: a moving-frame Crank–Nicolson solver for the single-particle
//!   tube-survival probability, the deterministic oracle for the Monte
//!   Carlo estimates.

pub mod functionals;
pub mod path;
pub mod pde;
pub mod rng;
pub mod sim;
pub mod spine;
pub mod stats;

pub use functionals::{
    accumulate_functionals, check_usual_conditions, compute_t_p, predict_rates, sandwich_tubes,
    PathFunctionals, RatePrediction, Regime, TpOutcome, UsualConditionsReport,
};
pub use path::{default_catalog, list_catalog, parse_path_key, PathError, PathKind, PathSpec};
pub use pde::{constant_tube_exact, expected_count_curve, solve_survival, CountCurve, PdeError, PdeGrid, PdeSolution};
pub use sim::{
    bridge_kill_prob, compute_z, estimate_growth_rate, simulate, survival_probability, GrowthEstimate,
    Particle, SimConfig, SimError, SimOutput, SurvivalEstimate, Thinning, TrajectoryStats,
};
pub use spine::{
    equilibrium_check, simulate_spine, simulate_under_q, spine_decomposition_series, spine_drift,
    EquilibriumCheck, QRun, SpineError, SpineRun, ZetaSeries,
};
