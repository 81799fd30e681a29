//! Deterministic path functionals: the cumulative energy A(t) = ∫₀ᵗ f'(s)² ds,
//! the cumulative curvature B(t) = ∫₀ᵗ |f''(s)| ds, the tail energy rates they
//! induce, and the growth-rate predictions built from them.

use std::f64::consts::PI;

use crate::path::{PathError, PathSpec};

/// Fraction of the horizon at which the tail window for S_sup/S_inf starts.
pub const TAIL_WINDOW_FRACTION: f64 = 0.1;

/// Cumulative quadrature of f'² and |f''| on a uniform grid, plus the
/// tail-window extrema of A(t)/t.
#[derive(Debug, Clone)]
pub struct PathFunctionals {
    pub t_grid: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// sup of A(t)/t over the tail window [window_start, horizon]
    pub s_sup: f64,
    /// inf of A(t)/t over the same window
    pub s_inf: f64,
    pub window_start: f64,
    pub step: f64,
}

impl PathFunctionals {
    pub fn horizon(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    /// A(t) by linear interpolation between grid points.
    pub fn a_at(&self, t: f64) -> f64 {
        interp(&self.t_grid, &self.a, t, self.step)
    }

    /// B(t) by linear interpolation between grid points.
    pub fn b_at(&self, t: f64) -> f64 {
        interp(&self.t_grid, &self.b, t, self.step)
    }

    /// CSV rows (t, A, B, A/t, B/t); the t = 0 ratios are reported as 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,A,B,A_over_t,B_over_t\n");
        for i in 0..self.t_grid.len() {
            let t = self.t_grid[i];
            let (ra, rb) = if t > 0.0 { (self.a[i] / t, self.b[i] / t) } else { (0.0, 0.0) };
            out.push_str(&format!("{},{},{},{},{}\n", t, self.a[i], self.b[i], ra, rb));
        }
        out
    }
}

fn interp(ts: &[f64], vs: &[f64], t: f64, step: f64) -> f64 {
    let n = ts.len() - 1;
    if t <= ts[0] {
        return vs[0];
    }
    if t >= ts[n] {
        return vs[n];
    }
    let i = ((t / step).floor() as usize).min(n - 1);
    let w = (t - ts[i]) / step;
    vs[i] * (1.0 - w) + vs[i + 1] * w
}

/// Composite-Simpson cumulative quadrature of f'² and |f''| over
/// [0, horizon] on n_steps uniform intervals (rounded up to even).
///
/// Odd grid points get the half-pair Newton–Cotes value; both rules are
/// exact for quadratics. The running sums are clamped to be nondecreasing,
/// which only bites when the integrand oscillates below the grid scale.
pub fn accumulate_functionals(
    spec: &PathSpec,
    horizon: f64,
    n_steps: usize,
) -> Result<PathFunctionals, PathError> {
    if !(horizon > 0.0) {
        return Err(PathError::InvalidArg { msg: format!("horizon must be positive, got {horizon}") });
    }
    if n_steps < 10 {
        return Err(PathError::InvalidArg { msg: format!("n_steps must be at least 10, got {n_steps}") });
    }
    let n = n_steps + (n_steps & 1);
    let h = horizon / n as f64;

    let mut t_grid = Vec::with_capacity(n + 1);
    let mut g = Vec::with_capacity(n + 1); // f'(t)^2
    let mut q = Vec::with_capacity(n + 1); // |f''(t)|
    for i in 0..=n {
        let t = if i == n { horizon } else { i as f64 * h };
        let df = spec.slope(t);
        let d2f = spec.curvature(t);
        if !df.is_finite() {
            return Err(PathError::NonFinite { what: "f'", t });
        }
        if !d2f.is_finite() {
            return Err(PathError::NonFinite { what: "f''", t });
        }
        t_grid.push(t);
        g.push(df * df);
        q.push(d2f.abs());
    }

    let a = cumulative_simpson(&g, h);
    let b = cumulative_simpson(&q, h);

    let window_start = horizon * TAIL_WINDOW_FRACTION;
    let mut s_sup = f64::NEG_INFINITY;
    let mut s_inf = f64::INFINITY;
    for i in 1..=n {
        if t_grid[i] >= window_start {
            let ratio = a[i] / t_grid[i];
            s_sup = s_sup.max(ratio);
            s_inf = s_inf.min(ratio);
        }
    }

    Ok(PathFunctionals { t_grid, a, b, s_sup, s_inf, window_start, step: h })
}

/// Cumulative composite-Simpson integral of equally spaced samples
/// (odd sample count, i.e. an even number of intervals). Odd indices use
/// the half-pair Newton–Cotes rule; running sums are clamped nondecreasing
/// for nonnegative integrands.
pub(crate) fn cumulative_simpson(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len() - 1;
    assert!(n >= 2 && n % 2 == 0, "need an even number of intervals");
    let mut acc = vec![0.0; n + 1];
    for k in (0..n).step_by(2) {
        let half = acc[k] + h / 12.0 * (5.0 * v[k] + 8.0 * v[k + 1] - v[k + 2]);
        acc[k + 1] = half.max(acc[k]);
        let full = acc[k] + h / 3.0 * (v[k] + 4.0 * v[k + 1] + v[k + 2]);
        acc[k + 2] = full.max(acc[k + 1]);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Extinction,
    Supercritical,
    CriticalUndetermined,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Extinction => write!(f, "EXTINCTION"),
            Regime::Supercritical => write!(f, "SUPERCRITICAL"),
            Regime::CriticalUndetermined => write!(f, "CRITICAL_UNDETERMINED"),
        }
    }
}

/// Predicted growth of log|N̂(t)|/t: the criticality parameter
/// S̃ = r − π²/8L² − S_sup/2 and the limsup/liminf rates.
#[derive(Debug, Clone, Copy)]
pub struct RatePrediction {
    pub r: f64,
    pub l: f64,
    pub s_sup: f64,
    pub s_inf: f64,
    pub s_tilde: f64,
    pub rate_limsup: f64,
    pub rate_liminf: f64,
    pub regime: Regime,
}

pub fn predict_rates(
    spec: &PathSpec,
    r: f64,
    l: f64,
    horizon: f64,
    n_steps: usize,
) -> Result<RatePrediction, PathError> {
    if !(r > 0.0) || !(l > 0.0) {
        return Err(PathError::InvalidArg { msg: format!("need r > 0 and L > 0, got r={r}, L={l}") });
    }
    let f = accumulate_functionals(spec, horizon, n_steps)?;
    Ok(prediction_from_functionals(&f, r, l))
}

pub fn prediction_from_functionals(f: &PathFunctionals, r: f64, l: f64) -> RatePrediction {
    let confinement = PI * PI / (8.0 * l * l);
    let s_tilde = r - confinement - f.s_sup / 2.0;
    let rate_limsup = r - confinement - f.s_inf / 2.0;
    let rate_liminf = r - confinement - f.s_sup / 2.0;
    let regime = if s_tilde < 0.0 {
        Regime::Extinction
    } else if s_tilde > 0.0 {
        Regime::Supercritical
    } else {
        Regime::CriticalUndetermined
    };
    RatePrediction { r, l, s_sup: f.s_sup, s_inf: f.s_inf, s_tilde, rate_limsup, rate_liminf, regime }
}

/// Outcome of the T(p) grid scan.
#[derive(Debug, Clone, Copy)]
pub struct TpOutcome {
    /// Smallest grid time from which the drift inequality holds through the
    /// horizon; `None` if it is not attained within the horizon.
    pub time: Option<f64>,
    pub grid_step: f64,
    pub s_tilde: f64,
}

/// Smallest grid time t such that
/// ∫₀ˢ (r − π²/8L² − ½f'(u)² − 2L|f''(u)|) du − 2L|f'(0)| ≥ p·S̃·s
/// for every grid s in [t, horizon].
pub fn compute_t_p(
    spec: &PathSpec,
    r: f64,
    l: f64,
    p: f64,
    horizon: f64,
    n_steps: usize,
) -> Result<TpOutcome, PathError> {
    if !(0.0..1.0).contains(&p) {
        return Err(PathError::InvalidArg { msg: format!("p must lie in [0, 1), got {p}") });
    }
    if !(r > 0.0) || !(l > 0.0) {
        return Err(PathError::InvalidArg { msg: format!("need r > 0 and L > 0, got r={r}, L={l}") });
    }
    let f = accumulate_functionals(spec, horizon, n_steps)?;
    let confinement = PI * PI / (8.0 * l * l);
    let s_tilde = r - confinement - f.s_sup / 2.0;
    let boundary_cost = 2.0 * l * spec.slope(0.0).abs();

    let n = f.t_grid.len();
    // last index at which the inequality fails; T(p) is the next grid point
    let mut last_fail: Option<usize> = None;
    for i in (0..n).rev() {
        let t = f.t_grid[i];
        let lhs = (r - confinement) * t - 0.5 * f.a[i] - 2.0 * l * f.b[i] - boundary_cost;
        if lhs < p * s_tilde * t {
            last_fail = Some(i);
            break;
        }
    }
    let time = match last_fail {
        None => Some(0.0),
        Some(i) if i + 1 < n => Some(f.t_grid[i + 1]),
        Some(_) => None,
    };
    Ok(TpOutcome { time, grid_step: f.step, s_tilde })
}

/// Diagnostic report for the usual conditions on f.
#[derive(Debug, Clone)]
pub struct UsualConditionsReport {
    pub f0_abs: f64,
    /// worst relative mismatch between central differences of f and f'
    pub max_mismatch_df: f64,
    /// worst relative mismatch between central differences of f' and f''
    pub max_mismatch_d2f: f64,
    /// (t, B(t)/t) at t = horizon/8, horizon/4, horizon/2, horizon
    pub curvature_ratios: Vec<(f64, f64)>,
    pub condition3_plausible: bool,
    pub condition3_tol: f64,
}

impl UsualConditionsReport {
    /// All three usual conditions look satisfied numerically.
    pub fn passes(&self) -> bool {
        self.f0_abs < 1e-9
            && self.max_mismatch_df < 1e-5
            && self.max_mismatch_d2f < 1e-5
            && self.condition3_plausible
    }
}

/// Relative central-difference error of `deriv` against `value` at t,
/// minimized over a ladder of step sizes (smaller steps dodge curvature,
/// larger ones dodge roundoff).
fn fd_mismatch(value: impl Fn(f64) -> f64, deriv: f64, t: f64) -> f64 {
    let scale = t.abs().max(1.0);
    let mut best = f64::INFINITY;
    for k in 3..=9 {
        let h = scale * 10f64.powi(-k);
        if h >= t && t > 0.0 {
            continue;
        }
        let est = (value(t + h) - value(t - h)) / (2.0 * h);
        let rel = (est - deriv).abs() / deriv.abs().max(1.0);
        best = best.min(rel);
    }
    best
}

pub fn check_usual_conditions(spec: &PathSpec, horizon: f64) -> UsualConditionsReport {
    check_usual_conditions_with_tol(spec, horizon, 1e-2)
}

pub fn check_usual_conditions_with_tol(
    spec: &PathSpec,
    horizon: f64,
    condition3_tol: f64,
) -> UsualConditionsReport {
    assert!(horizon > 0.0);
    let f0_abs = spec.position(0.0).abs();

    let zones = spec.fd_exclusion_zones(horizon);
    let excluded = |t: f64| zones.iter().any(|&(a, b)| t >= a && t <= b);
    let mut max_mismatch_df: f64 = 0.0;
    let mut max_mismatch_d2f: f64 = 0.0;
    let n_probe = 64;
    for j in 0..n_probe {
        let t = horizon * (j as f64 + 0.37) / n_probe as f64;
        if excluded(t) {
            continue;
        }
        max_mismatch_df = max_mismatch_df.max(fd_mismatch(|s| spec.position(s), spec.slope(t), t));
        max_mismatch_d2f =
            max_mismatch_d2f.max(fd_mismatch(|s| spec.slope(s), spec.curvature(t), t));
    }

    let n_steps = ((horizon * 100.0) as usize).clamp(50_000, 2_000_000);
    let ratios = match accumulate_functionals(spec, horizon, n_steps) {
        Ok(f) => [0.125, 0.25, 0.5, 1.0]
            .iter()
            .map(|&frac| {
                let t = horizon * frac;
                (t, f.b_at(t) / t)
            })
            .collect::<Vec<_>>(),
        Err(_) => vec![(horizon, f64::INFINITY)],
    };
    let nonincreasing = ratios.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    let condition3_plausible = nonincreasing && ratios.last().map(|&(_, v)| v < condition3_tol).unwrap_or(false);

    UsualConditionsReport {
        f0_abs,
        max_mismatch_df,
        max_mismatch_d2f,
        curvature_ratios: ratios,
        condition3_plausible,
        condition3_tol,
    }
}

/// Half-widths (L_upper, L_lower) such that the fn-tube of half-width
/// L_upper contains the f-tube of half-width L, and the fn-tube of
/// half-width L_lower is contained in it. d is the grid maximum of |f − fn|.
pub fn sandwich_tubes(
    f_spec: &PathSpec,
    fn_spec: &PathSpec,
    l: f64,
    horizon: f64,
    n_steps: usize,
) -> Result<(f64, f64), PathError> {
    if !(l > 0.0) || !(horizon > 0.0) || n_steps < 2 {
        return Err(PathError::InvalidArg {
            msg: format!("need L > 0, horizon > 0, n_steps >= 2; got L={l}, horizon={horizon}, n_steps={n_steps}"),
        });
    }
    let mut d: f64 = 0.0;
    for i in 0..=n_steps {
        let t = horizon * i as f64 / n_steps as f64;
        d = d.max((f_spec.position(t) - fn_spec.position(t)).abs());
    }
    if l <= d {
        return Err(PathError::ApproximationTooCoarse { l, d });
    }
    Ok((l + d, l - d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::parse_path_key;

    const PI2_32: f64 = PI * PI / 32.0;

    #[test]
    fn linear_energy_is_exact() {
        let p = parse_path_key("linear:lambda=0.8").unwrap();
        let f = accumulate_functionals(&p, 50.0, 1000).unwrap();
        for (i, &t) in f.t_grid.iter().enumerate() {
            assert!((f.a[i] - 0.64 * t).abs() < 1e-10, "A({t}) = {}", f.a[i]);
        }
        assert!((f.s_sup - 0.64).abs() < 1e-10);
        assert!((f.s_inf - 0.64).abs() < 1e-10);
    }

    #[test]
    fn power_energy_rate_vanishes() {
        let p = parse_path_key("power:beta=0.5,eps=1").unwrap();
        let f = accumulate_functionals(&p, 1e6, 2_000_000).unwrap();
        // A(t) = 0.25 log(t+1), so A/t at the window start dominates
        assert!(f.s_sup > 0.0 && f.s_sup < 1e-4, "s_sup = {}", f.s_sup);
    }

    #[test]
    fn golden_ratio_energy_window() {
        let p = parse_path_key("sinlog:lambda=1").unwrap();
        let f = accumulate_functionals(&p, 1e6, 2_000_000).unwrap();
        let sup_half = f.s_sup / 2.0;
        let inf_half = f.s_inf / 2.0;
        assert!((0.713..=0.733).contains(&sup_half), "S_sup/2 = {sup_half}");
        assert!((0.266..=0.286).contains(&inf_half), "S_inf/2 = {inf_half}");
    }

    #[test]
    fn functionals_are_nondecreasing_from_zero() {
        for spec in crate::path::default_catalog() {
            let f = accumulate_functionals(&spec, 200.0, 4000).unwrap();
            assert_eq!(f.a[0], 0.0);
            assert_eq!(f.b[0], 0.0);
            assert!(f.a.windows(2).all(|w| w[1] >= w[0]), "{} A decreases", spec.name);
            assert!(f.b.windows(2).all(|w| w[1] >= w[0]), "{} B decreases", spec.name);
            assert!(f.s_inf <= f.s_sup);
        }
    }

    #[test]
    fn simpson_halving_converges() {
        for spec in crate::path::default_catalog() {
            let coarse = accumulate_functionals(&spec, 100.0, 20_000).unwrap();
            let fine = accumulate_functionals(&spec, 100.0, 40_000).unwrap();
            let a0 = *coarse.a.last().unwrap();
            let a1 = *fine.a.last().unwrap();
            let rel = (a0 - a1).abs() / a1.abs().max(1.0);
            assert!(rel < 1e-6, "{}: halving changed A by {rel}", spec.name);
        }
    }

    /// Brute-force interval counting for the exact dyadic path: total
    /// slope-1 time below t, summed interval by interval.
    fn dyadic_ones_oracle(t: f64) -> f64 {
        let mut total = 0.0;
        let mut k = 0u32;
        loop {
            let lo = (2.0f64).powi(2 * k as i32 + 1);
            if lo >= t {
                return total;
            }
            let hi = (2.0f64).powi(2 * k as i32 + 2);
            total += (t.min(hi) - lo).max(0.0);
            k += 1;
        }
    }

    #[test]
    fn dyadic_running_ratio_hits_sixths_and_thirds() {
        for k in 6..=9 {
            let odd = (2.0f64).powi(2 * k + 1);
            let even = (2.0f64).powi(2 * k + 2);
            let r_odd = dyadic_ones_oracle(odd) / (2.0 * odd);
            let r_even = dyadic_ones_oracle(even) / (2.0 * even);
            assert!((r_odd - 1.0 / 6.0).abs() < 1e-3, "k={k}: {r_odd}");
            assert!((r_even - 1.0 / 3.0).abs() < 1e-3, "k={k}: {r_even}");
        }
    }

    #[test]
    fn mollified_dyadic_quadrature_matches_interval_counting() {
        let smooth = parse_path_key("dyadic_smooth:w=0.01").unwrap();
        let horizon = (2.0f64).powi(20);
        let f = accumulate_functionals(&smooth, horizon, 1 << 21).unwrap();
        for k in 6..=9 {
            for t in [(2.0f64).powi(2 * k + 1), (2.0f64).powi(2 * k + 2)] {
                let oracle = dyadic_ones_oracle(t) / (2.0 * t);
                let quad = f.a_at(t) / (2.0 * t);
                assert!((oracle - quad).abs() < 1e-3, "k={k}, t={t}: oracle {oracle} vs quadrature {quad}");
            }
        }
    }

    #[test]
    fn dyadic_tail_window_extrema() {
        let p = parse_path_key("dyadic").unwrap();
        let f = accumulate_functionals(&p, (2.0f64).powi(20), 1 << 21).unwrap();
        assert!((f.s_sup / 2.0 - 1.0 / 3.0).abs() < 1e-3, "s_sup/2 = {}", f.s_sup / 2.0);
        assert!((f.s_inf / 2.0 - 1.0 / 6.0).abs() < 1e-3, "s_inf/2 = {}", f.s_inf / 2.0);
    }

    #[test]
    fn zero_path_rates_at_half_pi_tube() {
        let p = parse_path_key("zero").unwrap();
        let pred = predict_rates(&p, 1.0, std::f64::consts::FRAC_PI_2, 100.0, 1000).unwrap();
        assert!((pred.rate_limsup - 0.5).abs() < 1e-12);
        assert!((pred.rate_liminf - 0.5).abs() < 1e-12);
        assert_eq!(pred.regime, Regime::Supercritical);
    }

    #[test]
    fn linear_rates_are_exact() {
        let p = parse_path_key("linear:lambda=0.5").unwrap();
        let pred = predict_rates(&p, 1.0, 2.0, 100.0, 1000).unwrap();
        let expect = 1.0 - PI2_32 - 0.125;
        assert!((pred.rate_limsup - expect).abs() < 1e-10);
        assert!((pred.rate_liminf - expect).abs() < 1e-10);
        assert_eq!(pred.regime, Regime::Supercritical);
    }

    #[test]
    fn linear_extinction_regime() {
        // r < lambda^2/2 + pi^2/8L^2
        let p = parse_path_key("linear:lambda=1.2").unwrap();
        let pred = predict_rates(&p, 1.0, 2.0, 100.0, 1000).unwrap();
        assert_eq!(pred.regime, Regime::Extinction);
        assert!(pred.s_tilde < 0.0);
        assert!(pred.rate_limsup >= pred.rate_liminf);
    }

    #[test]
    fn dyadic_rate_prediction() {
        let p = parse_path_key("dyadic").unwrap();
        let pred = predict_rates(&p, 1.0, 2.0, (2.0f64).powi(20), 1 << 21).unwrap();
        assert!((pred.rate_liminf - (1.0 - PI2_32 - 1.0 / 3.0)).abs() < 1e-3, "{}", pred.rate_liminf);
        assert!((pred.rate_limsup - (1.0 - PI2_32 - 1.0 / 6.0)).abs() < 1e-3, "{}", pred.rate_limsup);
    }

    #[test]
    fn t_p_zero_path_is_zero() {
        let p = parse_path_key("zero").unwrap();
        let out = compute_t_p(&p, 1.0, 2.0, 0.0, 50.0, 5000).unwrap();
        assert_eq!(out.time, Some(0.0));
        let out = compute_t_p(&p, 1.0, 2.0, 0.5, 50.0, 5000).unwrap();
        assert_eq!(out.time, Some(0.0));
    }

    #[test]
    fn t_p_linear_against_dense_scan() {
        // independent scan: trapezoid on a 10x finer grid
        let p = parse_path_key("linear:lambda=0.5").unwrap();
        let (r, l, frac, horizon) = (1.0, 2.0, 0.9, 100.0);
        let s_tilde = r - PI2_32 - 0.125;
        let fine = 100_000usize;
        let h = horizon / fine as f64;
        let mut last_fail = 0.0;
        for i in (0..=fine).rev() {
            let t = i as f64 * h;
            // for a linear path the integrand is exactly s_tilde
            let lhs = s_tilde * t - 2.0 * l * 0.5;
            if lhs < frac * s_tilde * t {
                last_fail = t;
                break;
            }
        }
        let oracle = last_fail + h;
        assert!((oracle - 35.2999).abs() < 0.01, "oracle = {oracle}");

        let out = compute_t_p(&p, r, l, frac, horizon, 10_000).unwrap();
        let t = out.time.expect("attained");
        assert!((t - oracle).abs() <= out.grid_step + h, "T(0.9) = {t} vs oracle {oracle}");
    }

    #[test]
    fn t_p_not_attained_within_short_horizon() {
        let p = parse_path_key("linear:lambda=0.5").unwrap();
        let out = compute_t_p(&p, 1.0, 2.0, 0.9, 20.0, 2000).unwrap();
        assert_eq!(out.time, None);
    }

    #[test]
    fn t_p_rejects_bad_fraction() {
        let p = parse_path_key("zero").unwrap();
        assert!(compute_t_p(&p, 1.0, 2.0, 1.0, 10.0, 100).is_err());
        assert!(compute_t_p(&p, 1.0, 2.0, -0.1, 10.0, 100).is_err());
    }

    #[test]
    fn usual_conditions_verdicts() {
        let linear = parse_path_key("linear:lambda=1").unwrap();
        assert!(check_usual_conditions(&linear, 1e4).passes());

        let sinfreq = parse_path_key("sinfreq:delta=0.01").unwrap();
        let rep = check_usual_conditions(&sinfreq, 1e4);
        assert!(!rep.condition3_plausible, "B/t ratios: {:?}", rep.curvature_ratios);

        let scaled = parse_path_key("scaledsin:delta=0.1").unwrap();
        assert!(!check_usual_conditions(&scaled, 1e4).condition3_plausible);
    }

    #[test]
    fn expected_catalog_paths_pass_usual_conditions() {
        for spec in crate::path::default_catalog() {
            if spec.usual_conditions_expected {
                let rep = check_usual_conditions(&spec, 1e4);
                assert!(
                    rep.passes(),
                    "{} should pass: f0={}, df={}, d2f={}, ratios={:?}",
                    spec.name,
                    rep.f0_abs,
                    rep.max_mismatch_df,
                    rep.max_mismatch_d2f,
                    rep.curvature_ratios
                );
            }
        }
    }

    #[test]
    fn sandwich_tube_widths() {
        let zero = parse_path_key("zero").unwrap();
        let (up, lo) = sandwich_tubes(&zero, &zero, 2.0, 100.0, 1000).unwrap();
        assert_eq!((up, lo), (2.0, 2.0));

        let wiggle = parse_path_key("scaledsin:delta=0.1").unwrap();
        let (up, lo) = sandwich_tubes(&zero, &wiggle, 2.0, 50.0, 200_000).unwrap();
        assert!((up - 2.1).abs() < 1e-3, "upper = {up}");
        assert!((lo - 1.9).abs() < 1e-3, "lower = {lo}");

        assert!(matches!(
            sandwich_tubes(&zero, &wiggle, 0.05, 50.0, 200_000),
            Err(PathError::ApproximationTooCoarse { .. })
        ));
    }

    #[test]
    fn sandwich_power_against_shifted_variant() {
        let a = parse_path_key("power:beta=0.5,eps=1").unwrap();
        let b = parse_path_key("power:beta=0.5,eps=2").unwrap();
        let horizon = 100.0;
        // brute-force grid max on an independent, denser grid
        let mut d = 0.0f64;
        let n = 500_000;
        for i in 0..=n {
            let t = horizon * i as f64 / n as f64;
            d = d.max((a.position(t) - b.position(t)).abs());
        }
        let (up, lo) = sandwich_tubes(&a, &b, 2.0, horizon, 100_000).unwrap();
        assert!((up - (2.0 + d)).abs() < 1e-6);
        assert!((lo - (2.0 - d)).abs() < 1e-6);
    }

    #[test]
    fn csv_export_shape() {
        let p = parse_path_key("linear:lambda=1").unwrap();
        let f = accumulate_functionals(&p, 10.0, 10).unwrap();
        let csv = f.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,A,B,A_over_t,B_over_t");
        assert_eq!(csv.lines().count(), 12); // header + 11 grid points
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,0,0,0,0"));
    }
}
