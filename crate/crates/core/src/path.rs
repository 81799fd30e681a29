//! Path catalog: the prescribed center-lines f that particles must follow,
//! with analytic first and second derivatives.
//!
//! Every catalog entry satisfies f(0) = 0. Entries flagged
//! `usual_conditions_expected = false` are the high-frequency counterexample
//! paths whose mean curvature does not vanish; they are kept so the
//! diagnostic in [`crate::functionals::check_usual_conditions`] has
//! something to fail on.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("time {t} is negative; paths are defined on [0, ∞)")]
    NegativeTime { t: f64 },
    #[error("unknown path key `{key}`")]
    UnknownPath { key: String },
    #[error("bad path parameter: {msg}")]
    BadParam { msg: String },
    #[error("non-finite {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },
    #[error("invalid argument: {msg}")]
    InvalidArg { msg: String },
    #[error("approximation too coarse: sup|f - f_n| = {d} is not below L = {l}")]
    ApproximationTooCoarse { l: f64, d: f64 },
}

/// Cubic smoothstep and its helpers, used to mollify the dyadic slope.
#[inline]
fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}
#[inline]
fn smoothstep_deriv(u: f64) -> f64 {
    6.0 * u * (1.0 - u)
}
#[inline]
fn smoothstep_integral(u: f64) -> f64 {
    u * u * u * (1.0 - 0.5 * u)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// f ≡ 0
    Zero,
    /// f(t) = λ t
    Linear { lambda: f64 },
    /// f(t) = (t+ε)^β − ε^β, the shifted power path (finite slope at 0)
    Power { beta: f64, eps: f64 },
    /// f(t) = log(t+1)
    Log,
    /// f(t) = λ (t+1) sin(log(t+1))
    SinLog { lambda: f64 },
    /// slope 0 on [2^{2k}, 2^{2k+1}), slope 1 on [2^{2k+1}, 2^{2k+2})
    Dyadic,
    /// dyadic with the slope switches replaced by cubic-smoothstep ramps of
    /// relative width `w`, centered on the switch times
    DyadicSmooth { w: f64 },
    /// f(t) = √(2r) t − c ((t+ε)^β − ε^β); its energy rate is 2r exactly
    Critical { c: f64, beta: f64, r: f64, eps: f64 },
    /// f(t) = sin(t/δ) — fails usual condition (3)
    SinFreq { delta: f64 },
    /// f(t) = δ sin(t/δ) — uniformly small but fails usual condition (3)
    ScaledSin { delta: f64 },
    /// g(s) = f(s + t0) − f(t0)
    Shifted { base: Box<PathKind>, t0: f64, offset: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub name: String,
    pub kind: PathKind,
    pub usual_conditions_expected: bool,
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Largest n with 2^n <= t, robust to last-bit rounding near powers of two.
fn floor_log2(t: f64) -> i32 {
    debug_assert!(t >= 1.0);
    let mut n = t.log2().floor() as i32;
    if (2.0f64).powi(n + 1) <= t {
        n += 1;
    }
    if (2.0f64).powi(n) > t {
        n -= 1;
    }
    n
}

/// Total length of slope-1 intervals of the exact dyadic path below 2^n.
fn dyadic_ones_before(n: i32) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    if n % 2 == 0 {
        ((2.0f64).powi(n + 1) - 2.0) / 3.0
    } else {
        ((2.0f64).powi(n) - 2.0) / 3.0
    }
}

fn dyadic_position(t: f64) -> f64 {
    if t < 2.0 {
        return 0.0;
    }
    let n = floor_log2(t);
    let base = dyadic_ones_before(n);
    if n % 2 == 1 {
        base + (t - (2.0f64).powi(n))
    } else {
        base
    }
}

fn dyadic_slope(t: f64) -> f64 {
    if t < 2.0 {
        return 0.0;
    }
    if floor_log2(t) % 2 == 1 {
        1.0
    } else {
        0.0
    }
}

/// Plateau slope after the m-th switch (m = 0 means "before the first ramp").
#[inline]
fn dyadic_plateau_slope(m: i32) -> f64 {
    if m >= 1 && m % 2 == 1 {
        1.0
    } else {
        0.0
    }
}

/// Region of the mollified dyadic path: either on the ramp at 2^m or on the
/// plateau that follows switch m.
enum SmoothRegion {
    Plateau { m: i32 },
    Ramp { m: i32, u: f64 },
}

fn dyadic_smooth_region(t: f64, w: f64) -> SmoothRegion {
    let first_ramp_start = 2.0 * (1.0 - 0.5 * w);
    if t < first_ramp_start {
        return SmoothRegion::Plateau { m: 0 };
    }
    let n = floor_log2(t).max(1);
    for m in [n + 1, n] {
        if m < 1 {
            continue;
        }
        let c = (2.0f64).powi(m);
        let (a, b) = (c * (1.0 - 0.5 * w), c * (1.0 + 0.5 * w));
        if t >= a && t <= b {
            return SmoothRegion::Ramp { m, u: (t - a) / (w * c) };
        }
    }
    SmoothRegion::Plateau { m: n }
}

fn dyadic_smooth_position(t: f64, w: f64) -> f64 {
    let mut acc = 0.0;
    let mut prev_end = 0.0;
    for m in 1..=64 {
        let c = (2.0f64).powi(m);
        let a = c * (1.0 - 0.5 * w);
        let b = c * (1.0 + 0.5 * w);
        let s_prev = dyadic_plateau_slope(m - 1);
        let s_cur = dyadic_plateau_slope(m);
        if t <= a {
            return acc + (t - prev_end) * s_prev;
        }
        acc += (a - prev_end) * s_prev;
        if t <= b {
            let u = (t - a) / (w * c);
            return acc + w * c * (s_prev * u + (s_cur - s_prev) * smoothstep_integral(u));
        }
        acc += w * c * 0.5 * (s_prev + s_cur);
        prev_end = b;
    }
    unreachable!("dyadic_smooth_position: t beyond 2^64")
}

impl PathKind {
    fn position(&self, t: f64) -> f64 {
        match self {
            PathKind::Zero => 0.0,
            PathKind::Linear { lambda } => lambda * t,
            PathKind::Power { beta, eps } => (t + eps).powf(*beta) - eps.powf(*beta),
            PathKind::Log => (t + 1.0).ln(),
            PathKind::SinLog { lambda } => lambda * (t + 1.0) * (t + 1.0).ln().sin(),
            PathKind::Dyadic => dyadic_position(t),
            PathKind::DyadicSmooth { w } => dyadic_smooth_position(t, *w),
            PathKind::Critical { c, beta, r, eps } => {
                (2.0 * r).sqrt() * t - c * ((t + eps).powf(*beta) - eps.powf(*beta))
            }
            PathKind::SinFreq { delta } => (t / delta).sin(),
            PathKind::ScaledSin { delta } => delta * (t / delta).sin(),
            PathKind::Shifted { base, t0, offset } => base.position(t + t0) - offset,
        }
    }

    fn slope(&self, t: f64) -> f64 {
        match self {
            PathKind::Zero => 0.0,
            PathKind::Linear { lambda } => *lambda,
            PathKind::Power { beta, eps } => beta * (t + eps).powf(beta - 1.0),
            PathKind::Log => 1.0 / (t + 1.0),
            PathKind::SinLog { lambda } => {
                let u = (t + 1.0).ln();
                lambda * (u.sin() + u.cos())
            }
            PathKind::Dyadic => dyadic_slope(t),
            PathKind::DyadicSmooth { w } => match dyadic_smooth_region(t, *w) {
                SmoothRegion::Plateau { m } => dyadic_plateau_slope(m),
                SmoothRegion::Ramp { m, u } => {
                    let s_prev = dyadic_plateau_slope(m - 1);
                    let s_cur = dyadic_plateau_slope(m);
                    s_prev + (s_cur - s_prev) * smoothstep(u)
                }
            },
            PathKind::Critical { c, beta, r, eps } => {
                (2.0 * r).sqrt() - c * beta * (t + eps).powf(beta - 1.0)
            }
            PathKind::SinFreq { delta } => (t / delta).cos() / delta,
            PathKind::ScaledSin { delta } => (t / delta).cos(),
            PathKind::Shifted { base, t0, .. } => base.slope(t + t0),
        }
    }

    fn curvature(&self, t: f64) -> f64 {
        match self {
            PathKind::Zero | PathKind::Linear { .. } | PathKind::Dyadic => 0.0,
            PathKind::Power { beta, eps } => beta * (beta - 1.0) * (t + eps).powf(beta - 2.0),
            PathKind::Log => -1.0 / ((t + 1.0) * (t + 1.0)),
            PathKind::SinLog { lambda } => {
                let u = (t + 1.0).ln();
                lambda * (u.cos() - u.sin()) / (t + 1.0)
            }
            PathKind::DyadicSmooth { w } => match dyadic_smooth_region(t, *w) {
                SmoothRegion::Plateau { .. } => 0.0,
                SmoothRegion::Ramp { m, u } => {
                    let s_prev = dyadic_plateau_slope(m - 1);
                    let s_cur = dyadic_plateau_slope(m);
                    (s_cur - s_prev) * smoothstep_deriv(u) / (w * (2.0f64).powi(m))
                }
            },
            PathKind::Critical { c, beta, eps, .. } => {
                -c * beta * (beta - 1.0) * (t + eps).powf(beta - 2.0)
            }
            PathKind::SinFreq { delta } => -(t / delta).sin() / (delta * delta),
            PathKind::ScaledSin { delta } => -(t / delta).sin() / delta,
            PathKind::Shifted { base, t0, .. } => base.curvature(t + t0),
        }
    }
}

impl PathSpec {
    pub fn new(name: impl Into<String>, kind: PathKind, usual_conditions_expected: bool) -> Self {
        PathSpec { name: name.into(), kind, usual_conditions_expected }
    }

    /// f(t). Time must be nonnegative; checked in debug builds only since
    /// this sits in the simulator's inner loop.
    #[inline]
    pub fn position(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "position called with t = {t}");
        self.kind.position(t)
    }

    /// f'(t).
    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "slope called with t = {t}");
        self.kind.slope(t)
    }

    /// f''(t).
    #[inline]
    pub fn curvature(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "curvature called with t = {t}");
        self.kind.curvature(t)
    }

    /// (f, f', f'') with domain checking.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64), PathError> {
        if t < 0.0 {
            return Err(PathError::NegativeTime { t });
        }
        Ok((self.kind.position(t), self.kind.slope(t), self.kind.curvature(t)))
    }

    /// The time-shifted path g(s) = f(s + t0) − f(t0). Nested shifts are
    /// flattened.
    pub fn shift(&self, t0: f64) -> Result<PathSpec, PathError> {
        if t0 < 0.0 {
            return Err(PathError::NegativeTime { t: t0 });
        }
        if t0 == 0.0 {
            return Ok(self.clone());
        }
        let kind = match &self.kind {
            PathKind::Shifted { base, t0: prev, .. } => {
                let total = prev + t0;
                let offset = base.position(total);
                PathKind::Shifted { base: base.clone(), t0: total, offset }
            }
            other => {
                let offset = other.position(t0);
                PathKind::Shifted { base: Box::new(other.clone()), t0, offset }
            }
        };
        Ok(PathSpec {
            name: format!("{}[t0={}]", self.name, t0),
            kind,
            usual_conditions_expected: self.usual_conditions_expected,
        })
    }

    /// Named parameters, for reports and manifests.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match &self.kind {
            PathKind::Zero | PathKind::Log | PathKind::Dyadic => vec![],
            PathKind::Linear { lambda } => vec![("lambda", *lambda)],
            PathKind::Power { beta, eps } => vec![("beta", *beta), ("eps", *eps)],
            PathKind::SinLog { lambda } => vec![("lambda", *lambda)],
            PathKind::DyadicSmooth { w } => vec![("w", *w)],
            PathKind::Critical { c, beta, r, eps } => {
                vec![("c", *c), ("beta", *beta), ("r", *r), ("eps", *eps)]
            }
            PathKind::SinFreq { delta } => vec![("delta", *delta)],
            PathKind::ScaledSin { delta } => vec![("delta", *delta)],
            PathKind::Shifted { base, t0, .. } => {
                let mut p = PathSpec::new("", (**base).clone(), true).params();
                p.push(("t0", *t0));
                p
            }
        }
    }

    /// Intervals on which f is not smooth enough for finite-difference
    /// derivative checks (switch points of the dyadic paths and the kinks of
    /// its mollification).
    pub fn fd_exclusion_zones(&self, horizon: f64) -> Vec<(f64, f64)> {
        let margin = |p: f64| (1e-4 * p).max(1e-4);
        match &self.kind {
            PathKind::Dyadic => {
                let mut zones = Vec::new();
                let mut n = 1;
                while (2.0f64).powi(n) <= horizon && n <= 64 {
                    let p = (2.0f64).powi(n);
                    zones.push((p - margin(p), p + margin(p)));
                    n += 1;
                }
                zones
            }
            PathKind::DyadicSmooth { w } => {
                let mut zones = Vec::new();
                let mut n = 1;
                while (2.0f64).powi(n) * (1.0 - 0.5 * w) <= horizon && n <= 64 {
                    let c = (2.0f64).powi(n);
                    for edge in [c * (1.0 - 0.5 * w), c * (1.0 + 0.5 * w)] {
                        zones.push((edge - margin(edge), edge + margin(edge)));
                    }
                    n += 1;
                }
                zones
            }
            PathKind::Shifted { base, t0, .. } => {
                PathSpec::new("", (**base).clone(), true)
                    .fd_exclusion_zones(horizon + t0)
                    .into_iter()
                    .map(|(a, b)| (a - t0, b - t0))
                    .filter(|&(_, b)| b > 0.0)
                    .collect()
            }
            _ => vec![],
        }
    }
}

/// One catalog row: key, parameter summary, description.
pub fn list_catalog() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("zero", "", "f(t) = 0"),
        ("linear", "lambda=1", "f(t) = lambda*t"),
        ("power", "beta=0.5,eps=1", "f(t) = (t+eps)^beta - eps^beta"),
        ("log", "", "f(t) = log(t+1)"),
        ("sinlog", "lambda=1", "f(t) = lambda*(t+1)*sin(log(t+1))"),
        ("dyadic", "", "slope 0/1 alternating on dyadic intervals (not C^2)"),
        ("dyadic_smooth", "w=0.01", "dyadic with smoothstep ramps at the switches"),
        ("critical", "c=1,beta=0.5,r=1,eps=1", "f(t) = sqrt(2r)*t - c*((t+eps)^beta - eps^beta)"),
        ("sinfreq", "delta=0.1", "f(t) = sin(t/delta) (violates condition (3))"),
        ("scaledsin", "delta=0.1", "f(t) = delta*sin(t/delta) (violates condition (3))"),
    ]
}

/// Parse a catalog key such as `linear:lambda=0.5` or `dyadic`.
pub fn parse_path_key(key: &str) -> Result<PathSpec, PathError> {
    let (name, rest) = match key.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (key.trim(), ""),
    };
    let mut params: Vec<(String, f64)> = Vec::new();
    if !rest.is_empty() {
        for piece in rest.split(',') {
            let (k, v) = piece.split_once('=').ok_or_else(|| PathError::BadParam {
                msg: format!("expected k=v in `{piece}`"),
            })?;
            let v: f64 = v.trim().parse().map_err(|_| PathError::BadParam {
                msg: format!("cannot parse `{}` as a number", v.trim()),
            })?;
            params.push((k.trim().to_string(), v));
        }
    }
    let mut get = |param: &str, default: f64| -> f64 {
        params
            .iter()
            .position(|(k, _)| k == param)
            .map(|i| params.remove(i).1)
            .unwrap_or(default)
    };

    let spec = match name {
        "zero" => PathSpec::new("zero", PathKind::Zero, true),
        "linear" => {
            let lambda = get("lambda", 1.0);
            PathSpec::new(format!("linear:lambda={lambda}"), PathKind::Linear { lambda }, true)
        }
        "power" => {
            let beta = get("beta", 0.5);
            let eps = get("eps", 1.0);
            if !(0.0 < beta && beta < 1.0) {
                return Err(PathError::BadParam { msg: format!("power needs beta in (0,1), got {beta}") });
            }
            if eps <= 0.0 {
                return Err(PathError::BadParam { msg: format!("power needs eps > 0, got {eps}") });
            }
            PathSpec::new(format!("power:beta={beta},eps={eps}"), PathKind::Power { beta, eps }, true)
        }
        "log" => PathSpec::new("log", PathKind::Log, true),
        "sinlog" => {
            let lambda = get("lambda", 1.0);
            PathSpec::new(format!("sinlog:lambda={lambda}"), PathKind::SinLog { lambda }, true)
        }
        "dyadic" => PathSpec::new("dyadic", PathKind::Dyadic, false),
        "dyadic_smooth" => {
            let w = get("w", 0.01);
            if !(0.0 < w && w <= 0.5) {
                return Err(PathError::BadParam { msg: format!("dyadic_smooth needs w in (0, 0.5], got {w}") });
            }
            PathSpec::new(format!("dyadic_smooth:w={w}"), PathKind::DyadicSmooth { w }, true)
        }
        "critical" => {
            let c = get("c", 1.0);
            let beta = get("beta", 0.5);
            let r = get("r", 1.0);
            let eps = get("eps", 1.0);
            if !(0.0 < beta && beta < 1.0) || c <= 0.0 || r <= 0.0 || eps <= 0.0 {
                return Err(PathError::BadParam {
                    msg: format!("critical needs beta in (0,1) and c, r, eps > 0; got c={c}, beta={beta}, r={r}, eps={eps}"),
                });
            }
            PathSpec::new(
                format!("critical:c={c},beta={beta},r={r},eps={eps}"),
                PathKind::Critical { c, beta, r, eps },
                true,
            )
        }
        "sinfreq" => {
            let delta = get("delta", 0.1);
            if delta <= 0.0 {
                return Err(PathError::BadParam { msg: format!("sinfreq needs delta > 0, got {delta}") });
            }
            PathSpec::new(format!("sinfreq:delta={delta}"), PathKind::SinFreq { delta }, false)
        }
        "scaledsin" => {
            let delta = get("delta", 0.1);
            if delta <= 0.0 {
                return Err(PathError::BadParam { msg: format!("scaledsin needs delta > 0, got {delta}") });
            }
            PathSpec::new(format!("scaledsin:delta={delta}"), PathKind::ScaledSin { delta }, false)
        }
        _ => return Err(PathError::UnknownPath { key: key.to_string() }),
    };
    if let Some((k, _)) = params.first() {
        return Err(PathError::BadParam { msg: format!("path `{name}` does not take parameter `{k}`") });
    }
    Ok(spec)
}

/// Every catalog entry with default parameters, for sweep-style tests.
pub fn default_catalog() -> Vec<PathSpec> {
    list_catalog()
        .into_iter()
        .map(|(key, params, _)| {
            let full = if params.is_empty() { key.to_string() } else { format!("{key}:{params}") };
            parse_path_key(&full).expect("default catalog entry must parse")
        })
        .collect()
}
