//! Adaptive linearly implicit integration for stiff systems.
//!
//! The stepper is the four-stage-plus-one Rosenbrock scheme of order 4 with an
//! embedded order-3 solution (Hairer & Wanner's RODAS coefficients in transformed
//! form). It needs the Jacobian of the right-hand side, and the explicit time
//! derivative for non-autonomous fields. Between accepted steps the solution is
//! represented by the cubic Hermite interpolant built from the knot states and
//! slopes; event roots are localized by bisection on that interpolant.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bracket width at which event bisection stops.
const EVENT_TIME_TOL: f64 = 1e-12;

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &SVector<f64, N>) -> SVector<f64, N>;

    fn jacobian(&self, t: f64, y: &SVector<f64, N>) -> SMatrix<f64, N, N>;

    /// Partial derivative of the field with respect to time.
    ///
    /// The default central difference is adequate for smooth forcing; override it
    /// when a closed form is available.
    fn time_derivative(&self, t: f64, y: &SVector<f64, N>) -> SVector<f64, N> {
        let h = 1e-6 * (1.0 + t.abs());
        (self.rhs(t + h, y) - self.rhs(t - h, y)) / (2.0 * h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rodas4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub method: Method,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            method: Method::Rodas4,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid integrator configuration: {0}")]
pub struct ConfigError(pub String);

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.abs_tol > 0.0 && self.abs_tol <= self.rel_tol && self.rel_tol < 1e-2) {
            return Err(ConfigError(format!(
                "need 0 < abs_tol <= rel_tol < 1e-2, got rel_tol={} abs_tol={}",
                self.rel_tol, self.abs_tol
            )));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ConfigError(format!("max_step must be positive, got {h}")));
            }
        }
        if self.max_steps == 0 {
            return Err(ConfigError("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

pub type EventFnBody<'a, const N: usize> = Box<dyn Fn(f64, &SVector<f64, N>) -> f64 + Send + Sync + 'a>;

/// Scalar function whose sign changes along the solution are reported as events.
pub struct EventFn<'a, const N: usize> {
    pub label: String,
    pub direction: Direction,
    pub func: EventFnBody<'a, N>,
}

impl<'a, const N: usize> EventFn<'a, N> {
    pub fn new(
        label: impl Into<String>,
        direction: Direction,
        func: impl Fn(f64, &SVector<f64, N>) -> f64 + Send + Sync + 'a,
    ) -> Self {
        Self {
            label: label.into(),
            direction,
            func: Box::new(func),
        }
    }

    /// Crossing of `y[component] = level`.
    pub fn level(
        label: impl Into<String>,
        component: usize,
        level: f64,
        direction: Direction,
    ) -> Self {
        Self::new(label, direction, move |_, y| y[component] - level)
    }
}

impl<const N: usize> std::fmt::Debug for EventFn<'_, N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventFn")
            .field("label", &self.label)
            .field("direction", &self.direction)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<const N: usize> {
    pub t: f64,
    pub label: String,
    /// Direction of the observed sign change (never `Either`).
    pub direction: Direction,
    pub state: SVector<f64, N>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<SVector<f64, N>>,
    /// Field value at each knot; with `states` it defines the Hermite interpolant.
    pub slopes: Vec<SVector<f64, N>>,
    pub events: Vec<Event<N>>,
    pub rejected_steps: usize,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("time {t} is outside the trajectory span [{start}, {end}]")]
pub struct OutOfRange {
    pub t: f64,
    pub start: f64,
    pub end: f64,
}

impl<const N: usize> Trajectory<N> {
    fn with_start(t: f64, y: SVector<f64, N>, f: SVector<f64, N>) -> Self {
        Self {
            times: vec![t],
            states: vec![y],
            slopes: vec![f],
            events: Vec::new(),
            rejected_steps: 0,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one knot")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> SVector<f64, N> {
        *self.states.last().expect("trajectory has at least one knot")
    }

    /// Dense-output evaluation; exact stored state at knot times.
    pub fn sample(&self, t: f64) -> Result<SVector<f64, N>, OutOfRange> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(OutOfRange { t, start, end });
        }
        let i = self.times.partition_point(|&k| k < t);
        if i < self.times.len() && self.times[i] == t {
            return Ok(self.states[i]);
        }
        // times[i-1] < t < times[i]
        Ok(hermite(
            self.times[i - 1],
            &self.states[i - 1],
            &self.slopes[i - 1],
            self.times[i],
            &self.states[i],
            &self.slopes[i],
            t,
        ))
    }

    pub fn sample_many(&self, ts: &[f64]) -> Result<Vec<SVector<f64, N>>, OutOfRange> {
        ts.iter().map(|&t| self.sample(t)).collect()
    }

    pub fn events_labeled<'s>(&'s self, label: &'s str) -> impl Iterator<Item = &'s Event<N>> + 's {
        self.events.iter().filter(move |e| e.label == label)
    }
}

fn hermite<const N: usize>(
    t0: f64,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    t1: f64,
    y1: &SVector<f64, N>,
    f1: &SVector<f64, N>,
    t: f64,
) -> SVector<f64, N> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + f0 * (h10 * h) + y1 * h01 + f1 * (h11 * h)
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum FailureKind {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid time span [{t0}, {t1}]")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("invalid configuration")]
    InvalidConfig,
}

#[derive(Debug, Error, Clone)]
#[error("{kind}")]
pub struct IntegrateError<const N: usize> {
    pub kind: FailureKind,
    /// Everything integrated before the failure.
    pub partial: Box<Trajectory<N>>,
}

// RODAS (order 4, embedded order 3) in the transformed-variable form.
const GAMMA: f64 = 0.25;
const C: [f64; 6] = [0.0, 0.386, 0.21, 0.63, 1.0, 1.0];
const D: [f64; 4] = [0.25, -0.1043, 0.1035, -0.0362];
const A21: f64 = 1.544;
const A31: f64 = 0.946_678_528_081_582_6;
const A32: f64 = 0.255_701_169_898_328_4;
const A41: f64 = 3.314_825_187_068_521;
const A42: f64 = 2.896_124_015_972_201;
const A43: f64 = 0.998_641_913_997_781_7;
const A51: f64 = 1.221_224_509_226_641;
const A52: f64 = 6.019_134_481_288_629;
const A53: f64 = 12.537_083_329_320_87;
const A54: f64 = -0.687_886_036_105_895;
const C21: f64 = -5.6688;
const C31: f64 = -2.430_093_356_833_875;
const C32: f64 = -0.206_359_915_709_191_5;
const C41: f64 = -0.107_352_905_815_137_5;
const C42: f64 = -9.594_562_251_023_355;
const C43: f64 = -20.470_286_148_096_16;
const C51: f64 = 7.496_443_313_967_647;
const C52: f64 = -10.246_804_314_643_52;
const C53: f64 = -33.999_903_528_199_05;
const C54: f64 = 11.708_908_932_061_6;
const C61: f64 = 8.083_246_795_921_522;
const C62: f64 = -7.981_132_988_064_893;
const C63: f64 = -31.521_594_328_743_71;
const C64: f64 = 16.319_305_431_231_36;
const C65: f64 = -6.058_818_238_834_054;

/// LU factorization with partial pivoting of a small dense matrix.
struct DenseLu<const N: usize> {
    m: SMatrix<f64, N, N>,
    piv: [usize; N],
}

impl<const N: usize> DenseLu<N> {
    fn factor(mut m: SMatrix<f64, N, N>) -> Option<Self> {
        let mut piv = [0usize; N];
        for k in 0..N {
            let p = (k..N)
                .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
                .unwrap_or(k);
            piv[k] = p;
            if m[(p, k)] == 0.0 || !m[(p, k)].is_finite() {
                return None;
            }
            m.swap_rows(k, p);
            for i in k + 1..N {
                let l = m[(i, k)] / m[(k, k)];
                m[(i, k)] = l;
                for j in k + 1..N {
                    m[(i, j)] -= l * m[(k, j)];
                }
            }
        }
        Some(Self { m, piv })
    }

    fn solve(&self, mut b: SVector<f64, N>) -> SVector<f64, N> {
        for k in 0..N {
            b.swap_rows(k, self.piv[k]);
        }
        for k in 0..N {
            for i in k + 1..N {
                b[i] -= self.m[(i, k)] * b[k];
            }
        }
        for k in (0..N).rev() {
            for j in k + 1..N {
                b[k] -= self.m[(k, j)] * b[j];
            }
            b[k] /= self.m[(k, k)];
        }
        b
    }
}

struct StepResult<const N: usize> {
    y_new: SVector<f64, N>,
    err: SVector<f64, N>,
}

fn rodas_step<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    t: f64,
    y: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    h: f64,
) -> Option<StepResult<N>> {
    let jac = sys.jacobian(t, y);
    let ft = sys.time_derivative(t, y);
    let w = SMatrix::<f64, N, N>::identity() / (h * GAMMA) - jac;
    let lu = DenseLu::factor(w)?;
    let solve = |rhs: SVector<f64, N>| Some(lu.solve(rhs));

    let k1 = solve(f0 + ft * (h * D[0]))?;
    let f = sys.rhs(t + C[1] * h, &(y + k1 * A21));
    let k2 = solve(f + ft * (h * D[1]) + k1 * (C21 / h))?;
    let f = sys.rhs(t + C[2] * h, &(y + k1 * A31 + k2 * A32));
    let k3 = solve(f + ft * (h * D[2]) + k1 * (C31 / h) + k2 * (C32 / h))?;
    let f = sys.rhs(t + C[3] * h, &(y + k1 * A41 + k2 * A42 + k3 * A43));
    let k4 = solve(f + ft * (h * D[3]) + k1 * (C41 / h) + k2 * (C42 / h) + k3 * (C43 / h))?;
    let y5 = y + k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54;
    let f = sys.rhs(t + h, &y5);
    let k5 = solve(f + (k1 * C51 + k2 * C52 + k3 * C53 + k4 * C54) / h)?;
    let y_emb = y5 + k5;
    let f = sys.rhs(t + h, &y_emb);
    let k6 = solve(f + (k1 * C61 + k2 * C62 + k3 * C63 + k4 * C64 + k5 * C65) / h)?;
    Some(StepResult {
        y_new: y_emb + k6,
        err: k6,
    })
}

fn is_finite<const N: usize>(v: &SVector<f64, N>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates `sys` from `y0` over `t_span`, recording sign changes of `events`.
///
/// Identical inputs give bit-identical trajectories.
pub fn integrate<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    y0: SVector<f64, N>,
    t_span: (f64, f64),
    config: &IntegratorConfig,
    events: &[EventFn<'_, N>],
) -> Result<Trajectory<N>, IntegrateError<N>> {
    let (t0, t1) = t_span;
    let f_start = sys.rhs(t0, &y0);
    let mut traj = Trajectory::with_start(t0, y0, f_start);
    let fail = |kind, traj: Trajectory<N>| IntegrateError {
        kind,
        partial: Box::new(traj),
    };
    if config.validate().is_err() {
        return Err(fail(FailureKind::InvalidConfig, traj));
    }
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(fail(FailureKind::InvalidSpan { t0, t1 }, traj));
    }
    if !is_finite(&y0) || !is_finite(&f_start) {
        return Err(fail(FailureKind::NonFiniteState { t: t0 }, traj));
    }

    let span = t1 - t0;
    let max_step = config.max_step.unwrap_or(span).min(span);
    let mut h = (1e-4 * span).min(max_step);
    let mut t = t0;
    let mut y = y0;
    let mut f = f_start;
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.func)(t, &y)).collect();
    let mut steps = 0usize;
    let mut last_failure_nonfinite = false;
    let mut just_rejected = false;

    while t < t1 {
        if steps >= config.max_steps {
            let kind = FailureKind::MaxStepsExceeded {
                t,
                max_steps: config.max_steps,
            };
            return Err(fail(kind, traj));
        }
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(span);
        if h < h_min {
            let kind = if last_failure_nonfinite {
                FailureKind::NonFiniteState { t }
            } else {
                FailureKind::StepSizeUnderflow { t, h }
            };
            return Err(fail(kind, traj));
        }
        steps += 1;

        let attempt = rodas_step(sys, t, &y, &f, h).filter(|r| is_finite(&r.y_new));
        let Some(step) = attempt else {
            last_failure_nonfinite = true;
            traj.rejected_steps += 1;
            just_rejected = true;
            h *= 0.25;
            continue;
        };
        let err = error_norm(&y, &step.y_new, &step.err, config);
        if !err.is_finite() || err > 1.0 {
            last_failure_nonfinite = !err.is_finite();
            traj.rejected_steps += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.25)).max(0.2)
            } else {
                0.25
            };
            h *= fac;
            just_rejected = true;
            continue;
        }

        let t_new = if last { t1 } else { t + h };
        let f_new = sys.rhs(t_new, &step.y_new);
        if !is_finite(&f_new) {
            last_failure_nonfinite = true;
            traj.rejected_steps += 1;
            h *= 0.25;
            just_rejected = true;
            continue;
        }
        last_failure_nonfinite = false;

        locate_events(
            events,
            &mut g_prev,
            (t, &y, &f),
            (t_new, &step.y_new, &f_new),
            &mut traj.events,
        );

        t = t_new;
        y = step.y_new;
        f = f_new;
        traj.times.push(t);
        traj.states.push(y);
        traj.slopes.push(f);

        let mut fac = (0.9 * err.max(1e-10).powf(-0.25)).clamp(0.2, 5.0);
        if just_rejected {
            fac = fac.min(1.0);
        }
        just_rejected = false;
        h = (h * fac).min(max_step);
    }
    Ok(traj)
}

fn error_norm<const N: usize>(
    y: &SVector<f64, N>,
    y_new: &SVector<f64, N>,
    err: &SVector<f64, N>,
    config: &IntegratorConfig,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let scale = config.abs_tol + config.rel_tol * y[i].abs().max(y_new[i].abs());
        let e = err[i] / scale;
        sum += e * e;
    }
    (sum / N as f64).sqrt()
}

fn locate_events<const N: usize>(
    events: &[EventFn<'_, N>],
    g_prev: &mut [f64],
    left: (f64, &SVector<f64, N>, &SVector<f64, N>),
    right: (f64, &SVector<f64, N>, &SVector<f64, N>),
    out: &mut Vec<Event<N>>,
) {
    let (ta, ya, fa) = left;
    let (tb, yb, fb) = right;
    let interp = |t: f64| hermite(ta, ya, fa, tb, yb, fb, t);
    let first_new = out.len();
    for (k, ev) in events.iter().enumerate() {
        let g_a = g_prev[k];
        let g_b = (ev.func)(tb, yb);
        g_prev[k] = g_b;
        let rising = g_a < 0.0 && g_b >= 0.0;
        let falling = g_a > 0.0 && g_b <= 0.0;
        let dir = match (rising, falling) {
            (true, _) => Direction::Rising,
            (_, true) => Direction::Falling,
            _ => continue,
        };
        if ev.direction != Direction::Either && ev.direction != dir {
            continue;
        }
        // bracket [lo, hi] with sign(g(lo)) == sign(g_a)
        let (mut lo, mut hi) = (ta, tb);
        let mut g_lo = g_a;
        while hi - lo > EVENT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g_mid = (ev.func)(mid, &interp(mid));
            if (g_mid < 0.0) == (g_lo < 0.0) && g_mid != 0.0 {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
            }
        }
        let t_root = if hi == tb { hi } else { hi.min(tb) };
        let state = if t_root == tb { *yb } else { interp(t_root) };
        out.push(Event {
            t: t_root,
            label: ev.label.clone(),
            direction: dir,
            state,
        });
    }
    out[first_new..].sort_by(|a, b| a.t.total_cmp(&b.t));
}
