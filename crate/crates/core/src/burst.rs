//! Simulation protocol and the measurements taken on bursting trajectories.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{find_equilibrium, folded_equilibria, FoldedEquilibrium, GeometryError, Side};
use crate::integrator::{
    integrate, Direction, EventFn, FailureKind, IntegratorConfig, OdeSystem, Trajectory,
};
use crate::manifold::{solve_expansion, theta_at_lower_bound, Branch, ManifoldError};
use crate::model::{
    derived_constants, jacobian_autonomous, jacobian_forced, rhs_autonomous, rhs_forced,
    time_derivative_forced, Forcing, ModelParams, ParamError, StateUVTheta, StateXY,
};

pub const SPIKE_UP: &str = "x_up";
pub const SPIKE_DOWN: &str = "x_down";
pub const LOWER_RETURN: &str = "x_lower";
pub const LOCAL_MIN: &str = "x_min";
pub const LOCAL_MAX: &str = "x_max";

/// Upper fold line crossed by every spike.
pub const SPIKE_LEVEL: f64 = 1.0;
pub const LOWER_LEVEL: f64 = -2.0;
/// Offset from the fold lines delimiting the repelling branch.
pub const CANARD_MARGIN: f64 = 0.05;
pub const DEFAULT_F_BURST: f64 = 27.0;
/// Uniform midpoint samples per period for the L2 norm.
pub const L2_SAMPLES_PER_PERIOD: usize = 20_000;
const DWELL_SAMPLE_DT: f64 = 0.01;
const STEPS_PER_PERIOD_CAP: f64 = 500.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BurstError {
    #[error("integration failed: {0}")]
    Integration(FailureKind),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error("no folded {0:?} on the left fold")]
    NoEquilibrium(CanardSite),
    #[error("trajectory never passes the {0:?} phase inside the window")]
    NoPassage(CanardSite),
    #[error("trajectory ends before the canard outcome is decided")]
    Unclassified,
    #[error("no spike after the node passage in the measurement window")]
    NoFirstSpike,
}

/// The forced planar system in `(x, y)` with explicit time.
#[derive(Debug, Clone, Copy)]
pub struct ForcedFhn {
    pub params: ModelParams,
    pub forcing: Forcing,
}

impl ForcedFhn {
    fn state(t: f64, y: &Vector2<f64>) -> StateXY {
        StateXY { x: y[0], y: y[1], t }
    }
}

impl OdeSystem<2> for ForcedFhn {
    fn rhs(&self, t: f64, y: &Vector2<f64>) -> Vector2<f64> {
        rhs_forced(&Self::state(t, y), &self.params, &self.forcing)
    }

    fn jacobian(&self, t: f64, y: &Vector2<f64>) -> Matrix2<f64> {
        jacobian_forced(&Self::state(t, y), &self.params)
    }

    fn time_derivative(&self, t: f64, y: &Vector2<f64>) -> Vector2<f64> {
        time_derivative_forced(&Self::state(t, y), &self.forcing)
    }
}

/// The autonomous system in shifted coordinates `(u, v, theta)`.
#[derive(Debug, Clone, Copy)]
pub struct AutonomousFhn {
    pub params: ModelParams,
    pub forcing: Forcing,
}

impl AutonomousFhn {
    fn state(y: &Vector3<f64>) -> StateUVTheta {
        StateUVTheta { u: y[0], v: y[1], theta: y[2] }
    }
}

impl OdeSystem<3> for AutonomousFhn {
    fn rhs(&self, _t: f64, y: &Vector3<f64>) -> Vector3<f64> {
        rhs_autonomous(&Self::state(y), &self.params, &self.forcing)
    }

    fn jacobian(&self, _t: f64, y: &Vector3<f64>) -> Matrix3<f64> {
        jacobian_autonomous(&Self::state(y), &self.params, &self.forcing)
    }

    fn time_derivative(&self, _t: f64, _y: &Vector3<f64>) -> Vector3<f64> {
        Vector3::zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub burn_in_periods: u32,
    pub measure_periods: u32,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            burn_in_periods: 2,
            measure_periods: 2,
        }
    }
}

fn capped(config: &IntegratorConfig, period: f64) -> IntegratorConfig {
    IntegratorConfig {
        max_step: Some(config.max_step.unwrap_or(f64::INFINITY).min(period / STEPS_PER_PERIOD_CAP)),
        ..*config
    }
}

/// Event functions recorded during the measurement window.
pub fn measurement_events(system: ForcedFhn) -> Vec<EventFn<'static, 2>> {
    vec![
        EventFn::level(SPIKE_UP, 0, SPIKE_LEVEL, Direction::Rising),
        EventFn::level(SPIKE_DOWN, 0, SPIKE_LEVEL, Direction::Falling),
        EventFn::level(LOWER_RETURN, 0, LOWER_LEVEL, Direction::Rising),
        EventFn::new(LOCAL_MIN, Direction::Rising, move |t, y| system.rhs(t, y)[0]),
        EventFn::new(LOCAL_MAX, Direction::Falling, move |t, y| system.rhs(t, y)[0]),
    ]
}

/// Starts at the unforced rest state, discards `burn_in_periods` and returns the
/// following `measure_periods` with events.
pub fn simulate(
    params: &ModelParams,
    forcing: &Forcing,
    config: &IntegratorConfig,
    protocol: Protocol,
) -> Result<Trajectory<2>, BurstError> {
    params.validate()?;
    forcing.validate()?;
    let system = ForcedFhn {
        params: *params,
        forcing: *forcing,
    };
    let period = forcing.period();
    let cfg = capped(config, period);
    let rest = params.unforced_equilibrium();
    let mut y0 = Vector2::new(rest.x, rest.y);
    let t_burn = protocol.burn_in_periods as f64 * period;
    if protocol.burn_in_periods > 0 {
        let burn = integrate(&system, y0, (0.0, t_burn), &cfg, &[])
            .map_err(|e| BurstError::Integration(e.kind))?;
        y0 = burn.final_state();
    }
    let t_end = t_burn + protocol.measure_periods as f64 * period;
    let events = measurement_events(system);
    integrate(&system, y0, (t_burn, t_end), &cfg, &events).map_err(|e| BurstError::Integration(e.kind))
}

pub fn simulate_standard(
    params: &ModelParams,
    forcing: &Forcing,
    config: &IntegratorConfig,
) -> Result<Trajectory<2>, BurstError> {
    simulate(params, forcing, config, Protocol::default())
}

/// Upward crossings of `x = 1` per period, rounded down.
pub fn count_spikes(trajectory: &Trajectory<2>, n_periods: u32) -> u32 {
    if n_periods == 0 {
        return 0;
    }
    trajectory.events_labeled(SPIKE_UP).count() as u32 / n_periods
}

/// Root-mean-square of `(x, y)` over the trajectory span.
pub fn l2_norm(trajectory: &Trajectory<2>, period: f64) -> f64 {
    l2_norm_with(trajectory, period, L2_SAMPLES_PER_PERIOD)
}

/// [`l2_norm`] with an explicit number of midpoint samples per period.
pub fn l2_norm_with(trajectory: &Trajectory<2>, period: f64, samples_per_period: usize) -> f64 {
    let t0 = trajectory.t_start();
    let span = trajectory.t_end() - t0;
    let periods = (span / period).round().max(1.0) as usize;
    let n = samples_per_period * periods;
    let dt = span / n as f64;
    let sum: f64 = (0..n)
        .map(|i| {
            let t = t0 + (i as f64 + 0.5) * dt;
            let s = trajectory.sample(t).expect("midpoints lie inside the span");
            s[0] * s[0] + s[1] * s[1]
        })
        .sum();
    (sum / n as f64).sqrt()
}

/// Local minima with `x < -1`: time and value.
fn lower_minima(trajectory: &Trajectory<2>) -> Vec<(f64, f64)> {
    trajectory
        .events_labeled(LOCAL_MIN)
        .filter(|e| e.state[0] < -1.0)
        .map(|e| (e.t, e.state[0]))
        .collect()
}

/// Unwrapped phases of the return to the lower branch after each spike.
///
/// A return is the first local minimum of `x` below `-1` following an upward
/// crossing of `x = 1`.
pub fn theta_sequence(trajectory: &Trajectory<2>, omega: f64) -> Vec<f64> {
    let minima = lower_minima(trajectory);
    let mut out: Vec<f64> = Vec::new();
    for up in trajectory.events_labeled(SPIKE_UP) {
        if let Some(&(t, _)) = minima.iter().find(|(t, _)| *t > up.t) {
            let theta = omega * t;
            if out.last().is_none_or(|&last| theta > last) {
                out.push(theta);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanardSite {
    Node,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanardOutcome {
    JumpBack,
    JumpAcross,
    FoldJump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanardClass {
    pub site: CanardSite,
    pub outcome: CanardOutcome,
    /// Phase (unwrapped) of the passage that was classified.
    pub passage_theta: f64,
    /// Time spent with `x` on the repelling branch before the decision.
    pub dwell: f64,
}

fn site_equilibrium(
    equilibria: &[FoldedEquilibrium],
    site: CanardSite,
) -> Result<&FoldedEquilibrium, BurstError> {
    find_equilibrium(equilibria, Side::Left, site == CanardSite::Saddle)
        .ok_or(BurstError::NoEquilibrium(site))
}

/// Times in `[t0, t1]` at which the phase `omega t` equals `theta` mod 2 pi.
fn phase_passages(theta: f64, omega: f64, t0: f64, t1: f64) -> impl Iterator<Item = f64> {
    let k0 = ((omega * t0 - theta) / TAU).ceil();
    (0..)
        .map(move |k| (theta + TAU * (k0 + k as f64)) / omega)
        .take_while(move |&t| t <= t1)
}

fn repelling_dwell(trajectory: &Trajectory<2>, from: f64, to: f64) -> f64 {
    let lo = -1.0 + CANARD_MARGIN;
    let hi = 1.0 - CANARD_MARGIN;
    let n = ((to - from) / DWELL_SAMPLE_DT).ceil().max(1.0) as usize;
    let dt = (to - from) / n as f64;
    (0..n)
        .filter(|&i| {
            let x = trajectory
                .sample(from + (i as f64 + 0.5) * dt)
                .map(|s| s[0])
                .unwrap_or(f64::NAN);
            x > lo && x < hi
        })
        .count() as f64
        * dt
}

/// Classifies what the trajectory does after passing the phase of a left folded equilibrium.
///
/// From the last lower-branch minimum preceding the passage, the first excursion
/// above `-1 + margin` decides: a crossing of `x = 1` is a jump across when the
/// repelling-branch dwell exceeds `1/eps` and a fold jump otherwise; a maximum
/// followed by a drop of at least the margin is a jump back.
pub fn classify_canard(
    trajectory: &Trajectory<2>,
    params: &ModelParams,
    forcing: &Forcing,
    equilibria: &[FoldedEquilibrium],
    site: CanardSite,
) -> Result<CanardClass, BurstError> {
    let eq = site_equilibrium(equilibria, site)?;
    let omega = forcing.omega;
    let period = forcing.period();
    let minima = lower_minima(trajectory);
    let (t0, t1) = (trajectory.t_start(), trajectory.t_end());

    let (passage, anchor) = phase_passages(eq.theta, omega, t0, t1)
        .find_map(|tc| {
            minima
                .iter()
                .rev()
                .find(|(t, _)| *t <= tc && *t >= tc - period)
                .map(|&(t, _)| (tc, t))
        })
        .ok_or(BurstError::NoPassage(site))?;

    let threshold = -1.0 + CANARD_MARGIN;
    let events: Vec<_> = trajectory.events.iter().filter(|e| e.t > anchor).collect();
    for (i, e) in events.iter().enumerate() {
        if e.label == SPIKE_UP {
            let dwell = repelling_dwell(trajectory, anchor, e.t);
            let outcome = if dwell > 1.0 / params.eps {
                CanardOutcome::JumpAcross
            } else {
                CanardOutcome::FoldJump
            };
            return Ok(CanardClass {
                site,
                outcome,
                passage_theta: omega * passage,
                dwell,
            });
        }
        if e.label == LOCAL_MAX && e.state[0] > threshold {
            let drop = events[i + 1..]
                .iter()
                .find(|n| n.label == LOCAL_MIN)
                .map(|n| e.state[0] - n.state[0]);
            if drop.is_some_and(|d| d >= CANARD_MARGIN) {
                return Ok(CanardClass {
                    site,
                    outcome: CanardOutcome::JumpBack,
                    passage_theta: omega * passage,
                    dwell: repelling_dwell(trajectory, anchor, e.t),
                });
            }
        }
    }
    Err(BurstError::Unclassified)
}

/// `1 + ceil(max(dtheta, 0) / (1000 omega) * f_burst)`.
pub fn estimate_from_phase_gap(delta_theta: f64, omega: f64, f_burst: f64) -> u32 {
    1 + (delta_theta.max(0.0) / (1000.0 * omega) * f_burst).ceil() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeEstimate {
    pub estimate: u32,
    pub delta_theta: f64,
    /// Unwrapped phase of the first post-spike return.
    pub theta_first_return: f64,
    /// Unwrapped phase where the saddle's stable manifold meets `x = -2`.
    pub theta_saddle_lower: f64,
    /// Unwrapped phase of the node passage anchoring the burst.
    pub theta_node_passage: f64,
}

/// Phase-distance estimate of the spike count on an existing trajectory.
///
/// The burst is anchored at the first passage of the left node phase. The
/// first spike after it defines the first return; the stable manifold of the
/// saddle, reached half a fold cycle later, defines where the burst ends.
pub fn estimate_on_trajectory(
    trajectory: &Trajectory<2>,
    params: &ModelParams,
    forcing: &Forcing,
    f_burst: f64,
) -> Result<SpikeEstimate, BurstError> {
    let equilibria = folded_equilibria(params, forcing)?;
    let node = site_equilibrium(&equilibria, CanardSite::Node)?;
    let saddle = site_equilibrium(&equilibria, CanardSite::Saddle)?;
    let expansion = solve_expansion(Branch::Stable, params, forcing)?;
    let crossing = theta_at_lower_bound(&expansion)?;
    let omega = forcing.omega;
    let period = forcing.period();
    let (t0, t1) = (trajectory.t_start(), trajectory.t_end());

    let t_node = phase_passages(node.theta, omega, t0, t1)
        .next()
        .ok_or(BurstError::NoPassage(CanardSite::Node))?;
    let first_up = trajectory
        .events_labeled(SPIKE_UP)
        .find(|e| e.t >= t_node && e.t < t_node + period)
        .ok_or(BurstError::NoFirstSpike)?;
    let (t_return, _) = lower_minima(trajectory)
        .into_iter()
        .find(|(t, _)| *t > first_up.t)
        .ok_or(BurstError::NoFirstSpike)?;

    let theta_node = omega * t_node;
    let gap = (saddle.theta - node.theta).rem_euclid(TAU);
    let theta_saddle_lower = theta_node + gap + crossing.offset;
    let theta_first_return = omega * t_return;
    let delta_theta = theta_saddle_lower - theta_first_return;
    Ok(SpikeEstimate {
        estimate: estimate_from_phase_gap(delta_theta, omega, f_burst),
        delta_theta,
        theta_first_return,
        theta_saddle_lower,
        theta_node_passage: theta_node,
    })
}

/// Simulates with the standard protocol and estimates the spike count.
pub fn estimate_spike_count(
    params: &ModelParams,
    forcing: &Forcing,
    f_burst: f64,
    config: &IntegratorConfig,
) -> Result<SpikeEstimate, BurstError> {
    let trajectory = simulate_standard(params, forcing, config)?;
    estimate_on_trajectory(&trajectory, params, forcing, f_burst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstMetrics {
    pub omega: f64,
    #[serde(rename = "E")]
    pub amplitude: f64,
    pub spike_count: u32,
    pub l2: f64,
    pub theta_seq: Vec<f64>,
    pub theta_seq_wrapped: Vec<f64>,
    pub est_count: Option<u32>,
}

impl BurstMetrics {
    pub const CSV_HEADER: &'static str = "omega,E,spike_count,l2,n_theta,est_count";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{},{:.16e},{},{}",
            self.omega,
            self.amplitude,
            self.spike_count,
            self.l2,
            self.theta_seq.len(),
            self.est_count.map(|v| v.to_string()).unwrap_or_default()
        )
    }
}

/// Estimate used for sweeps: zero without a first spike, `None` when undefined.
pub fn sweep_estimate(
    trajectory: &Trajectory<2>,
    params: &ModelParams,
    forcing: &Forcing,
    f_burst: f64,
) -> Option<u32> {
    match estimate_on_trajectory(trajectory, params, forcing, f_burst) {
        Ok(e) => Some(e.estimate),
        Err(BurstError::NoFirstSpike) => Some(0),
        Err(_) => None,
    }
}

/// Runs the standard protocol and every measurement.
pub fn analyze(
    params: &ModelParams,
    forcing: &Forcing,
    config: &IntegratorConfig,
    f_burst: f64,
) -> Result<(Trajectory<2>, BurstMetrics), BurstError> {
    analyze_with(params, forcing, config, Protocol::default(), f_burst)
}

/// [`analyze`] with an explicit burn-in and measurement window.
pub fn analyze_with(
    params: &ModelParams,
    forcing: &Forcing,
    config: &IntegratorConfig,
    protocol: Protocol,
    f_burst: f64,
) -> Result<(Trajectory<2>, BurstMetrics), BurstError> {
    let trajectory = simulate(params, forcing, config, protocol)?;
    let theta_seq = theta_sequence(&trajectory, forcing.omega);
    let metrics = BurstMetrics {
        omega: forcing.omega,
        amplitude: forcing.amplitude,
        spike_count: count_spikes(&trajectory, protocol.measure_periods),
        l2: l2_norm(&trajectory, forcing.period()),
        theta_seq_wrapped: theta_seq.iter().map(|&t| crate::model::wrap_phase(t)).collect(),
        theta_seq,
        est_count: sweep_estimate(&trajectory, params, forcing, f_burst),
    };
    Ok((trajectory, metrics))
}

/// Phase of the left folded saddle and node, for callers that only need the angles.
pub fn left_fold_phases(params: &ModelParams, forcing: &Forcing) -> Option<(f64, f64)> {
    let dc = derived_constants(params, forcing);
    if dc.r_delta <= dc.mu {
        return None;
    }
    let alpha = (dc.mu / dc.r_delta).acos();
    Some((
        crate::model::wrap_phase(dc.phi_delta + alpha),
        crate::model::wrap_phase(dc.phi_delta - alpha),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Event;
    use approx::assert_abs_diff_eq;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    fn p() -> ModelParams {
        ModelParams::default()
    }

    fn synthetic(f: impl Fn(f64) -> (f64, f64, f64, f64), t1: f64, n: usize) -> Trajectory<2> {
        let times: Vec<f64> = (0..=n).map(|i| t1 * i as f64 / n as f64).collect();
        let vals: Vec<_> = times.iter().map(|&t| f(t)).collect();
        Trajectory {
            states: vals.iter().map(|v| Vector2::new(v.0, v.1)).collect(),
            slopes: vals.iter().map(|v| Vector2::new(v.2, v.3)).collect(),
            times,
            events: Vec::new(),
            rejected_steps: 0,
        }
    }

    fn event(t: f64, label: &str, x: f64) -> Event<2> {
        Event {
            t,
            label: label.into(),
            direction: Direction::Rising,
            state: Vector2::new(x, 0.0),
        }
    }

    #[test]
    fn l2_of_constant_state_is_exact() {
        let tr = synthetic(|_| (3.0, 4.0, 0.0, 0.0), 10.0, 7);
        assert_eq!(l2_norm(&tr, 10.0), 5.0);
    }

    #[test]
    fn l2_of_unit_circle() {
        let tr = synthetic(|t| (t.sin(), t.cos(), t.cos(), -t.sin()), TAU, 4000);
        assert_abs_diff_eq!(l2_norm(&tr, TAU), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn spike_count_floors_per_period() {
        let mut tr = synthetic(|_| (-1.2, -1.5, 0.0, 0.0), 100.0, 10);
        assert_eq!(count_spikes(&tr, 2), 0);
        tr.events = (0..5).map(|k| event(10.0 * k as f64 + 1.0, SPIKE_UP, 1.0)).collect();
        assert_eq!(count_spikes(&tr, 2), 2);
        assert_eq!(count_spikes(&tr, 1), 5);
        assert_eq!(count_spikes(&tr, 0), 0);
    }

    #[test]
    fn theta_sequence_uses_post_spike_minima() {
        let mut tr = synthetic(|_| (-1.2, -1.5, 0.0, 0.0), 100.0, 10);
        tr.events = vec![
            event(5.0, LOCAL_MIN, -1.5),
            event(10.0, SPIKE_UP, 1.0),
            event(12.0, LOCAL_MIN, -0.5),
            event(14.0, LOCAL_MIN, -1.9),
            event(20.0, SPIKE_UP, 1.0),
            event(24.0, LOCAL_MIN, -2.0),
        ];
        assert_eq!(theta_sequence(&tr, 0.5), vec![7.0, 12.0]);
        tr.events.clear();
        assert!(theta_sequence(&tr, 0.5).is_empty());
    }

    #[test]
    fn estimate_formula() {
        assert_eq!(estimate_from_phase_gap(1.0, 0.02, 27.0), 3);
        assert_eq!(estimate_from_phase_gap(-0.4, 0.02, 27.0), 1);
        assert_eq!(estimate_from_phase_gap(0.0, 0.02, 27.0), 1);
    }

    #[test]
    fn unforced_run_has_no_spikes() {
        let f = Forcing::new(0.0, 0.02).unwrap();
        let tr = simulate_standard(&p(), &f, &cfg()).unwrap();
        assert_eq!(count_spikes(&tr, 2), 0);
        let rest = p().unforced_equilibrium();
        assert!((tr.final_state()[0] - rest.x).abs() < 1e-8);
        assert!(theta_sequence(&tr, f.omega).is_empty());
    }

    #[test]
    fn reference_burst_has_three_spikes() {
        let f = Forcing::new(0.55, 0.0149354).unwrap();
        let (tr, m) = analyze(&p(), &f, &cfg(), DEFAULT_F_BURST).unwrap();
        assert_eq!(m.spike_count, 3);
        assert_eq!(m.theta_seq.len(), 6);
        assert!(m.theta_seq.windows(2).all(|w| w[1] > w[0]));
        assert!(m.l2 > 0.0);
        assert_abs_diff_eq!(tr.t_start(), 2.0 * f.period(), epsilon = 1e-9);
        assert_abs_diff_eq!(tr.t_end(), 4.0 * f.period(), epsilon = 1e-9);
        let longer = simulate(
            &p(),
            &f,
            &cfg(),
            Protocol {
                burn_in_periods: 4,
                measure_periods: 2,
            },
        )
        .unwrap();
        assert_eq!(count_spikes(&longer, 2), 3);
    }

    #[test]
    fn autonomous_field_matches_forced_field() {
        let params = p();
        let f = Forcing::new(0.55, 0.0149354).unwrap();
        let forced = ForcedFhn { params, forcing: f };
        let auto = AutonomousFhn { params, forcing: f };
        let s = StateXY { x: 0.3, y: -0.7, t: 123.0 };
        let w = crate::model::to_shifted(&s, &params, &f);
        let dxy = forced.rhs(s.t, &Vector2::new(s.x, s.y));
        let duv = auto.rhs(0.0, &Vector3::new(w.u, w.v, w.theta));
        assert_abs_diff_eq!(dxy[0], duv[0], epsilon = 1e-12);
        assert_abs_diff_eq!(duv[2], f.omega, epsilon = 0.0);
    }

    #[test]
    fn left_phases_match_equilibria() {
        let f = Forcing::new(0.482, 0.02).unwrap();
        let (s, n) = left_fold_phases(&p(), &f).unwrap();
        let eq = folded_equilibria(&p(), &f).unwrap();
        assert_abs_diff_eq!(s, eq[0].theta, epsilon = 1e-15);
        assert_abs_diff_eq!(n, eq[1].theta, epsilon = 1e-15);
        assert!(left_fold_phases(&p(), &Forcing::new(0.1, 0.02).unwrap()).is_none());
    }

    #[test]
    fn passages_cover_window() {
        let v: Vec<f64> = phase_passages(1.0, 1.0, 0.0, 20.0).collect();
        assert_eq!(v.len(), 4);
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 1.0 + 2.0 * TAU, epsilon = 1e-12);
    }

    #[test]
    fn canard_needs_the_site() {
        let f = Forcing::new(0.482, 0.02).unwrap();
        let tr = synthetic(|_| (-1.2, -1.5, 0.0, 0.0), 100.0, 10);
        assert_eq!(
            classify_canard(&tr, &p(), &f, &[], CanardSite::Node),
            Err(BurstError::NoEquilibrium(CanardSite::Node))
        );
        let eq = folded_equilibria(&p(), &f).unwrap();
        assert_eq!(
            classify_canard(&tr, &p(), &f, &eq, CanardSite::Node),
            Err(BurstError::NoPassage(CanardSite::Node))
        );
    }
}
