//! Parameters, coordinate changes and every vector field used by the toolkit.
//!
//! The forced system lives in `(x, y, t)`:
//!
//! ```text
//! dx/dt = x - x^3/3 - y - a + E sin(omega t)
//! dy/dt = eps (x - b y)
//! ```
//!
//! Shifting the left knee of the cubic nullcline to the origin and appending the
//! forcing phase `theta = omega t` gives an autonomous system in `(u, v, theta)`.
//! All functions here are pure and allocation free.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Left knee of the cubic `Y = x - x^3/3`.
pub const LEFT_KNEE: (f64, f64) = (-1.0, -2.0 / 3.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("model parameter {name} = {value} is outside its valid range {range}")]
    Model {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("forcing parameter {name} = {value} is outside its valid range {range}")]
    Forcing {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Intrinsic FitzHugh-Nagumo constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            a: 0.875,
            b: 0.8,
            eps: 0.08,
        }
    }
}

impl ModelParams {
    pub fn new(a: f64, b: f64, eps: f64) -> Result<Self, ParamError> {
        let p = Self { a, b, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(ParamError::Model {
                name: "a",
                value: self.a,
                range: "(0, inf)",
            });
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(ParamError::Model {
                name: "b",
                value: self.b,
                range: "(0, 1)",
            });
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(ParamError::Model {
                name: "eps",
                value: self.eps,
                range: "(0, 1)",
            });
        }
        Ok(())
    }

    /// `mu = b (a + 2/3) - 1`, the value of `G` at the left fold.
    pub fn mu(&self) -> f64 {
        self.b * (self.a + 2.0 / 3.0) - 1.0
    }

    /// Equilibrium of the unforced system (`E = 0`).
    ///
    /// Solves `x - x^3/3 - x/b - a = 0` by Newton's method; the cubic is strictly
    /// decreasing for `0 < b < 1`, so the root is unique.
    pub fn unforced_equilibrium(&self) -> StateXY {
        let f = |x: f64| x - x.powi(3) / 3.0 - x / self.b - self.a;
        let df = |x: f64| 1.0 - x * x - 1.0 / self.b;
        let mut x = -1.0;
        for _ in 0..100 {
            let step = f(x) / df(x);
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        StateXY {
            x,
            y: x / self.b,
            t: 0.0,
        }
    }
}

/// Periodic input `E sin(omega t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    #[serde(rename = "E")]
    pub amplitude: f64,
    pub omega: f64,
}

impl Forcing {
    pub fn new(amplitude: f64, omega: f64) -> Result<Self, ParamError> {
        let f = Self { amplitude, omega };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(ParamError::Forcing {
                name: "E",
                value: self.amplitude,
                range: "[0, inf)",
            });
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(ParamError::Forcing {
                name: "omega",
                value: self.omega,
                range: "(0, inf)",
            });
        }
        Ok(())
    }

    /// Frequency measured in units of the recovery rate, `delta = omega / eps`.
    pub fn delta(&self, params: &ModelParams) -> f64 {
        self.omega / params.eps
    }

    /// Input period `T = 2 pi / omega`.
    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// Physical frequency in Hz when `t` is read as milliseconds.
    pub fn frequency_hz(&self) -> f64 {
        self.omega * 1000.0 / TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub mu: f64,
    pub r_delta: f64,
    pub phi_delta: f64,
}

pub fn derived_constants(params: &ModelParams, forcing: &Forcing) -> DerivedConstants {
    let delta = forcing.delta(params);
    DerivedConstants {
        mu: params.mu(),
        r_delta: forcing.amplitude * params.b.hypot(delta),
        phi_delta: phase_offset(params.b, delta),
    }
}

/// `phi_delta` with `sin = b/sqrt(b^2+delta^2)` and `cos = delta/sqrt(b^2+delta^2)`.
pub fn phase_offset(b: f64, delta: f64) -> f64 {
    b.atan2(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateXY {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateUVTheta {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
}

/// Reduces an angle into `[0, 2 pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `F(u) = u^2 - u^3/3`.
pub fn cubic_f(u: f64) -> f64 {
    u * u * (1.0 - u / 3.0)
}

/// `F'(u) = 2u - u^2`.
pub fn cubic_f_prime(u: f64) -> f64 {
    u * (2.0 - u)
}

/// `G(u) = mu + u - b F(u)`.
pub fn cubic_g(u: f64, params: &ModelParams) -> f64 {
    params.mu() + u - params.b * cubic_f(u)
}

/// `G'(u) = 1 + b u (u - 2)`, positive for every `u` when `0 < b < 1`.
pub fn cubic_g_prime(u: f64, params: &ModelParams) -> f64 {
    1.0 + params.b * u * (u - 2.0)
}

/// Maps a point of the forced system to shifted autonomous coordinates.
///
/// The phase is kept unwrapped (`theta = omega t`); use [`wrap_phase`] for reporting.
pub fn to_shifted(s: &StateXY, params: &ModelParams, forcing: &Forcing) -> StateUVTheta {
    let theta = forcing.omega * s.t;
    let big_y = s.y + params.a - forcing.amplitude * theta.sin();
    StateUVTheta {
        u: s.x - LEFT_KNEE.0,
        v: big_y - LEFT_KNEE.1,
        theta,
    }
}

/// Inverse of [`to_shifted`]; the time is recovered as `theta / omega`.
pub fn from_shifted(s: &StateUVTheta, params: &ModelParams, forcing: &Forcing) -> StateXY {
    let big_y = s.v + LEFT_KNEE.1;
    StateXY {
        x: s.u + LEFT_KNEE.0,
        y: big_y - params.a + forcing.amplitude * s.theta.sin(),
        t: s.theta / forcing.omega,
    }
}

/// Right-hand side of the forced two-dimensional system.
pub fn rhs_forced(s: &StateXY, params: &ModelParams, forcing: &Forcing) -> Vector2<f64> {
    let input = forcing.amplitude * (forcing.omega * s.t).sin();
    Vector2::new(
        s.x - s.x.powi(3) / 3.0 - s.y - params.a + input,
        params.eps * (s.x - params.b * s.y),
    )
}

pub fn jacobian_forced(s: &StateXY, params: &ModelParams) -> Matrix2<f64> {
    Matrix2::new(
        1.0 - s.x * s.x,
        -1.0,
        params.eps,
        -params.eps * params.b,
    )
}

/// Explicit time derivative of [`rhs_forced`].
pub fn time_derivative_forced(s: &StateXY, forcing: &Forcing) -> Vector2<f64> {
    Vector2::new(
        forcing.amplitude * forcing.omega * (forcing.omega * s.t).cos(),
        0.0,
    )
}

/// Right-hand side of the autonomous system in `(u, v, theta)`.
pub fn rhs_autonomous(s: &StateUVTheta, params: &ModelParams, forcing: &Forcing) -> Vector3<f64> {
    let dc = derived_constants(params, forcing);
    Vector3::new(
        -s.v + cubic_f(s.u),
        params.eps
            * (s.u - params.b * s.v + dc.mu - dc.r_delta * (s.theta - dc.phi_delta).cos()),
        forcing.omega,
    )
}

pub fn jacobian_autonomous(
    s: &StateUVTheta,
    params: &ModelParams,
    forcing: &Forcing,
) -> Matrix3<f64> {
    let dc = derived_constants(params, forcing);
    Matrix3::new(
        cubic_f_prime(s.u),
        -1.0,
        0.0,
        params.eps,
        -params.eps * params.b,
        params.eps * dc.r_delta * (s.theta - dc.phi_delta).sin(),
        0.0,
        0.0,
        0.0,
    )
}

/// Desingularized reduced flow on the critical manifold, `(du/dtau_D, dtheta/dtau_D)`.
pub fn rhs_desingularized(
    u: f64,
    theta: f64,
    params: &ModelParams,
    forcing: &Forcing,
) -> Vector2<f64> {
    let dc = derived_constants(params, forcing);
    let delta = forcing.delta(params);
    Vector2::new(
        dc.r_delta * (theta - dc.phi_delta).cos() - cubic_g(u, params),
        delta * u * (u - 2.0),
    )
}

pub fn jacobian_desingularized(
    u: f64,
    theta: f64,
    params: &ModelParams,
    forcing: &Forcing,
) -> Matrix2<f64> {
    let dc = derived_constants(params, forcing);
    let delta = forcing.delta(params);
    Matrix2::new(
        -cubic_g_prime(u, params),
        -dc.r_delta * (theta - dc.phi_delta).sin(),
        2.0 * delta * (u - 1.0),
        0.0,
    )
}

/// Slow-layer field on a fixed phase plane `theta = theta0` (the `delta -> 0` limit),
/// with respect to the slow time `tau_1 = eps t`.
pub fn rhs_slow_layer(
    u: f64,
    v: f64,
    params: &ModelParams,
    amplitude: f64,
    theta0: f64,
) -> Vector2<f64> {
    Vector2::new(
        (-v + cubic_f(u)) / params.eps,
        u - params.b * v + params.mu() - amplitude * params.b * (theta0 - FRAC_PI_2).cos(),
    )
}

pub fn jacobian_slow_layer(u: f64, params: &ModelParams) -> Matrix2<f64> {
    Matrix2::new(
        cubic_f_prime(u) / params.eps,
        -1.0 / params.eps,
        1.0,
        -params.b,
    )
}
