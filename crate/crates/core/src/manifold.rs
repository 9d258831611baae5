//! Quintic series for the invariant manifolds of the left folded saddle.
//!
//! Near the saddle at `(0, theta_S)` each manifold is a graph
//! `u(th) = a1 th + a2 th^2 + ... + a5 th^5` with `th = theta - theta_S`.
//! Substituting into `du/dtheta = (R cos(theta - phi) - G(u)) / (delta u (u - 2))`
//! and matching powers gives `(k+1) a_{k+1} = b_k(a)`, solved here by Newton.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{find_equilibrium, folded_equilibria, GeometryError, Side};
use crate::model::{cubic_g, derived_constants, wrap_phase, Forcing, ModelParams};
use crate::roots::newton_bisect;

/// Largest `|theta - theta_S|` at which the quintic is evaluated.
pub const VALIDITY_WINDOW: f64 = FRAC_PI_2;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-13;
const FD_STEP: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("a1 must be nonzero")]
    DivisionByZero,
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("no folded saddle for these parameters")]
    NoSaddle,
    #[error("|theta - theta_S| = {offset} exceeds the validity window")]
    OutOfValidity { offset: f64 },
    #[error("the series does not reach u = -1 within the validity window")]
    NoIntersection,
    #[error("operation requires the stable branch")]
    WrongBranch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldExpansion {
    pub branch: Branch,
    pub theta_base: f64,
    pub coeffs: [f64; 5],
    pub c_const: f64,
    pub delta: f64,
    /// Max-norm residual of the five coefficient equations.
    pub residual: f64,
    pub iterations: usize,
}

/// `C = sqrt(R^2 - mu^2)`.
pub fn c_constant(r_delta: f64, mu: f64) -> f64 {
    (r_delta * r_delta - mu * mu).sqrt()
}

/// Right-hand sides `b0..b4` of the coefficient equations.
#[allow(clippy::many_single_char_names)]
pub fn b_coefficients(
    a: &[f64; 5],
    delta: f64,
    c: f64,
    mu: f64,
    b: f64,
) -> Result<[f64; 5], ManifoldError> {
    let [a1, a2, a3, a4, a5] = *a;
    if a1 == 0.0 {
        return Err(ManifoldError::DivisionByZero);
    }
    let d = delta;
    let m = mu;
    let p = |k: i32| a1.powi(k);

    let b0 = (a1 + c) / (2.0 * a1 * d);

    let b1 = (-2.0 * p(3) * b + p(3) + p(2) * c + a1 * m - 2.0 * a2 * c) / (4.0 * p(2) * d);

    let b2 = (-2.0 * p(5) * b + 3.0 * p(5) + 3.0 * p(4) * c - 12.0 * p(3) * a2 * b
        + 6.0 * p(3) * a2
        + 3.0 * p(3) * m
        - 2.0 * p(2) * c
        - 6.0 * a1 * a2 * m
        - 12.0 * a1 * a3 * c
        + 12.0 * a2 * a2 * c)
        / (24.0 * p(3) * d);

    let b3 = (-2.0 * p(7) * b + 3.0 * p(7) + 3.0 * p(6) * c - 8.0 * p(5) * a2 * b
        + 12.0 * p(5) * a2
        + 3.0 * p(5) * m
        + 6.0 * p(4) * a2 * c
        - 24.0 * p(4) * a3 * b
        + 12.0 * p(4) * a3
        - 2.0 * p(4) * c
        - p(3) * m
        + 4.0 * p(2) * a2 * c
        - 12.0 * p(2) * a3 * m
        - 24.0 * p(2) * a4 * c
        + 12.0 * a1 * a2 * a2 * m
        + 48.0 * a1 * a2 * a3 * c
        - 24.0 * a2.powi(3) * c)
        / (48.0 * p(4) * d);

    let b4 = (-10.0 * p(9) * b + 15.0 * p(9) + 15.0 * p(8) * c - 60.0 * p(7) * a2 * b
        + 90.0 * p(7) * a2
        + 15.0 * p(7) * m
        + 60.0 * p(6) * a2 * c
        - 80.0 * p(6) * a3 * b
        + 120.0 * p(6) * a3
        - 10.0 * p(6) * c
        - 40.0 * p(5) * a2 * a2 * b
        + 60.0 * p(5) * a2 * a2
        + 30.0 * p(5) * a2 * m
        + 60.0 * p(5) * a3 * c
        - 240.0 * p(5) * a4 * b
        + 120.0 * p(5) * a4
        - 5.0 * p(5) * m
        + 2.0 * p(4) * c
        + 10.0 * p(3) * a2 * m
        + 40.0 * p(3) * a3 * c
        - 120.0 * p(3) * a4 * m
        - 240.0 * p(3) * a5 * c
        - 40.0 * p(2) * a2 * a2 * c
        + 240.0 * p(2) * a2 * a3 * m
        + 480.0 * p(2) * a2 * a4 * c
        + 240.0 * p(2) * a3 * a3 * c
        - 120.0 * a1 * a2.powi(3) * m
        - 720.0 * a1 * a2 * a2 * a3 * c
        + 240.0 * a2.powi(4) * c)
        / (480.0 * p(5) * d);

    Ok([b0, b1, b2, b3, b4])
}

/// `(k+1) a_{k+1} - b_k(a)` for `k = 0..4`.
pub fn coefficient_residual(
    a: &[f64; 5],
    delta: f64,
    c: f64,
    mu: f64,
    b: f64,
) -> Result<[f64; 5], ManifoldError> {
    let bk = b_coefficients(a, delta, c, mu, b)?;
    Ok(std::array::from_fn(|k| (k + 1) as f64 * a[k] - bk[k]))
}

/// `a1 = -lambda / (2 delta)`.
pub fn closed_form_a1(lambda: f64, delta: f64) -> f64 {
    -lambda / (2.0 * delta)
}

/// `a2 = (lambda^3 (2b - 1) + 2 delta lambda^2 C - 4 mu delta^2 lambda) / (16 delta^2 (lambda^2 + delta C))`.
pub fn closed_form_a2(lambda: f64, delta: f64, c: f64, mu: f64, b: f64) -> f64 {
    let l2 = lambda * lambda;
    (l2 * lambda * (2.0 * b - 1.0) + 2.0 * delta * l2 * c - 4.0 * mu * delta * delta * lambda)
        / (16.0 * delta * delta * (l2 + delta * c))
}

/// Saddle eigenvalue and phase used as the starting point of [`solve_expansion`].
pub fn saddle_data(
    branch: Branch,
    params: &ModelParams,
    forcing: &Forcing,
) -> Result<(f64, f64), ManifoldError> {
    let eq = folded_equilibria(params, forcing)?;
    let saddle = find_equilibrium(&eq, Side::Left, true).ok_or(ManifoldError::NoSaddle)?;
    let idx = match branch {
        Branch::Stable => 0,
        Branch::Unstable => 1,
    };
    Ok((saddle.eigenpairs[idx].value[0], saddle.theta))
}

pub fn solve_expansion(
    branch: Branch,
    params: &ModelParams,
    forcing: &Forcing,
) -> Result<ManifoldExpansion, ManifoldError> {
    let (lambda, theta_base) = saddle_data(branch, params, forcing)?;
    let dc = derived_constants(params, forcing);
    let delta = forcing.delta(params);
    let c = c_constant(dc.r_delta, dc.mu);
    let (mu, b) = (dc.mu, params.b);
    let resid = |a: &Vector5<f64>| -> Result<Vector5<f64>, ManifoldError> {
        let arr = [a[0], a[1], a[2], a[3], a[4]];
        Ok(Vector5::from(coefficient_residual(&arr, delta, c, mu, b)?))
    };

    let mut a = Vector5::new(closed_form_a1(lambda, delta), 0.0, 0.0, 0.0, 0.0);
    let mut r = resid(&a)?;
    let mut iterations = 0;
    while r.amax() > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(ManifoldError::NewtonDiverged {
                iterations,
                residual: r.amax(),
            });
        }
        iterations += 1;
        let mut jac = Matrix5::zeros();
        for j in 0..5 {
            let h = FD_STEP * (1.0 + a[j].abs());
            let mut ap = a;
            ap[j] += h;
            jac.set_column(j, &((resid(&ap)? - r) / h));
        }
        let step = jac.lu().solve(&-r).ok_or(ManifoldError::NewtonDiverged {
            iterations,
            residual: r.amax(),
        })?;
        let prev = r.amax();
        a += step;
        r = resid(&a)?;
        let blowup = !r.amax().is_finite() || a.amax() > 1e12;
        if blowup {
            return Err(ManifoldError::NewtonDiverged {
                iterations,
                residual: r.amax(),
            });
        }
        // stalled at rounding level
        if step.amax() <= 1e-15 * (1.0 + a.amax()) && r.amax() >= prev {
            break;
        }
    }
    Ok(ManifoldExpansion {
        branch,
        theta_base,
        coeffs: [a[0], a[1], a[2], a[3], a[4]],
        c_const: c,
        delta,
        residual: r.amax(),
        iterations,
    })
}

impl ManifoldExpansion {
    /// Horner evaluation of the series at offset `th` from the saddle phase.
    pub fn eval_offset(&self, th: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| (acc + a) * th)
    }

    /// `du/dth` of the series.
    pub fn slope_offset(&self, th: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, &a)| acc * th + (k + 1) as f64 * a)
    }
}

/// Offset of `theta` from the saddle phase, taken in `(-pi, pi]`.
pub fn phase_offset_from_base(expansion: &ManifoldExpansion, theta: f64) -> f64 {
    let d = wrap_phase(theta - expansion.theta_base);
    if d > std::f64::consts::PI {
        d - std::f64::consts::TAU
    } else {
        d
    }
}

pub fn eval_manifold(expansion: &ManifoldExpansion, theta: f64) -> Result<f64, ManifoldError> {
    let th = phase_offset_from_base(expansion, theta);
    if th.abs() > VALIDITY_WINDOW {
        return Err(ManifoldError::OutOfValidity { offset: th.abs() });
    }
    Ok(expansion.eval_offset(th))
}

/// Mismatch between the series slope and the reduced direction field at offset `th`.
pub fn direction_field_residual(
    expansion: &ManifoldExpansion,
    params: &ModelParams,
    forcing: &Forcing,
    th: f64,
) -> f64 {
    let dc = derived_constants(params, forcing);
    let u = expansion.eval_offset(th);
    let theta = expansion.theta_base + th;
    let field = (dc.r_delta * (theta - dc.phi_delta).cos() - cubic_g(u, params))
        / (expansion.delta * u * (u - 2.0));
    (expansion.slope_offset(th) - field).abs()
}

/// Where the stable manifold meets `u = -1` (that is `x = -2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCrossing {
    /// Offset from the saddle phase, negative.
    pub offset: f64,
    /// Phase in `[0, 2 pi)`.
    pub theta: f64,
    pub residual: f64,
}

pub fn theta_at_lower_bound(expansion: &ManifoldExpansion) -> Result<LowerBoundCrossing, ManifoldError> {
    if expansion.branch != Branch::Stable {
        return Err(ManifoldError::WrongBranch);
    }
    let g = |th: f64| expansion.eval_offset(th) + 1.0;
    const SCAN: usize = 4096;
    let mut hi = 0.0;
    let mut g_hi = g(hi);
    for i in 1..=SCAN {
        let lo = -VALIDITY_WINDOW * i as f64 / SCAN as f64;
        let g_lo = g(lo);
        if g_lo == 0.0 || g_lo.signum() != g_hi.signum() {
            let offset = newton_bisect(g, |th| expansion.slope_offset(th), lo, hi, 1e-16)
                .ok_or(ManifoldError::NoIntersection)?;
            return Ok(LowerBoundCrossing {
                offset,
                theta: wrap_phase(expansion.theta_base + offset),
                residual: g(offset).abs(),
            });
        }
        hi = lo;
        g_hi = g_lo;
    }
    Err(ManifoldError::NoIntersection)
}
