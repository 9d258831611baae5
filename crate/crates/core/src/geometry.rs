//! Closed-form geometry of the singular limits.
//!
//! Folded equilibria of the desingularized flow sit on the fold lines `u = 0`
//! and `u = 2` at the phases where `R cos(theta - phi) = G(u)`. Their existence
//! and type switch at the amplitude thresholds collected in [`FoldThresholds`],
//! which in turn partition the `(omega, E)` plane into [`Region`]s.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{Complex, Matrix2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    cubic_f, cubic_g, cubic_g_prime, derived_constants, jacobian_desingularized, jacobian_slow_layer,
    wrap_phase, Forcing, ModelParams,
};
use crate::roots::{expand_bracket, newton_bisect};

/// Distance to an existence threshold below which a folded saddle-node is reported.
pub const SADDLE_NODE_TOL: f64 = 1e-10;
/// Distance in `E` to any threshold below which [`classify_region`] answers `Boundary`.
pub const REGION_BOUNDARY_TOL: f64 = 1e-10;
const FOLD_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("folded saddle-node on the {side} fold: |G/R - 1| = {gap:e}")]
    SaddleNodeBoundary { side: Side, gap: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldBranch {
    AttractingMinus,
    FoldMinus,
    Repelling,
    FoldPlus,
    AttractingPlus,
}

pub fn classify_manifold_point(u: f64) -> ManifoldBranch {
    if u.abs() <= FOLD_TOL {
        ManifoldBranch::FoldMinus
    } else if (u - 2.0).abs() <= FOLD_TOL {
        ManifoldBranch::FoldPlus
    } else if u < 0.0 {
        ManifoldBranch::AttractingMinus
    } else if u < 2.0 {
        ManifoldBranch::Repelling
    } else {
        ManifoldBranch::AttractingPlus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldThresholds {
    pub e_star_left: f64,
    pub e_star_right: f64,
    pub e_2star_left: f64,
    pub e_2star_right: f64,
}

pub fn fold_thresholds(params: &ModelParams, delta: f64) -> FoldThresholds {
    let norm = params.b.hypot(delta);
    let g0 = cubic_g(0.0, params);
    let g2 = cubic_g(2.0, params);
    let focus = 1.0 / (8.0 * delta * norm);
    let e_star_left = g0 / norm;
    let e_star_right = g2 / norm;
    FoldThresholds {
        e_star_left,
        e_star_right,
        e_2star_left: e_star_left.hypot(focus),
        e_2star_right: e_star_right.hypot(focus),
    }
}

/// Existence thresholds in the limit `delta -> 0`: `(G(0)/b, G(2)/b)`.
pub fn singular_limit_thresholds(params: &ModelParams) -> (f64, f64) {
    (cubic_g(0.0, params) / params.b, cubic_g(2.0, params) / params.b)
}

/// The `delta` at which `E**_left` meets `E*_right`, if the curves cross.
///
/// Setting `mu^2 + 1/(64 delta^2) = G(2)^2` gives `delta = 1 / (8 sqrt(G(2)^2 - mu^2))`.
pub fn threshold_crossing_delta(params: &ModelParams) -> Option<f64> {
    let g0 = cubic_g(0.0, params);
    let g2 = cubic_g(2.0, params);
    let gap = g2 * g2 - g0 * g0;
    (gap > 0.0).then(|| 1.0 / (8.0 * gap.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Saddle,
    Node,
    Focus,
}

/// Eigenvalue and eigenvector, each complex entry stored as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: [f64; 2],
    pub vector: [[f64; 2]; 2],
}

impl Eigenpair {
    fn new(value: Complex<f64>, vector: [Complex<f64>; 2]) -> Self {
        Self {
            value: [value.re, value.im],
            vector: [[vector[0].re, vector[0].im], [vector[1].re, vector[1].im]],
        }
    }

    pub fn lambda(&self) -> Complex<f64> {
        Complex::new(self.value[0], self.value[1])
    }

    pub fn eigvec(&self) -> [Complex<f64>; 2] {
        [
            Complex::new(self.vector[0][0], self.vector[0][1]),
            Complex::new(self.vector[1][0], self.vector[1][1]),
        ]
    }

    /// `|J V - lambda V|` in the Euclidean norm.
    pub fn residual(&self, j: &Matrix2<f64>) -> f64 {
        let l = self.lambda();
        let v = self.eigvec();
        let r0 = v[0] * j[(0, 0)] + v[1] * j[(0, 1)] - l * v[0];
        let r1 = v[0] * j[(1, 0)] + v[1] * j[(1, 1)] - l * v[1];
        (r0.norm_sqr() + r1.norm_sqr()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldedEquilibrium {
    pub side: Side,
    pub kind: EquilibriumKind,
    pub u: f64,
    pub v: f64,
    /// Phase in `[0, 2 pi)`.
    pub theta: f64,
    /// `lambda_1` (more negative real part, or negative imaginary part) first.
    pub eigenpairs: [Eigenpair; 2],
}

impl FoldedEquilibrium {
    pub fn jacobian(&self, params: &ModelParams, forcing: &Forcing) -> Matrix2<f64> {
        jacobian_desingularized(self.u, self.theta, params, forcing)
    }
}

/// Eigenpairs of `[[-1, -s], [2 delta (u - 1), 0]]` where `det = -2 delta (u-1) s`.
fn eigenpairs(side: Side, det: f64, delta: f64) -> (EquilibriumKind, [Eigenpair; 2]) {
    let disc = 1.0 - 4.0 * det;
    let v2 = match side {
        Side::Left => -2.0 * delta,
        Side::Right => 2.0 * delta,
    };
    let (kind, l1, l2) = if disc >= 0.0 {
        let r = disc.sqrt();
        let kind = if det < 0.0 {
            EquilibriumKind::Saddle
        } else {
            EquilibriumKind::Node
        };
        (
            kind,
            Complex::new(-0.5 - 0.5 * r, 0.0),
            Complex::new(-0.5 + 0.5 * r, 0.0),
        )
    } else {
        let w = 0.5 * (-disc).sqrt();
        (
            EquilibriumKind::Focus,
            Complex::new(-0.5, -w),
            Complex::new(-0.5, w),
        )
    };
    let pair = |l: Complex<f64>| Eigenpair::new(l, [l, Complex::new(v2, 0.0)]);
    (kind, [pair(l1), pair(l2)])
}

/// Folded equilibria ordered saddle-left, non-saddle-left, saddle-right, non-saddle-right.
pub fn folded_equilibria(
    params: &ModelParams,
    forcing: &Forcing,
) -> Result<Vec<FoldedEquilibrium>, GeometryError> {
    let dc = derived_constants(params, forcing);
    let delta = forcing.delta(params);
    let mut out = Vec::with_capacity(4);
    if dc.r_delta == 0.0 {
        return Ok(out);
    }
    for (side, u) in [(Side::Left, 0.0), (Side::Right, 2.0)] {
        let g = cubic_g(u, params);
        let ratio = g / dc.r_delta;
        let gap = (ratio - 1.0).abs();
        if gap <= SADDLE_NODE_TOL {
            return Err(GeometryError::SaddleNodeBoundary { side, gap });
        }
        if ratio.abs() > 1.0 {
            break;
        }
        let alpha = ratio.acos();
        let s = (dc.r_delta * dc.r_delta - g * g).sqrt();
        // det = -2 delta (u - 1) R sin(theta - phi)
        let (theta_saddle, theta_other) = match side {
            Side::Left => (dc.phi_delta + alpha, dc.phi_delta - alpha),
            Side::Right => (dc.phi_delta - alpha, dc.phi_delta + alpha),
        };
        for (theta, det) in [(theta_saddle, -2.0 * delta * s), (theta_other, 2.0 * delta * s)] {
            let (kind, eigenpairs) = eigenpairs(side, det, delta);
            out.push(FoldedEquilibrium {
                side,
                kind,
                u,
                v: cubic_f(u),
                theta: wrap_phase(theta),
                eigenpairs,
            });
        }
    }
    Ok(out)
}

/// Convenience lookup of one equilibrium in a list from [`folded_equilibria`].
pub fn find_equilibrium(
    list: &[FoldedEquilibrium],
    side: Side,
    saddle: bool,
) -> Option<&FoldedEquilibrium> {
    list.iter()
        .find(|e| e.side == side && (e.kind == EquilibriumKind::Saddle) == saddle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
    V,
    VI,
    #[serde(rename = "boundary")]
    Boundary,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
            Region::V => "V",
            Region::VI => "VI",
            Region::Boundary => "boundary",
        }
    }

    /// Number of folded equilibria present in the region's interior.
    pub fn equilibrium_count(&self) -> Option<usize> {
        match self {
            Region::I => Some(0),
            Region::II | Region::III => Some(2),
            Region::IV | Region::V | Region::VI => Some(4),
            Region::Boundary => None,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "I" => Region::I,
            "II" => Region::II,
            "III" => Region::III,
            "IV" => Region::IV,
            "V" => Region::V,
            "VI" => Region::VI,
            "boundary" => Region::Boundary,
            other => return Err(format!("unknown region {other:?}")),
        })
    }
}

pub fn classify_region(params: &ModelParams, forcing: &Forcing) -> Region {
    let th = fold_thresholds(params, forcing.delta(params));
    let e = forcing.amplitude;
    let all = [th.e_star_left, th.e_star_right, th.e_2star_left, th.e_2star_right];
    if all.iter().any(|t| (e - t).abs() <= REGION_BOUNDARY_TOL) {
        return Region::Boundary;
    }
    if e < th.e_star_left {
        Region::I
    } else if e < th.e_star_right {
        if e < th.e_2star_left {
            Region::II
        } else {
            Region::III
        }
    } else if e < th.e_2star_left.min(th.e_2star_right) {
        Region::IV
    } else if e < th.e_2star_right {
        Region::V
    } else {
        Region::VI
    }
}

/// Leading-order eigenvalues of the left folded equilibria for small `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallDeltaEigenvalues {
    pub lambda: f64,
    pub saddle: [f64; 2],
    pub node: [f64; 2],
}

fn small_delta_gap(params: &ModelParams, amplitude: f64) -> Result<f64, GeometryError> {
    let mu = params.mu();
    let gap = amplitude * amplitude * params.b * params.b - mu * mu;
    if gap <= 0.0 {
        return Err(GeometryError::Domain(format!(
            "need E^2 b^2 > mu^2, got E = {amplitude}"
        )));
    }
    Ok(gap)
}

/// `Lambda = 2 (E^2 b^2 - mu^2)`.
pub fn small_delta_lambda(params: &ModelParams, amplitude: f64) -> Result<f64, GeometryError> {
    Ok(2.0 * small_delta_gap(params, amplitude)?)
}

/// Second-order expansion with `Lambda = 2 (E^2 b^2 - mu^2)`:
/// saddle `-1 - L d + 2 L^2 d^2`, `L d - 2 L^2 d^2`;
/// node `-1 + L d + 2 L^2 d^2`, `-L d - 2 L^2 d^2`.
pub fn eigen_smalldelta_expansion(
    params: &ModelParams,
    amplitude: f64,
    delta: f64,
) -> Result<SmallDeltaEigenvalues, GeometryError> {
    let l = small_delta_lambda(params, amplitude)?;
    let ld = l * delta;
    let q = 2.0 * ld * ld;
    Ok(SmallDeltaEigenvalues {
        lambda: l,
        saddle: [-1.0 - ld + q, ld - q],
        node: [-1.0 + ld + q, -ld - q],
    })
}

/// Second-order Taylor expansion of the exact eigenvalues in `delta`.
///
/// With `L = 2 sqrt(E^2 b^2 - mu^2)`: saddle `-1 - L d + L^2 d^2`, `L d - L^2 d^2`;
/// node `-1 + L d + L^2 d^2`, `-L d - L^2 d^2`. The remainder is `O(delta^3)`.
pub fn eigen_smalldelta_taylor(
    params: &ModelParams,
    amplitude: f64,
    delta: f64,
) -> Result<SmallDeltaEigenvalues, GeometryError> {
    let l = 2.0 * small_delta_gap(params, amplitude)?.sqrt();
    let ld = l * delta;
    let q = ld * ld;
    Ok(SmallDeltaEigenvalues {
        lambda: l,
        saddle: [-1.0 - ld + q, ld - q],
        node: [-1.0 + ld + q, -ld - q],
    })
}

/// Point `(u, v)` of the super-critical manifold at phase `theta0`:
/// the unique root of `G(u) = E b sin(theta0)` with `v = F(u)`.
pub fn supercritical_manifold_point(theta0: f64, params: &ModelParams, amplitude: f64) -> (f64, f64) {
    let target = amplitude * params.b * theta0.sin();
    let h = |u: f64| cubic_g(u, params) - target;
    let (lo, hi) = expand_bracket(h, -1.0, 1.0).expect("G is a cubic bijection");
    let u = newton_bisect(h, |u| cubic_g_prime(u, params), lo, hi, 1e-16)
        .expect("bracket has a sign change");
    (u, cubic_f(u))
}

/// Delayed-Hopf points `u = 1 -/+ sqrt(1 - eps b)` where `tr J_SL = 0`.
pub fn delayed_hopf_points(params: &ModelParams) -> Result<(f64, f64), GeometryError> {
    let s = 1.0 - params.eps * params.b;
    if s <= 0.0 {
        return Err(GeometryError::Domain(format!("need eps b < 1, got {}", params.eps * params.b)));
    }
    let r = s.sqrt();
    Ok((1.0 - r, 1.0 + r))
}

/// Trace of the slow-layer Jacobian at `u`.
pub fn slow_layer_trace(u: f64, params: &ModelParams) -> f64 {
    jacobian_slow_layer(u, params).trace()
}

/// Smallest positive distance in phase from `from` forward to `to`, both unwrapped.
pub fn phase_ahead(from: f64, to: f64) -> f64 {
    (to - from).rem_euclid(TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rhs_desingularized, wrap_phase};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn branch_labels() {
        assert_eq!(classify_manifold_point(-0.5), ManifoldBranch::AttractingMinus);
        assert_eq!(classify_manifold_point(0.0), ManifoldBranch::FoldMinus);
        assert_eq!(classify_manifold_point(1.0), ManifoldBranch::Repelling);
        assert_eq!(classify_manifold_point(2.0), ManifoldBranch::FoldPlus);
        assert_eq!(classify_manifold_point(2.5), ManifoldBranch::AttractingPlus);
        assert_eq!(classify_manifold_point(1e-9), ManifoldBranch::Repelling);
    }

    #[test]
    fn thresholds_at_unit_delta() {
        let t = fold_thresholds(&p(), 1.0);
        assert_abs_diff_eq!(t.e_star_left, 0.1822, epsilon = 5e-5);
        assert_abs_diff_eq!(t.e_2star_left, 0.2067, epsilon = 5e-5);
        assert_abs_diff_eq!(t.e_star_right, 0.9110, epsilon = 5e-5);
        assert_abs_diff_eq!(t.e_2star_right, 0.9162, epsilon = 5e-4);
        let (l0, r0) = singular_limit_thresholds(&p());
        assert_abs_diff_eq!(l0, 0.875 + 2.0 / 3.0 - 1.0 / 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(r0, 1.4583, epsilon = 5e-5);
    }

    #[test]
    fn thresholds_approach_singular_limit() {
        let (l0, r0) = singular_limit_thresholds(&p());
        let t = fold_thresholds(&p(), 1e-8);
        assert_abs_diff_eq!(t.e_star_left, l0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.e_star_right, r0, epsilon = 1e-12);
    }

    #[test]
    fn crossing_delta_equates_the_two_curves() {
        let d = threshold_crossing_delta(&p()).unwrap();
        let t = fold_thresholds(&p(), d);
        assert_abs_diff_eq!(t.e_2star_left, t.e_star_right, epsilon = 1e-12);
    }

    #[test]
    fn region_one_has_no_equilibria() {
        let f = Forcing::new(0.1, 0.05).unwrap();
        assert_eq!(classify_region(&p(), &f), Region::I);
        assert!(folded_equilibria(&p(), &f).unwrap().is_empty());
        let f0 = Forcing::new(0.0, 0.05).unwrap();
        assert!(folded_equilibria(&p(), &f0).unwrap().is_empty());
    }

    #[test]
    fn fig4_parameters_give_saddle_and_node() {
        let f = Forcing::new(0.55, 0.0149354).unwrap();
        assert_eq!(classify_region(&p(), &f), Region::II);
        let eq = folded_equilibria(&p(), &f).unwrap();
        assert_eq!(eq.len(), 2);
        assert_eq!(eq[0].kind, EquilibriumKind::Saddle);
        assert_eq!(eq[1].kind, EquilibriumKind::Node);
        for e in &eq {
            assert_eq!((e.u, e.v), (0.0, 0.0));
            assert_abs_diff_eq!(e.eigenpairs[0].lambda().re + e.eigenpairs[1].lambda().re, -1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn saddle_node_boundary_is_an_error() {
        let params = p();
        let delta = 0.3;
        let e = fold_thresholds(&params, delta).e_star_left;
        let f = Forcing::new(e, delta * params.eps).unwrap();
        assert!(matches!(
            folded_equilibria(&params, &f),
            Err(GeometryError::SaddleNodeBoundary { side: Side::Left, .. })
        ));
        assert_eq!(classify_region(&params, &f), Region::Boundary);
    }

    #[test]
    fn small_delta_lambda_value() {
        let l = small_delta_lambda(&p(), 0.6).unwrap();
        assert_abs_diff_eq!(l, 0.35, epsilon = 5e-3);
        let z = eigen_smalldelta_expansion(&p(), 0.6, 0.0).unwrap();
        assert_eq!(z.saddle, [-1.0, 0.0]);
        assert_eq!(z.node, [-1.0, 0.0]);
        assert!(eigen_smalldelta_expansion(&p(), 0.2, 0.01).is_err());
    }

    #[test]
    fn taylor_variant_has_cubic_remainder() {
        let params = p();
        let residual = |delta: f64| {
            let f = Forcing::new(0.6, delta * params.eps).unwrap();
            let eq = folded_equilibria(&params, &f).unwrap();
            let exact = eq[0].eigenpairs[1].lambda().re;
            (exact - eigen_smalldelta_taylor(&params, 0.6, delta).unwrap().saddle[1]).abs()
        };
        let ds = [0.001, 0.002, 0.005];
        let r: Vec<f64> = ds.iter().map(|&d| residual(d)).collect();
        let slope = (r[2] / r[0]).ln() / (ds[2] / ds[0]).ln();
        assert!((slope - 3.0).abs() < 0.3, "slope {slope}");
    }

    #[test]
    fn supercritical_manifold_examples() {
        let params = p();
        let (u, v) = supercritical_manifold_point(1.0, &params, 0.0);
        assert_abs_diff_eq!(u, params.unforced_equilibrium().x + 1.0, epsilon = 1e-12);
        assert_eq!(v, cubic_f(u));
        let e = 0.5;
        let theta0 = (params.mu() / (e * params.b)).asin();
        let (u, _) = supercritical_manifold_point(theta0, &params, e);
        assert!(u.abs() < 1e-12);
    }

    #[test]
    fn delayed_hopf_examples() {
        let params = p();
        let (lo, hi) = delayed_hopf_points(&params).unwrap();
        assert_abs_diff_eq!(lo - 1.0, -0.936f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(hi - 1.0, 0.9675, epsilon = 1e-4);
        assert!(slow_layer_trace(lo, &params).abs() < 1e-12);
        assert!(slow_layer_trace(hi, &params).abs() < 1e-12);
        let tiny = ModelParams::new(0.875, 0.8, 1e-9).unwrap();
        let (lo, hi) = delayed_hopf_points(&tiny).unwrap();
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn region_one_below_all_thresholds_for_delta_up_to_one() {
        let params = p();
        for k in 1..=100 {
            let delta = k as f64 / 100.0;
            let f = Forcing::new(0.1, delta * params.eps).unwrap();
            assert_eq!(classify_region(&params, &f), Region::I);
        }
    }

    fn arb_forcing() -> impl Strategy<Value = Forcing> {
        (0.0f64..2.0, 0.001f64..0.2).prop_map(|(e, w)| Forcing::new(e, w).unwrap())
    }

    proptest! {
        #[test]
        fn equilibria_are_zeros_with_consistent_types(f in arb_forcing()) {
            let params = p();
            let Ok(list) = folded_equilibria(&params, &f) else { return Ok(()) };
            let region = classify_region(&params, &f);
            if let Some(n) = region.equilibrium_count() {
                prop_assert_eq!(n, list.len());
            }
            for e in &list {
                let r = rhs_desingularized(e.u, e.theta, &params, &f);
                prop_assert!(r.amax() <= 1e-12 * (1.0 + f.amplitude));
                let j = e.jacobian(&params, &f);
                prop_assert!((j.trace() + 1.0).abs() <= 1e-14);
                let det = j.determinant();
                let expected = if det < 0.0 {
                    EquilibriumKind::Saddle
                } else if 1.0 - 4.0 * det >= 0.0 {
                    EquilibriumKind::Node
                } else {
                    EquilibriumKind::Focus
                };
                prop_assert_eq!(e.kind, expected);
                for pair in &e.eigenpairs {
                    prop_assert!(pair.residual(&j) <= 1e-12);
                }
                if e.kind == EquilibriumKind::Saddle {
                    prop_assert!(e.eigenpairs[0].value[0] * e.eigenpairs[1].value[0] < 0.0);
                }
                if e.kind == EquilibriumKind::Focus {
                    prop_assert_eq!(e.eigenpairs[0].value[0], -0.5);
                }
                prop_assert!((0.0..TAU).contains(&e.theta));
            }
            let quarter = |t: f64| !(FRAC_PI_2..=3.0 * FRAC_PI_2).contains(&t);
            if let Some(e) = find_equilibrium(&list, Side::Left, true) {
                prop_assert!(e.theta > 0.0 && e.theta < PI);
            }
            if let Some(e) = find_equilibrium(&list, Side::Left, false) {
                prop_assert!(quarter(e.theta));
            }
            if let Some(e) = find_equilibrium(&list, Side::Right, true) {
                prop_assert!(quarter(e.theta));
            }
            if let Some(e) = find_equilibrium(&list, Side::Right, false) {
                prop_assert!(e.theta > 0.0 && e.theta < PI);
            }
        }

        #[test]
        fn star_thresholds_ordered_and_monotone(d1 in 0.001f64..5.0, d2 in 0.001f64..5.0) {
            let params = p();
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let a = fold_thresholds(&params, lo);
            let b = fold_thresholds(&params, hi);
            prop_assert!(a.e_star_left < a.e_star_right);
            prop_assert!(a.e_2star_left < a.e_2star_right);
            prop_assert!(a.e_star_left >= b.e_star_left);
        }

        #[test]
        fn supercritical_residuals(theta0 in 0.0f64..TAU, e in 0.0f64..3.0) {
            let params = p();
            let (u, v) = supercritical_manifold_point(theta0, &params, e);
            let target = e * params.b * theta0.sin();
            prop_assert!((cubic_g(u, &params) - target).abs() <= 1e-12);
            prop_assert!((v - cubic_f(u)).abs() <= 1e-12);
            let phase = wrap_phase(theta0);
            prop_assert!((0.0..TAU).contains(&phase));
        }
    }
}
