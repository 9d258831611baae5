//! Spike-adding analysis of the periodically forced FitzHugh-Nagumo model.
//!
//! The crate covers the closed-form singular geometry, a stiff integrator,
//! the burst measurement pipeline, the folded-saddle manifold series and
//! parallel parameter sweeps with contour extraction.

pub mod burst;
pub mod geometry;
pub mod integrator;
pub mod manifold;
pub mod model;
pub mod roots;
pub mod sweep;

pub use burst::{BurstError, BurstMetrics, CanardClass, CanardOutcome, CanardSite, SpikeEstimate};
pub use geometry::{EquilibriumKind, FoldThresholds, FoldedEquilibrium, Region, Side};
pub use integrator::{IntegratorConfig, Trajectory};
pub use manifold::{Branch, ManifoldExpansion};
pub use model::{DerivedConstants, Forcing, ModelParams, StateUVTheta, StateXY};
pub use sweep::{SweepGrid, SweepSpec};
