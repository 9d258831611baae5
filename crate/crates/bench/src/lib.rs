//! Benchmarks for the simulation and sweep pipeline.

use std::hint::black_box;

use criterion::Criterion;
use fhnburst::burst::{simulate_standard, ForcedFhn};
use fhnburst::geometry::folded_equilibria;
use fhnburst::integrator::OdeSystem;
use fhnburst::manifold::{solve_expansion, theta_at_lower_bound};
use fhnburst::model::{Forcing, ModelParams};
use fhnburst::sweep::contour::marching_squares;
use fhnburst::{Branch, IntegratorConfig};
use nalgebra::Vector2;

/// Forcing of the three-spike reference burst.
pub fn reference_case() -> (ModelParams, Forcing) {
    (ModelParams::default(), Forcing { amplitude: 0.55, omega: 0.0149354 })
}

/// Forcing at the folded-saddle transition.
pub fn saddle_case() -> (ModelParams, Forcing) {
    (ModelParams::default(), Forcing { amplitude: 0.482, omega: 0.02 })
}

/// Smooth field with closed level sets on an `n x n` grid.
pub fn radial_field(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let mut values = Vec::with_capacity(n * n);
    for y in &axis {
        for x in &axis {
            values.push((3.0 * x).sin() + x * x + y * y);
        }
    }
    (values, axis.clone(), axis)
}

pub fn benchmarks(c: &mut Criterion) {
    let (params, forcing) = reference_case();
    let system = ForcedFhn { params, forcing };
    let y = Vector2::new(-1.2, -0.6);
    c.bench_function("rhs", |b| b.iter(|| system.rhs(black_box(3.0), black_box(&y))));
    c.bench_function("jacobian", |b| b.iter(|| system.jacobian(black_box(3.0), black_box(&y))));

    let config = IntegratorConfig::default();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("reference_burst", |b| {
        b.iter(|| simulate_standard(&params, black_box(&forcing), &config).unwrap())
    });
    group.finish();

    let (params, saddle) = saddle_case();
    c.bench_function("folded_equilibria", |b| {
        b.iter(|| folded_equilibria(&params, black_box(&saddle)).unwrap())
    });
    c.bench_function("stable_manifold", |b| {
        b.iter(|| {
            let e = solve_expansion(Branch::Stable, &params, black_box(&saddle)).unwrap();
            theta_at_lower_bound(&e).unwrap()
        })
    });

    let (values, xs, ys) = radial_field(128);
    c.bench_function("marching_squares_128", |b| {
        b.iter(|| marching_squares(black_box(&values), &xs, &ys, 1.0))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        for (p, f) in [reference_case(), saddle_case()] {
            p.validate().unwrap();
            f.validate().unwrap();
        }
        let (values, xs, ys) = radial_field(16);
        assert_eq!(values.len(), xs.len() * ys.len());
        assert!(!marching_squares(&values, &xs, &ys, 1.0).is_empty());
    }
}
