//! Marching-squares isolines on sweep grids.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Metric, SweepError, SweepGrid};

pub const DEFAULT_L2_LEVELS: usize = 24;
pub const DEFAULT_CUSP_WINDOW: usize = 3;
pub const DEFAULT_CUSP_ANGLE_DEG: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub level: f64,
    /// `[omega, E]` pairs.
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Identifies a grid edge: horizontal edges join `(i, j)` to `(i, j+1)`,
/// vertical edges join `(i, j)` to `(i+1, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

/// Isolines of `values` (row-major, `ny` rows of `nx`) at `level`.
///
/// Rows follow `ys`, columns follow `xs`. Cells touching a `NaN` are skipped.
/// Saddle cells are resolved with the average of the four corners.
pub fn marching_squares(values: &[f64], xs: &[f64], ys: &[f64], level: f64) -> Vec<Polyline> {
    let (nx, ny) = (xs.len(), ys.len());
    assert_eq!(values.len(), nx * ny, "grid shape mismatch");
    let z = |i: usize, j: usize| values[i * nx + j];
    let mut points: HashMap<EdgeId, [f64; 2]> = HashMap::new();
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();

    let mut crossing = |e: EdgeId| -> [f64; 2] {
        *points.entry(e).or_insert_with(|| match e {
            EdgeId::H(i, j) => {
                let t = (level - z(i, j)) / (z(i, j + 1) - z(i, j));
                [xs[j] + t * (xs[j + 1] - xs[j]), ys[i]]
            }
            EdgeId::V(i, j) => {
                let t = (level - z(i, j)) / (z(i + 1, j) - z(i, j));
                [xs[j], ys[i] + t * (ys[i + 1] - ys[i])]
            }
        })
    };

    for i in 0..ny.saturating_sub(1) {
        for j in 0..nx.saturating_sub(1) {
            let c = [z(i, j), z(i, j + 1), z(i + 1, j + 1), z(i + 1, j)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let above = c.map(|v| v > level);
            let bottom = EdgeId::H(i, j);
            let right = EdgeId::V(i, j + 1);
            let top = EdgeId::H(i + 1, j);
            let left = EdgeId::V(i, j);
            // corners 0..3 counter-clockwise from bottom-left; edge k joins corner k and k+1
            let edges = [bottom, right, top, left];
            let cut: Vec<EdgeId> = (0..4)
                .filter(|&k| above[k] != above[(k + 1) % 4])
                .map(|k| edges[k])
                .collect();
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let center = c.iter().sum::<f64>() / 4.0 > level;
                    if center == above[0] {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }
    for &(a, b) in &segments {
        crossing(a);
        crossing(b);
    }
    stitch(&segments, &points, level)
}

fn stitch(segments: &[(EdgeId, EdgeId)], points: &HashMap<EdgeId, [f64; 2]>, level: f64) -> Vec<Polyline> {
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: EdgeId, used: &mut Vec<bool>| -> (Vec<EdgeId>, bool) {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (chain, true);
            }
            chain.push(next);
            at = next;
            match by_edge[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => return (chain, false),
            }
        }
    };

    // open chains start at edges used by a single segment
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        let start = if by_edge[&a].len() == 1 {
            Some(a)
        } else if by_edge[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(e) = start {
            let (chain, closed) = walk(k, e, &mut used);
            out.push((chain, closed));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            let (chain, closed) = walk(k, segments[k].0, &mut used);
            out.push((chain, closed));
        }
    }
    out.into_iter()
        .map(|(chain, closed)| Polyline {
            level,
            points: chain.iter().map(|e| points[e]).collect(),
            closed,
        })
        .collect()
}

/// Spike-count boundaries at every half-integer level spanned by the grid.
pub fn extract_boundaries(grid: &SweepGrid) -> Result<Vec<Polyline>, SweepError> {
    let values = grid.metric_values(Metric::SpikeCount)?;
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut k = lo.floor();
    while k < hi {
        out.extend(marching_squares(&values, &grid.omegas, &grid.amplitudes, k + 0.5));
        k += 1.0;
    }
    Ok(out)
}

/// L2 contours at `n_levels` evenly spaced interior levels between grid min and max.
pub fn l2_levelsets(grid: &SweepGrid, n_levels: usize) -> Result<Vec<Polyline>, SweepError> {
    let values = grid.metric_values(Metric::L2)?;
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for k in 1..=n_levels {
        let level = lo + (hi - lo) * k as f64 / (n_levels + 1) as f64;
        out.extend(marching_squares(&values, &grid.omegas, &grid.amplitudes, level));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cusp {
    pub omega: f64,
    #[serde(rename = "E")]
    pub amplitude: f64,
    pub level: f64,
    /// Opening angle in degrees between the two arms.
    pub angle_deg: f64,
}

/// Sharp turning points of polylines.
///
/// Points are measured in cell units. A vertex is a cusp when the arms to the
/// vertices `window` steps before and after it open by less than `max_angle_deg`
/// and the vertex is an extremum of one coordinate over that span. Of several
/// adjacent candidates the sharpest is kept.
pub fn detect_cusps(
    polylines: &[Polyline],
    cell: [f64; 2],
    window: usize,
    max_angle_deg: f64,
) -> Vec<Cusp> {
    let mut out = Vec::new();
    for pl in polylines {
        let n = pl.points.len();
        if window == 0 || n < 2 * window + 1 {
            continue;
        }
        let p = |k: usize| [pl.points[k][0] / cell[0], pl.points[k][1] / cell[1]];
        let idx = |i: usize, off: isize| -> Option<usize> {
            let k = i as isize + off;
            if pl.closed {
                Some(k.rem_euclid(n as isize) as usize)
            } else if k >= 0 && (k as usize) < n {
                Some(k as usize)
            } else {
                None
            }
        };
        let w = window as isize;
        let mut candidates: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            let (Some(a), Some(b)) = (idx(i, -w), idx(i, w)) else { continue };
            let c = p(i);
            let (pa, pb) = (p(a), p(b));
            let u = [pa[0] - c[0], pa[1] - c[1]];
            let v = [pb[0] - c[0], pb[1] - c[1]];
            let nu = u[0].hypot(u[1]);
            let nv = v[0].hypot(v[1]);
            if nu == 0.0 || nv == 0.0 {
                continue;
            }
            let cos = ((u[0] * v[0] + u[1] * v[1]) / (nu * nv)).clamp(-1.0, 1.0);
            let angle = cos.acos().to_degrees();
            if angle >= max_angle_deg {
                continue;
            }
            let extremum = (0..2).any(|d| {
                let span: Vec<f64> = (-w..=w).filter_map(|o| idx(i, o)).map(|k| p(k)[d]).collect();
                span.iter().all(|&x| x <= c[d]) || span.iter().all(|&x| x >= c[d])
            });
            if extremum {
                candidates.push((i, angle));
            }
        }
        // keep the sharpest vertex of each run of neighbouring candidates
        let mut k = 0;
        while k < candidates.len() {
            let mut best = candidates[k];
            let mut m = k + 1;
            while m < candidates.len() && candidates[m].0 <= candidates[m - 1].0 + window {
                if candidates[m].1 < best.1 {
                    best = candidates[m];
                }
                m += 1;
            }
            let pt = pl.points[best.0];
            out.push(Cusp {
                omega: pt[0],
                amplitude: pt[1],
                level: pl.level,
                angle_deg: best.1,
            });
            k = m;
        }
    }
    out
}

/// Grid spacing `[d omega, d E]` of a sweep, used as the cell unit for cusp angles.
pub fn cell_size(grid: &SweepGrid) -> [f64; 2] {
    let d = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
    [d(&grid.omegas), d(&grid.amplitudes)]
}

/// Fraction of `targets` vertices within `radius` cells of some vertex of `near`.
pub fn fraction_near(targets: &[Polyline], near: &[Polyline], cell: [f64; 2], radius: f64) -> f64 {
    let pts: Vec<[f64; 2]> = near
        .iter()
        .flat_map(|p| p.points.iter().map(|q| [q[0] / cell[0], q[1] / cell[1]]))
        .collect();
    let mut total = 0usize;
    let mut hit = 0usize;
    for t in targets.iter().flat_map(|p| p.points.iter()) {
        total += 1;
        let q = [t[0] / cell[0], t[1] / cell[1]];
        if pts.iter().any(|p| (p[0] - q[0]).hypot(p[1] - q[1]) <= radius) {
            hit += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{CellRecord, CellStatus, SweepMeta};

    fn axis(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64).collect()
    }

    fn grid_from(values: &[f64], nx: usize, ny: usize) -> SweepGrid {
        let xs = axis(nx);
        let ys = axis(ny);
        let cells = (0..nx * ny)
            .map(|k| CellRecord {
                omega: xs[k % nx],
                amplitude: ys[k / nx],
                status: if values[k].is_nan() {
                    CellStatus::Failed("x".into())
                } else {
                    CellStatus::Ok
                },
                spike_count: Some(values[k].max(0.0) as u32),
                l2: Some(values[k]),
                est_count: None,
                region: None,
            })
            .collect();
        SweepGrid {
            omegas: xs,
            amplitudes: ys,
            cells,
            meta: SweepMeta {
                spec_hash: String::new(),
                version: String::new(),
                timestamp: 0,
            },
        }
    }

    #[test]
    fn uniform_grid_has_no_boundaries() {
        let g = grid_from(&[2.0; 16], 4, 4);
        assert!(extract_boundaries(&g).unwrap().is_empty());
        assert!(l2_levelsets(&g, 24).unwrap().is_empty());
    }

    #[test]
    fn split_grid_gives_one_vertical_line() {
        let (nx, ny) = (6, 5);
        let v: Vec<f64> = (0..nx * ny).map(|k| if k % nx < 3 { 1.0 } else { 2.0 }).collect();
        let b = extract_boundaries(&grid_from(&v, nx, ny)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(!b[0].closed);
        assert_eq!(b[0].points.len(), ny);
        assert!(b[0].points.iter().all(|p| p[0] == 2.5));
        let ys: Vec<f64> = b[0].points.iter().map(|p| p[1]).collect();
        assert!(ys.windows(2).all(|w| w[1] > w[0]) || ys.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bump_gives_closed_loop() {
        let (nx, ny) = (5, 5);
        let mut v = vec![0.0; nx * ny];
        v[2 * nx + 2] = 1.0;
        let b = extract_boundaries(&grid_from(&v, nx, ny)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].closed);
        assert_eq!(b[0].points.len(), 4);
    }

    #[test]
    fn saddle_cell_uses_center_average() {
        let xs = axis(2);
        let ys = axis(2);
        // corners (0,0) and (1,1) high
        let high_center = marching_squares(&[1.0, 0.0, 0.2, 1.0], &xs, &ys, 0.5);
        let low_center = marching_squares(&[1.0, 0.0, 0.0, 0.6], &xs, &ys, 0.5);
        assert_eq!(high_center.len(), 2);
        assert_eq!(low_center.len(), 2);
        assert_ne!(high_center, low_center);
    }

    #[test]
    fn failed_cells_leave_holes() {
        let (nx, ny) = (4, 4);
        let mut v: Vec<f64> = (0..nx * ny).map(|k| if k % nx < 2 { 1.0 } else { 2.0 }).collect();
        v[nx + 1] = f64::NAN;
        let b = extract_boundaries(&grid_from(&v, nx, ny)).unwrap();
        let n: usize = b.iter().map(|p| p.points.len()).sum();
        assert!(n < 2 * ny);
        assert!(b.iter().all(|p| p.points.iter().all(|q| q[0].is_finite() && q[1].is_finite())));
    }

    #[test]
    fn levelset_count_is_configurable() {
        let (nx, ny) = (5, 5);
        let v: Vec<f64> = (0..nx * ny).map(|k| (k % nx) as f64).collect();
        let g = grid_from(&v, nx, ny);
        assert!(l2_levelsets(&g, 0).unwrap().is_empty());
        assert_eq!(l2_levelsets(&g, 3).unwrap().len(), 3);
    }

    #[test]
    fn tongue_tip_is_a_cusp_and_straight_line_is_not() {
        let (nx, ny) = (9, 9);
        // a one-cell-wide tongue of 1s rising into a field of 2s
        let v: Vec<f64> = (0..nx * ny)
            .map(|k| {
                let (i, j) = (k / nx, k % nx);
                if i < 2 || (j == 4 && i < 7) {
                    1.0
                } else {
                    2.0
                }
            })
            .collect();
        let g = grid_from(&v, nx, ny);
        let b = extract_boundaries(&g).unwrap();
        let cusps = detect_cusps(&b, cell_size(&g), DEFAULT_CUSP_WINDOW, DEFAULT_CUSP_ANGLE_DEG);
        assert_eq!(cusps.len(), 1, "{cusps:?}");
        assert_eq!(cusps[0].omega, 4.0);
        assert_eq!(cusps[0].amplitude, 6.5);

        let split: Vec<f64> = (0..nx * ny).map(|k| if k % nx < 3 { 1.0 } else { 2.0 }).collect();
        let g = grid_from(&split, nx, ny);
        let b = extract_boundaries(&g).unwrap();
        assert!(detect_cusps(&b, cell_size(&g), 3, 60.0).is_empty());
    }

    #[test]
    fn nearness_fraction() {
        let a = vec![Polyline { level: 0.0, points: vec![[0.0, 0.0], [10.0, 0.0]], closed: false }];
        let b = vec![Polyline { level: 0.0, points: vec![[1.0, 1.0]], closed: false }];
        assert_eq!(fraction_near(&a, &b, [1.0, 1.0], 2.0), 0.5);
        assert_eq!(fraction_near(&[], &b, [1.0, 1.0], 2.0), 0.0);
    }
}
