//! Minimal static SVG plots.

use std::fmt::Write;

use fhnburst::sweep::contour::{Cusp, Polyline};
use fhnburst::sweep::SweepGrid;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn header(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for (v, anchor, x) in [(self.x.0, "start", l), (self.x.1, "end", r)] {
            let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#, b + 16.0, fmt_tick(v));
        }
        for (v, y) in [(self.y.0, b), (self.y.1, t + 10.0)] {
            let _ = writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, l - 4.0, fmt_tick(v));
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
            W / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
            H / 2.0,
            H / 2.0
        );
    }

    fn path(&self, pts: impl IntoIterator<Item = [f64; 2]>) -> String {
        let mut d = String::new();
        for (i, [x, y]) in pts.into_iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, self.px(x), self.py(y));
        }
        d
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// `x` against the wrapped forcing phase; the path breaks where the phase wraps.
pub fn trajectory(theta: &[f64], x: &[f64]) -> String {
    let frame = Frame::new((0.0, std::f64::consts::TAU), bounds(x.iter().copied()));
    let mut out = String::new();
    frame.header(&mut out, "theta", "x");
    let mut segment: Vec<[f64; 2]> = Vec::new();
    let flush = |seg: &mut Vec<[f64; 2]>, out: &mut String| {
        if seg.len() > 1 {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="1"/>"#,
                frame.path(seg.iter().copied())
            );
        }
        seg.clear();
    };
    for (&t, &v) in theta.iter().zip(x) {
        if segment.last().is_some_and(|p| t < p[0]) {
            flush(&mut segment, &mut out);
        }
        segment.push([t, v]);
    }
    flush(&mut segment, &mut out);
    out.push_str("</svg>\n");
    out
}

/// Spike-count map of a sweep with boundaries, level sets and cusps on top.
pub fn diagram(grid: &SweepGrid, boundaries: &[Polyline], levelsets: &[Polyline], cusps: &[Cusp]) -> String {
    let xs = &grid.omegas;
    let ys = &grid.amplitudes;
    let half = |v: &[f64], i: usize| {
        if v.len() < 2 {
            0.5
        } else if i + 1 < v.len() {
            0.5 * (v[i + 1] - v[i])
        } else {
            0.5 * (v[i] - v[i - 1])
        }
    };
    let frame = Frame::new(
        (xs[0] - half(xs, 0), xs[xs.len() - 1] + half(xs, xs.len() - 1)),
        (ys[0] - half(ys, 0), ys[ys.len() - 1] + half(ys, ys.len() - 1)),
    );
    let max_count = grid.cells.iter().filter_map(|c| c.spike_count).max().unwrap_or(0).max(1);
    let mut out = String::new();
    frame.header(&mut out, "omega", "E");
    for (i, &e) in ys.iter().enumerate() {
        for (j, &w) in xs.iter().enumerate() {
            let fill = match grid.cell(i, j).spike_count {
                Some(n) => {
                    let g = 235 - (n as f64 / max_count as f64 * 175.0) as u32;
                    format!("rgb({g},{g},{})", 255.min(g + 20))
                }
                None => "rgb(255,200,200)".to_string(),
            };
            let (x0, x1) = (frame.px(w - half(xs, j)), frame.px(w + half(xs, j)));
            let (y0, y1) = (frame.py(e + half(ys, i)), frame.py(e - half(ys, i)));
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                x1 - x0,
                y1 - y0
            );
        }
    }
    for (lines, stroke, width) in [(levelsets, "gray", 0.6), (boundaries, "black", 1.5)] {
        for p in lines {
            let mut d = frame.path(p.points.iter().copied());
            if p.closed {
                d.push('Z');
            }
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#);
        }
    }
    for c in cusps {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="none" stroke="red" stroke-width="2"/>"#,
            frame.px(c.omega),
            frame.py(c.amplitude)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_breaks_at_phase_wrap() {
        let svg = trajectory(&[5.0, 6.0, 0.1, 1.0], &[-2.0, 1.0, -1.0, 0.0]);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn frame_maps_corners() {
        let f = Frame::new((0.0, 1.0), (2.0, 2.0));
        assert_eq!(f.px(0.0), MARGIN);
        assert_eq!(f.px(1.0), W - MARGIN);
        assert_eq!(f.py(1.5), H - MARGIN);
        assert_eq!(fmt_tick(0.5000), "0.5");
    }
}
