//! Scalar root finding on a bracket.

/// Newton's method safeguarded by bisection on `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them is zero).
/// Returns `None` when they do not.
pub fn newton_bisect(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= tol * (1.0 + x.abs()) || hi - lo <= tol * (1.0 + x.abs()) {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

/// Grows `[lo, hi]` geometrically until `f` changes sign, for functions that
/// tend to opposite infinities.
pub fn expand_bracket(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<(f64, f64)> {
    for _ in 0..200 {
        if f(lo).signum() != f(hi).signum() {
            return Some((lo, hi));
        }
        let w = hi - lo;
        lo -= w;
        hi += w;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let r = newton_bisect(|x| x * x * x - 2.0, |x| 3.0 * x * x, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn survives_bad_derivative() {
        let r = newton_bisect(|x| x.atan(), |_| 0.0, -1.0, 3.0, 1e-14).unwrap();
        assert!(r.abs() < 1e-13);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(newton_bisect(|x| x * x + 1.0, |x| 2.0 * x, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn bracket_expands_to_far_root() {
        let (lo, hi) = expand_bracket(|x| x - 1000.0, -1.0, 1.0).unwrap();
        assert!(lo < 1000.0 && hi > 1000.0);
    }
}
