//! The hyperbolic plane in the hyperboloid model `x0^2 - x1^2 - x2^2 = 1, x0 > 0`.

use crate::error::{LabError, Result};
use crate::tolerance;

pub type Hyperboloid = [f64; 3];

/// Minkowski bilinear form `-x0 y0 + x1 y1 + x2 y2`.
pub fn minkowski(x: &Hyperboloid, y: &Hyperboloid) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

/// Lifts spatial coordinates onto the upper sheet.
pub fn lift(x1: f64, x2: f64) -> Hyperboloid {
    [(1.0 + x1 * x1 + x2 * x2).sqrt(), x1, x2]
}

pub fn from_polar(r: f64, theta: f64) -> Hyperboloid {
    lift(r.sinh() * theta.cos(), r.sinh() * theta.sin())
}

/// Accepts a point that satisfies the constraint up to a relative slack and
/// re-projects it exactly.
pub fn checked(x: Hyperboloid) -> Result<Hyperboloid> {
    if x.iter().any(|c| !c.is_finite()) {
        return Err(LabError::domain("hyperboloid coordinates must be finite"));
    }
    let residual = x[0] * x[0] - x[1] * x[1] - x[2] * x[2] - 1.0;
    let scale = 1.0 + x[0] * x[0];
    if x[0] <= 0.0 || residual.abs() > tolerance::HYPERBOLOID_ACCEPT * scale {
        return Err(LabError::domain(format!(
            "({}, {}, {}) is not on the upper sheet of the hyperboloid",
            x[0], x[1], x[2]
        )));
    }
    Ok(lift(x[1], x[2]))
}

/// `arccosh(max(1, -<x,y>))`, switched to the chord form near the diagonal
/// where arccosh loses all precision.
pub fn distance(x: &Hyperboloid, y: &Hyperboloid) -> f64 {
    let c = -minkowski(x, y);
    if c < 2.0 {
        let d0 = x[0] - y[0];
        let d1 = x[1] - y[1];
        let d2 = x[2] - y[2];
        let chord2 = (d1 * d1 + d2 * d2 - d0 * d0).max(0.0);
        2.0 * (0.5 * chord2.sqrt()).asinh()
    } else {
        c.max(1.0).acosh()
    }
}

pub fn geodesic(x: &Hyperboloid, y: &Hyperboloid, t: f64) -> Hyperboloid {
    let d = distance(x, y);
    if d < 1e-12 {
        return lift(x[1] + t * (y[1] - x[1]), x[2] + t * (y[2] - x[2]));
    }
    let s = d.sinh();
    let a = ((1.0 - t) * d).sinh() / s;
    let b = (t * d).sinh() / s;
    lift(a * x[1] + b * y[1], a * x[2] + b * y[2])
}

/// Unit tangent at `x` pointing toward `y` (zero when they coincide).
pub fn unit_tangent(x: &Hyperboloid, y: &Hyperboloid) -> Hyperboloid {
    let c = minkowski(x, y);
    let v = [y[0] + c * x[0], y[1] + c * x[1], y[2] + c * x[2]];
    let n = minkowski(&v, &v).max(0.0).sqrt();
    if n < 1e-300 {
        [0.0; 3]
    } else {
        [v[0] / n, v[1] / n, v[2] / n]
    }
}

/// Closest point to `p` on the geodesic segment `[a, b]`.
pub fn project_to_segment(p: &Hyperboloid, a: &Hyperboloid, b: &Hyperboloid) -> Hyperboloid {
    let len = distance(a, b);
    if len < 1e-15 {
        return *a;
    }
    let u = unit_tangent(a, b);
    // cosh d(p, c(s)) = A cosh s + B sinh s along c(s) = cosh s a + sinh s u
    let big_a = -minkowski(p, a);
    let big_b = -minkowski(p, &u);
    let s = (-big_b / big_a).clamp(-1.0, 1.0).atanh().clamp(0.0, len);
    let (ch, sh) = (s.cosh(), s.sinh());
    lift(ch * a[1] + sh * u[1], ch * a[2] + sh * u[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_distance_example() {
        let o = [1.0, 0.0, 0.0];
        let p = [1f64.cosh(), 1f64.sinh(), 0.0];
        assert!((distance(&o, &p) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chord_and_arccosh_agree_at_switch() {
        let o = lift(0.0, 0.0);
        for r in [0.5, 1.0, 1.3169, 1.317, 2.0] {
            let p = from_polar(r, 0.3);
            assert!((distance(&o, &p) - r).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn tiny_distances_are_resolved() {
        let o = lift(0.3, -0.2);
        let p = geodesic(&o, &from_polar(1.0, 1.0), 1e-9 / distance(&o, &from_polar(1.0, 1.0)));
        assert!((distance(&o, &p) - 1e-9).abs() < 1e-15);
    }

    #[test]
    fn checked_rejects_lower_sheet() {
        assert!(checked([-1.0, 0.0, 0.0]).is_err());
        assert!(checked([2.0, 0.0, 0.0]).is_err());
        let q = checked([1f64.cosh(), 1f64.sinh() + 1e-10, 0.0]).unwrap();
        assert!((q[0] * q[0] - q[1] * q[1] - q[2] * q[2] - 1.0).abs() < tolerance::HYPERBOLOID_CONSTRAINT);
    }

    #[test]
    fn segment_projection_is_closest() {
        let a = from_polar(0.5, 0.0);
        let b = from_polar(1.5, 2.0);
        let p = from_polar(2.0, -1.0);
        let proj = project_to_segment(&p, &a, &b);
        let best = distance(&p, &proj);
        for i in 0..=1000 {
            let q = geodesic(&a, &b, i as f64 / 1000.0);
            assert!(best <= distance(&p, &q) + 1e-12);
        }
    }
}
