use crate::error::{Error, Result};
use crate::geometry::{PlanarCurve, Point};

/// Signed reciprocal circumradius of three points: `4·Area / (|p1p2|·|p2p3|·|p1p3|)`,
/// positive for counter-clockwise order. Collinear points give exactly zero.
pub fn euclidean_curvature_3pt(p1: &Point, p2: &Point, p3: &Point) -> Result<f64> {
    let a = (p2 - p1).norm();
    let b = (p3 - p2).norm();
    let c = (p3 - p1).norm();
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return Err(Error::Degenerate("coincident points in curvature triple".into()));
    }
    // Twice the signed triangle area; same value Heron's formula gives for
    // the magnitude, without its cancellation on thin triangles.
    let cross = (p2 - p1).perp(&(p3 - p1));
    Ok(2.0 * cross / (a * b * c))
}

/// Curvature of the circle through `x_{i-1}, x_i, x_{i+1}`.
pub fn euclidean_curvature_at(curve: &PlanarCurve, i: usize) -> Result<f64> {
    let i = i as isize;
    euclidean_curvature_3pt(&curve.at(i - 1), &curve.at(i), &curve.at(i + 1))
}

pub(crate) fn kappa_s_from_neighbors(curve: &PlanarCurve, i: usize, prev: f64, next: f64) -> f64 {
    let k = i as isize;
    let ds = (curve.at(k + 1) - curve.at(k)).norm() + (curve.at(k) - curve.at(k - 1)).norm();
    (next - prev) / ds
}

/// `(κ̃(x_{i+1}) − κ̃(x_{i−1})) / (|x_{i+1} − x_i| + |x_i − x_{i−1}|)`.
pub fn euclidean_kappa_s(curve: &PlanarCurve, i: usize) -> Result<f64> {
    let n = curve.len();
    let prev = euclidean_curvature_at(curve, (i + n - 1) % n)?;
    let next = euclidean_curvature_at(curve, (i + 1) % n)?;
    Ok(kappa_s_from_neighbors(curve, i, prev, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::Ellipse;

    #[test]
    fn inscribed_triangle_recovers_radius() {
        let on_circle = |t: f64| Point::new(2.0 * t.cos(), 2.0 * t.sin());
        let (a, b, c) = (on_circle(0.3), on_circle(1.9), on_circle(4.0));
        assert!((euclidean_curvature_3pt(&a, &b, &c).unwrap() - 0.5).abs() < 1e-14);
        assert!((euclidean_curvature_3pt(&c, &b, &a).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn collinear_and_duplicate() {
        let p = |x: f64| Point::new(x, 0.0);
        assert_eq!(euclidean_curvature_3pt(&p(0.0), &p(1.0), &p(2.0)).unwrap(), 0.0);
        assert!(euclidean_curvature_3pt(&p(0.0), &p(0.0), &p(2.0)).is_err());
    }

    #[test]
    fn circle_has_zero_kappa_s() {
        let c = Ellipse::circle(1.7).sample_closed(90).unwrap();
        for i in 0..c.len() {
            assert!(euclidean_kappa_s(&c, i).unwrap().abs() < 1e-9);
        }
    }
}
