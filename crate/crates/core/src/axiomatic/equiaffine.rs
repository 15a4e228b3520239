use crate::error::{Error, Result};
use crate::geometry::{PlanarCurve, Point};

use super::conic::fit_conic_normalized;

fn window(curve: &PlanarCurve, i: usize) -> [Point; 5] {
    let i = i as isize;
    [-2, -1, 0, 1, 2].map(|k| curve.at(i + k))
}

/// Equiaffine curvature at `x_i` from the conic through `x_{i−2} … x_{i+2}`.
///
/// Windows whose consecutive triangles change orientation straddle an
/// inflection, where the invariant is undefined; they are rejected together
/// with windows that do not determine a unique conic.
pub fn equiaffine_curvature_at(curve: &PlanarCurve, i: usize) -> Result<f64> {
    let w = window(curve, i);
    let orient = |a: &Point, b: &Point, c: &Point| (b - a).perp(&(c - a));
    let o = [orient(&w[0], &w[1], &w[2]), orient(&w[1], &w[2], &w[3]), orient(&w[2], &w[3], &w[4])];
    if !(o.iter().all(|&v| v > 0.0) || o.iter().all(|&v| v < 0.0)) {
        return Err(Error::Degenerate(format!("window at {i} is not strictly convex")));
    }
    fit_conic_normalized(&w)?.equiaffine_curvature()
}

/// Equiaffine arc-length spanned by `x_{i−1}, x_i, x_{i+1}`: `2·(2·Area)^{1/3}`.
///
/// For equal equiaffine steps `h` the triangle area is `h³/2` up to higher
/// order terms, so this recovers the chord length `2h`.
pub fn equiaffine_step(curve: &PlanarCurve, i: usize) -> Result<f64> {
    let k = i as isize;
    let (a, b, c) = (curve.at(k - 1), curve.at(k), curve.at(k + 1));
    let twice_area = (b - a).perp(&(c - a)).abs();
    let scale = (c - a).norm_squared();
    if !(twice_area > 1e-14 * scale) {
        return Err(Error::Degenerate(format!("zero-area triangle at {i}")));
    }
    Ok(2.0 * twice_area.cbrt())
}

pub(crate) fn mu_s_from_neighbors(curve: &PlanarCurve, i: usize, prev: f64, next: f64) -> Result<f64> {
    Ok((next - prev) / equiaffine_step(curve, i)?)
}

/// Central difference of the conic curvature over the equiaffine step.
pub fn equiaffine_kappa_s(curve: &PlanarCurve, i: usize) -> Result<f64> {
    let n = curve.len();
    let prev = equiaffine_curvature_at(curve, (i + n - 1) % n)?;
    let next = equiaffine_curvature_at(curve, (i + 1) % n)?;
    mu_s_from_neighbors(curve, i, prev, next)
}
