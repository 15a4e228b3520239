//! Five-point conic interpolation and the constant equiaffine curvature of a conic.

use nalgebra::{Matrix2, Matrix3, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Ratio of the second-smallest to the largest singular value of the design
/// matrix below which the null space is treated as more than one-dimensional.
const RANK_TOLERANCE: f64 = 1e-12;
const MIN_ABS_DET_Q: f64 = 1e-20;

/// `a x² + b xy + c y² + d x + e y + f = 0`, unit Euclidean norm, sign fixed
/// so the largest-magnitude coefficient is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl ConicCoefficients {
    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate("zero conic coefficient vector".into()));
        }
        let pivot = v
            .iter()
            .copied()
            .max_by(|x, y| x.abs().total_cmp(&y.abs()))
            .unwrap_or(1.0);
        let s = pivot.signum() / norm;
        let [a, b, c, d, e, f] = v.map(|x| x * s);
        Ok(Self { a, b, c, d, e, f })
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn evaluate(&self, p: &Point) -> f64 {
        let (x, y) = (p.x, p.y);
        self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.f
    }

    /// Symmetric 3×3 matrix `Q` with `[x y 1] Q [x y 1]ᵀ` equal to the conic.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.a,
            0.5 * self.b,
            0.5 * self.d,
            0.5 * self.b,
            self.c,
            0.5 * self.e,
            0.5 * self.d,
            0.5 * self.e,
            self.f,
        )
    }

    /// The 2×2 quadratic part.
    pub fn quadratic_part(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, 0.5 * self.b, 0.5 * self.b, self.c)
    }

    fn from_matrix(q: &Matrix3<f64>) -> Result<Self> {
        Self::from_array([
            q[(0, 0)],
            q[(0, 1)] + q[(1, 0)],
            q[(1, 1)],
            q[(0, 2)] + q[(2, 0)],
            q[(1, 2)] + q[(2, 1)],
            q[(2, 2)],
        ])
    }
}

/// A conic fitted in a window-normalized frame `u = (p − center) / scale`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NormalizedConic {
    pub conic: ConicCoefficients,
    pub center: Point,
    pub scale: f64,
}

impl NormalizedConic {
    /// Maps the conic back to the original coordinates.
    pub fn to_original(&self) -> Result<ConicCoefficients> {
        let s = 1.0 / self.scale;
        // [u; 1] = T [x; 1]
        let t = Matrix3::new(
            s,
            0.0,
            -self.center.x * s,
            0.0,
            s,
            -self.center.y * s,
            0.0,
            0.0,
            1.0,
        );
        ConicCoefficients::from_matrix(&(t.transpose() * self.conic.matrix() * t))
    }

    /// Equiaffine curvature in original coordinates. Uniform scaling by `1/s`
    /// multiplies the equiaffine curvature by `s^{4/3}`, which is undone here.
    pub fn equiaffine_curvature(&self) -> Result<f64> {
        Ok(equiaffine_curvature_conic(&self.conic)? * self.scale.powf(-4.0 / 3.0))
    }
}

pub(crate) fn fit_conic_normalized(points: &[Point; 5]) -> Result<NormalizedConic> {
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in &points[1..] {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let center = Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
    let scale = 0.5 * (hi.x - lo.x).max(hi.y - lo.y);
    if !(scale > 0.0) {
        return Err(Error::Degenerate("conic window has zero extent".into()));
    }

    // Padding with a zero row gives a square system whose full SVD exposes all
    // six right singular vectors.
    let mut design = SMatrix::<f64, 6, 6>::zeros();
    for (row, p) in points.iter().enumerate() {
        let (x, y) = ((p.x - center.x) / scale, (p.y - center.y) / scale);
        design.set_row(row, &nalgebra::RowSVector::<f64, 6>::from([x * x, x * y, y * y, x, y, 1.0]));
    }
    let svd = design.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numeric("SVD did not produce V".into()))?;
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[5]];
    let second_smallest = svd.singular_values[order[1]];
    if !(second_smallest > RANK_TOLERANCE * largest) {
        return Err(Error::Degenerate(
            "five points do not determine a unique conic".into(),
        ));
    }
    let null: SVector<f64, 6> = v_t.row(order[0]).transpose();
    let conic = ConicCoefficients::from_array([null[0], null[1], null[2], null[3], null[4], null[5]])?;
    Ok(NormalizedConic {
        conic,
        center,
        scale,
    })
}

/// Interpolating conic through five points (null vector of the 5×6 design
/// matrix, computed on window-normalized coordinates).
pub fn fit_conic(points: &[Point; 5]) -> Result<ConicCoefficients> {
    fit_conic_normalized(points)?.to_original()
}

/// Constant equiaffine curvature of a conic, `sign(det A)·|det A| / |det Q|^{2/3}`.
/// Ellipses with semi-axes `α, β` give `(αβ)^{-2/3}`, parabolas zero and
/// hyperbolas negative values.
pub fn equiaffine_curvature_conic(conic: &ConicCoefficients) -> Result<f64> {
    let det_q = conic.matrix().determinant();
    if !(det_q.abs() > MIN_ABS_DET_Q) {
        return Err(Error::Degenerate(format!(
            "degenerate conic (det Q = {det_q:e})"
        )));
    }
    let det_a = conic.quadratic_part().determinant();
    Ok(det_a / det_q.abs().powf(2.0 / 3.0))
}
