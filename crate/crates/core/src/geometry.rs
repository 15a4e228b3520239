//! Discrete closed planar curves and the group actions used on them.
//!
//! Everything here is a pure function of its inputs; randomness is always
//! passed in explicitly so callers control reproducibility.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Point2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

pub type Point = Point2<f64>;

/// Smallest admissible curve: a 5-point conic window plus one neighbour on
/// each side for the finite-difference derivative.
pub const MIN_CURVE_POINTS: usize = 7;

const MIN_SEGMENT_LENGTH: f64 = 1e-12;
const MIN_ABS_DET: f64 = 1e-12;

/// Closed discrete planar curve with cyclic indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCurve {
    points: Vec<Point>,
}

impl PlanarCurve {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < MIN_CURVE_POINTS {
            return Err(Error::InvalidCurve(format!(
                "{} points, at least {MIN_CURVE_POINTS} required",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidCurve(format!("non-finite coordinate at point {i}")));
        }
        let n = points.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if (points[j] - points[i]).norm() <= MIN_SEGMENT_LENGTH {
                return Err(Error::InvalidCurve(format!(
                    "consecutive points {i} and {j} coincide"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn from_xy(coords: &[[f64; 2]]) -> Result<Self> {
        Self::new(coords.iter().map(|&[x, y]| Point::new(x, y)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Always true; open curves are not supported.
    pub fn is_closed(&self) -> bool {
        true
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Point at a cyclic (possibly negative) index.
    pub fn at(&self, index: isize) -> Point {
        self.points[wrap(index, self.points.len())]
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    /// Rotates the starting point so that `start` becomes index 0.
    pub fn rotated_start(&self, start: usize) -> Self {
        let mut points = self.points.clone();
        points.rotate_left(start % self.points.len());
        Self { points }
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    pub fn centroid(&self) -> Point {
        let sum = self
            .points
            .iter()
            .fold(Vector2::zeros(), |acc, p| acc + p.coords);
        Point::from(sum / self.points.len() as f64)
    }

    /// Signed shoelace area; positive for counter-clockwise traversal.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        0.5 * (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    pub fn neighborhood(&self, index: usize, half_width: usize) -> Result<NeighborhoodSample> {
        extract_neighborhood(&self.points, index, half_width)
    }
}

pub(crate) fn wrap(index: isize, len: usize) -> usize {
    index.rem_euclid(len as isize) as usize
}

/// Linear map plus translation, with cached determinant and condition number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    linear: Matrix2<f64>,
    translation: Vector2<f64>,
    det: f64,
    cond: f64,
}

impl AffineMap {
    pub fn new(linear: Matrix2<f64>, translation: Vector2<f64>) -> Result<Self> {
        let det = linear.determinant();
        if !det.is_finite() || det.abs() < MIN_ABS_DET {
            return Err(Error::SingularMap { det });
        }
        let (s1, s2) = singular_values_2x2(&linear);
        Ok(Self {
            linear,
            translation,
            det,
            cond: s1 / s2,
        })
    }

    pub fn identity() -> Self {
        Self {
            linear: Matrix2::identity(),
            translation: Vector2::zeros(),
            det: 1.0,
            cond: 1.0,
        }
    }

    pub fn linear(&self) -> &Matrix2<f64> {
        &self.linear
    }

    pub fn translation(&self) -> &Vector2<f64> {
        &self.translation
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn cond(&self) -> f64 {
        self.cond
    }

    pub fn singular_values(&self) -> (f64, f64) {
        singular_values_2x2(&self.linear)
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::from(self.linear * p.coords + self.translation)
    }

    pub fn inverse(&self) -> Self {
        let inv = self
            .linear
            .try_inverse()
            .expect("constructor guarantees an invertible linear part");
        let translation = -(inv * self.translation);
        Self::new(inv, translation).expect("inverse of an invertible map is invertible")
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &AffineMap) -> Result<Self> {
        Self::new(
            self.linear * other.linear,
            self.linear * other.translation + self.translation,
        )
    }
}

/// Singular values `(σ1, σ2)` with `σ1 ≥ σ2 ≥ 0`, closed form.
fn singular_values_2x2(m: &Matrix2<f64>) -> (f64, f64) {
    let frob2 = m.norm_squared();
    let det = m.determinant().abs();
    let disc = (frob2 * frob2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = (0.5 * (frob2 + disc)).sqrt();
    // σ2 from the determinant avoids cancellation when the map is near-isotropic.
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    (s1, s2)
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

pub fn apply_affine(curve: &PlanarCurve, map: &AffineMap) -> Result<PlanarCurve> {
    if map.det().abs() < MIN_ABS_DET {
        return Err(Error::SingularMap { det: map.det() });
    }
    PlanarCurve::new(curve.points.iter().map(|p| map.apply(p)).collect())
}

/// Draws `R(θ1)·diag(σ1, σ2)·R(θ2) + t` with `σ1σ2 = det` and `σ1/σ2 = cond`.
/// Translation is uniform in `[-1, 1]²`.
pub fn random_affine<R: Rng + ?Sized>(det: f64, cond: f64, rng: &mut R) -> Result<AffineMap> {
    random_affine_in_box(det, cond, 1.0, rng)
}

pub fn random_affine_in_box<R: Rng + ?Sized>(
    det: f64,
    cond: f64,
    translation_half_extent: f64,
    rng: &mut R,
) -> Result<AffineMap> {
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::InvalidArgument(format!("det must be positive, got {det}")));
    }
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::InvalidArgument(format!("cond must be >= 1, got {cond}")));
    }
    if !(translation_half_extent >= 0.0) {
        return Err(Error::InvalidArgument(
            "translation box half-extent must be non-negative".into(),
        ));
    }
    let s1 = (det * cond).sqrt();
    let s2 = (det / cond).sqrt();
    let theta1 = rng.random_range(0.0..TAU);
    let theta2 = rng.random_range(0.0..TAU);
    let linear = rotation(theta1) * Matrix2::new(s1, 0.0, 0.0, s2) * rotation(theta2);
    let translation = if translation_half_extent > 0.0 {
        Vector2::new(
            rng.random_range(-translation_half_extent..=translation_half_extent),
            rng.random_range(-translation_half_extent..=translation_half_extent),
        )
    } else {
        Vector2::zeros()
    };
    AffineMap::new(linear, translation)
}

/// Strictly positive per-point sampling weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPmf {
    weights: Vec<f64>,
}

impl SamplingPmf {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes arbitrary positive weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(
                "weights must be finite and positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Symmetric Dirichlet draw with the given concentration. An infinite
/// concentration yields the uniform pmf.
pub fn random_pmf<R: Rng + ?Sized>(n: usize, concentration: f64, rng: &mut R) -> Result<SamplingPmf> {
    if n < MIN_CURVE_POINTS {
        return Err(Error::InvalidArgument(format!(
            "pmf needs at least {MIN_CURVE_POINTS} points, got {n}"
        )));
    }
    if !(concentration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    if concentration.is_infinite() {
        return Ok(SamplingPmf::uniform(n));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("gamma({concentration}): {e}")))?;
    let weights = (0..n)
        .map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE))
        .collect();
    SamplingPmf::from_weights(weights)
}

/// Number of survivors when keeping `ratio` of `n` points.
pub fn downsample_count(n: usize, ratio: f64) -> usize {
    // The small slack keeps e.g. 0.7 * 10 from rounding up to 8.
    ((ratio * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Weighted sampling without replacement (Efraimidis–Spirakis keys), returned
/// as ascending original indices. `forced` is always included.
pub fn downsample_indices<R: Rng + ?Sized>(
    pmf: &SamplingPmf,
    count: usize,
    forced: Option<usize>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = pmf.len();
    if count > n {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {count} of {n} points"
        )));
    }
    if let Some(f) = forced {
        if f >= n {
            return Err(Error::InvalidArgument(format!("forced index {f} out of range")));
        }
    }
    if count == n {
        return Ok((0..n).collect());
    }
    // log(u)/w is a monotone transform of u^(1/w); the largest keys win.
    let mut keyed: Vec<(f64, usize)> = pmf
        .weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let key = if Some(i) == forced {
                f64::INFINITY
            } else {
                u.ln() / w
            };
            (key, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut kept: Vec<usize> = keyed[..count].iter().map(|&(_, i)| i).collect();
    kept.sort_unstable();
    Ok(kept)
}

/// Keeps `ceil(ratio·n)` points drawn without replacement according to `pmf`,
/// in their original cyclic order.
pub fn downsample<R: Rng + ?Sized>(
    curve: &PlanarCurve,
    pmf: &SamplingPmf,
    ratio: f64,
    rng: &mut R,
) -> Result<PlanarCurve> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("ratio must lie in (0, 1], got {ratio}")));
    }
    if pmf.len() != curve.len() {
        return Err(Error::InvalidArgument(format!(
            "pmf has {} weights for a {}-point curve",
            pmf.len(),
            curve.len()
        )));
    }
    let count = downsample_count(curve.len(), ratio);
    if count < MIN_CURVE_POINTS {
        return Err(Error::InvalidCurve(format!(
            "downsampling to {count} points leaves fewer than {MIN_CURVE_POINTS}"
        )));
    }
    let kept = downsample_indices(pmf, count, None, rng)?;
    PlanarCurve::new(kept.into_iter().map(|i| curve.points[i]).collect())
}

/// Fixed-size window of `2N + 1` consecutive curve points centred on a point.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSample {
    points: Vec<Point>,
}

impl NeighborhoodSample {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "neighborhood must have odd length, got {}",
                points.len()
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn half_width(&self) -> usize {
        self.points.len() / 2
    }

    pub fn center_index(&self) -> usize {
        self.half_width()
    }

    pub fn center(&self) -> Point {
        self.points[self.center_index()]
    }

    pub fn transformed(&self, map: &AffineMap) -> Self {
        Self {
            points: self.points.iter().map(|p| map.apply(p)).collect(),
        }
    }

    /// Translates the first point to the origin and rotates the
    /// first-to-middle vector onto the positive x-axis.
    pub fn canonicalize(&self) -> Result<Self> {
        let origin = self.points[0];
        let v = self.center() - origin;
        let len = v.norm();
        if len < MIN_SEGMENT_LENGTH {
            return Err(Error::Degenerate(
                "first and middle neighborhood points coincide".into(),
            ));
        }
        let (c, s) = (v.x / len, v.y / len);
        let points = self
            .points
            .iter()
            .map(|p| {
                let d = p - origin;
                Point::new(c * d.x + s * d.y, -s * d.x + c * d.y)
            })
            .collect();
        Ok(Self { points })
    }

    /// Interleaved `[x0, y0, x1, y1, ...]`.
    pub fn flatten_into(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), 2 * self.points.len());
        for (chunk, p) in out.chunks_exact_mut(2).zip(&self.points) {
            chunk[0] = p.x;
            chunk[1] = p.y;
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.points.len()];
        self.flatten_into(&mut out);
        out
    }
}

/// Points at cyclic indices `index - N ..= index + N`.
pub fn extract_neighborhood(
    points: &[Point],
    index: usize,
    half_width: usize,
) -> Result<NeighborhoodSample> {
    let n = points.len();
    let width = 2 * half_width + 1;
    if n < width {
        return Err(Error::InvalidArgument(format!(
            "curve of {n} points too small for a {width}-point neighborhood"
        )));
    }
    if index >= n {
        return Err(Error::InvalidArgument(format!("index {index} out of range for {n} points")));
    }
    let start = index as isize - half_width as isize;
    Ok(NeighborhoodSample {
        points: (0..width as isize)
            .map(|k| points[wrap(start + k, n)])
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circle(n: usize, r: f64) -> PlanarCurve {
        PlanarCurve::new(
            (0..n)
                .map(|i| {
                    let t = TAU * i as f64 / n as f64;
                    Point::new(r * t.cos(), r * t.sin())
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn curve_invariants_enforced() {
        assert!(PlanarCurve::from_xy(&[[0.0, 0.0]; 6]).is_err());
        let mut pts: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, (i * i) as f64]).collect();
        pts[4] = pts[3];
        let err = PlanarCurve::from_xy(&pts).unwrap_err();
        assert!(err.to_string().contains("3 and 4"));
        pts[4] = [f64::NAN, 0.0];
        assert!(PlanarCurve::from_xy(&pts).is_err());
    }

    #[test]
    fn identity_map_is_noop() {
        let c = circle(64, 1.5);
        assert_eq!(apply_affine(&c, &AffineMap::identity()).unwrap(), c);
    }

    #[test]
    fn diagonal_scaling_on_square() {
        let map = AffineMap::new(Matrix2::new(2.0, 0.0, 0.0, 1.0), Vector2::zeros()).unwrap();
        let corners = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
        for [x, y] in corners {
            let q = map.apply(&Point::new(x, y));
            assert_eq!((q.x, q.y), (2.0 * x, y));
        }
        assert_relative_eq!(map.det(), 2.0);
        assert_relative_eq!(map.cond(), 2.0);
    }

    #[test]
    fn singular_map_rejected() {
        let err = AffineMap::new(Matrix2::new(1.0, 2.0, 2.0, 4.0), Vector2::zeros()).unwrap_err();
        assert!(matches!(err, Error::SingularMap { .. }));
    }

    #[test]
    fn circle_maps_to_ellipse_with_singular_value_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let map = random_affine(2.0, 2.0, &mut rng).unwrap();
        let (s1, s2) = map.singular_values();
        assert_relative_eq!(s1, 2.0, epsilon = 1e-12);
        assert_relative_eq!(s2, 1.0, epsilon = 1e-12);
        let image = apply_affine(&circle(256, 1.0), &map).unwrap();
        // Image points satisfy |A^{-1}(q - t)| = 1, i.e. lie on the ellipse
        // with semi-axes (s1, s2) rotated by the left singular frame.
        let inv = map.inverse();
        for q in image.points() {
            assert_relative_eq!(inv.apply(q).coords.norm(), 1.0, epsilon = 1e-12);
        }
        // Extremal radii about the centre recover the semi-axes.
        let c = Point::from(*map.translation());
        let radii: Vec<f64> = image.points().iter().map(|q| (q - c).norm()).collect();
        let max = radii.iter().cloned().fold(f64::MIN, f64::max);
        let min = radii.iter().cloned().fold(f64::MAX, f64::min);
        assert_relative_eq!(max, 2.0, epsilon = 1e-3);
        assert_relative_eq!(min, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn random_affine_hits_requested_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_affine(1.0, 1.0, &mut rng).unwrap();
        let rt = m.linear().transpose() * m.linear();
        assert_relative_eq!(rt, Matrix2::identity(), epsilon = 1e-12);

        let m = random_affine(3.0, 2.0, &mut rng).unwrap();
        let (s1, s2) = m.singular_values();
        assert_relative_eq!(s1, 6f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s2, 1.5f64.sqrt(), epsilon = 1e-12);

        assert!(random_affine(0.0, 1.0, &mut rng).is_err());
        assert!(random_affine(-1.0, 1.0, &mut rng).is_err());
        assert!(random_affine(1.0, 0.5, &mut rng).is_err());
    }

    #[test]
    fn random_affine_exact_over_many_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..10_000 {
            let det = 0.1 + (k % 37) as f64 * 0.2;
            let cond = 1.0 + (k % 13) as f64 * 0.5;
            let m = random_affine(det, cond, &mut rng).unwrap();
            assert!((m.linear().determinant() - det).abs() < 1e-9);
            assert!((m.cond() - cond).abs() < 1e-9);
            assert!((m.det() - m.linear().determinant()).abs() <= 1e-12);
        }
    }

    #[test]
    fn affine_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let c = circle(100, 0.7);
        let m = random_affine(2.5, 3.0, &mut rng).unwrap();
        let back = apply_affine(&apply_affine(&c, &m).unwrap(), &m.inverse()).unwrap();
        for (a, b) in c.points().iter().zip(back.points()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn pmf_validity_and_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pmf = random_pmf(7, 1.0, &mut rng).unwrap();
        assert!(pmf.weights().iter().all(|&w| w > 0.0));
        assert!((pmf.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let uniform = random_pmf(10, f64::INFINITY, &mut rng).unwrap();
        assert!(uniform.weights().iter().all(|&w| w == 0.1));
        assert!(random_pmf(6, 1.0, &mut rng).is_err());
        assert!(random_pmf(10, 0.0, &mut rng).is_err());
    }

    #[test]
    fn pmf_is_non_uniform_at_unit_concentration() {
        // Monte Carlo: the max/min ratio of 1000 Exp(1) draws is essentially
        // always in the thousands, far above 2.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 200;
        let hits = (0..trials)
            .filter(|_| {
                let pmf = random_pmf(1000, 1.0, &mut rng).unwrap();
                let w = pmf.weights();
                let max = w.iter().cloned().fold(f64::MIN, f64::max);
                let min = w.iter().cloned().fold(f64::MAX, f64::min);
                max / min > 2.0
            })
            .count();
        assert!(hits as f64 / trials as f64 > 0.99);
    }

    #[test]
    fn pmf_approaches_uniform_with_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spread = |conc: f64, rng: &mut ChaCha8Rng| {
            let w = random_pmf(500, conc, rng).unwrap();
            let max = w.weights().iter().cloned().fold(f64::MIN, f64::max);
            max * 500.0 - 1.0
        };
        let coarse = spread(1.0, &mut rng);
        let fine = spread(1e6, &mut rng);
        assert!(fine < 0.01 && coarse > 1.0, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn downsample_full_ratio_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = circle(50, 1.0);
        let pmf = random_pmf(50, 1.0, &mut rng).unwrap();
        assert_eq!(downsample(&c, &pmf, 1.0, &mut rng).unwrap(), c);
    }

    #[test]
    fn downsample_half_keeps_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pmf = random_pmf(1000, 1.0, &mut rng).unwrap();
        let kept = downsample_indices(&pmf, downsample_count(1000, 0.5), None, &mut rng).unwrap();
        assert_eq!(kept.len(), 500);
        assert!(kept.windows(2).all(|w| w[0] < w[1]));

        let c = circle(1000, 1.0);
        let d = downsample(&c, &pmf, 0.5, &mut rng).unwrap();
        assert_eq!(d.len(), 500);
        let too_small = circle(12, 1.0);
        assert!(downsample(&too_small, &SamplingPmf::uniform(12), 0.5, &mut rng).is_err());
    }

    #[test]
    fn downsample_count_rounding() {
        assert_eq!(downsample_count(10, 0.7), 7);
        assert_eq!(downsample_count(1000, 0.5), 500);
        assert_eq!(downsample_count(7, 0.9), 7);
        assert_eq!(downsample_count(256, 0.6), 154);
    }

    #[test]
    fn downsample_follows_concentrated_pmf() {
        // The first half carries 99% of the mass; keeping 500 of 1000 points
        // then draws from the second half only once the first is nearly
        // exhausted. Oracle: fraction of trials with >= 90% first-half survivors.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut weights = vec![0.99 / 500.0; 500];
        weights.extend(vec![0.01 / 500.0; 500]);
        let pmf = SamplingPmf::from_weights(weights).unwrap();
        let trials = 300;
        let ok = (0..trials)
            .filter(|_| {
                let kept = downsample_indices(&pmf, 500, None, &mut rng).unwrap();
                kept.iter().filter(|&&i| i < 500).count() >= 450
            })
            .count();
        assert!(ok as f64 / trials as f64 > 0.99);
    }

    #[test]
    fn forced_index_survives() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pmf = SamplingPmf::uniform(100);
        for f in [0, 37, 99] {
            for _ in 0..50 {
                let kept = downsample_indices(&pmf, 50, Some(f), &mut rng).unwrap();
                assert!(kept.binary_search(&f).is_ok());
            }
        }
    }

    #[test]
    fn neighborhood_wraps() {
        let pts: Vec<Point> = (0..3).map(|i| Point::new(i as f64, 0.0)).collect();
        let nb = extract_neighborhood(&pts, 0, 1).unwrap();
        assert_eq!(nb.points(), &[pts[2], pts[0], pts[1]]);

        let c = circle(100, 1.0);
        let nb = c.neighborhood(50, 3).unwrap();
        assert_eq!(nb.points(), &c.points()[47..=53]);
        assert!(c.neighborhood(0, 50).is_err());
    }

    #[test]
    fn canonical_placement() {
        let c = circle(40, 2.0);
        let nb = c.neighborhood(5, 4).unwrap().canonicalize().unwrap();
        assert_eq!(nb.points()[0], Point::origin());
        let mid = nb.center();
        assert!(mid.y.abs() < 1e-9 && mid.x > 0.0);
        let again = nb.canonicalize().unwrap();
        for (a, b) in nb.points().iter().zip(again.points()) {
            assert!((a - b).norm() < 1e-12);
        }

        let degenerate = NeighborhoodSample::new(vec![Point::origin(); 3]).unwrap();
        assert!(matches!(degenerate.canonicalize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn signed_area_orientation() {
        let c = circle(256, 1.0);
        assert!(c.signed_area() > 0.0);
        assert!(c.reversed().signed_area() < 0.0);
    }
}
