//! Synthetic curve generation, benchmark collections and the JSON curve format.
//!
//! Curve files look like
//!
//! ```json
//! {"version": 1, "split": "train", "curves": [{"points": [[x, y], ...]}, ...]}
//! ```
//!
//! and collection files like
//!
//! ```json
//! {"version": 1, "collections": [{"name": "c00", "curves": [{"points": ...}]}]}
//! ```
//!
//! `split` is optional on load and defaults to `train`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::Path;

use nalgebra::Vector2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation, PlanarCurve, Point, MIN_CURVE_POINTS};
use crate::smooth::{unit_circle_derivative, SmoothCurve};

pub const FORMAT_VERSION: u32 = 1;
const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Validation,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveDataset {
    curves: Vec<PlanarCurve>,
    split: Split,
}

impl CurveDataset {
    pub fn new(curves: Vec<PlanarCurve>, split: Split) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidArgument("dataset has no curves".into()));
        }
        Ok(Self { curves, split })
    }

    pub fn curves(&self) -> &[PlanarCurve] {
        &self.curves
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

/// Members are the same conceptual shape under different deformations and poses.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveCollection {
    name: String,
    members: Vec<PlanarCurve>,
}

impl CurveCollection {
    pub fn new(name: impl Into<String>, members: Vec<PlanarCurve>) -> Result<Self> {
        let name = name.into();
        if members.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "collection {name:?} needs at least 2 members, got {}",
                members.len()
            )));
        }
        Ok(Self { name, members })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn members(&self) -> &[PlanarCurve] {
        &self.members
    }
}

/// Star-shaped curve `r(θ)(cos θ, sin θ)` with a truncated Fourier radius.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    pub scale: f64,
    /// `(a_k, b_k)` for `k = 1..`.
    pub coefficients: Vec<(f64, f64)>,
}

impl FourierCurve {
    pub fn circle(radius: f64) -> Self {
        Self {
            scale: radius,
            coefficients: Vec::new(),
        }
    }

    pub fn random<R: Rng + ?Sized>(harmonics: usize, decay: f64, scale: f64, rng: &mut R) -> Self {
        let coefficients = (1..=harmonics)
            .map(|k| {
                let bound = 0.5 * decay.powi(k as i32);
                (
                    rng.random_range(-bound..=bound),
                    rng.random_range(-bound..=bound),
                )
            })
            .collect();
        Self {
            scale,
            coefficients,
        }
    }

    /// `order`-th derivative of the radius function.
    pub fn radius_derivative(&self, theta: f64, order: usize) -> f64 {
        let base = if order == 0 { 1.0 } else { 0.0 };
        let shift = order as f64 * FRAC_PI_2;
        let sum: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let k = (i + 1) as f64;
                let arg = k * theta + shift;
                k.powi(order as i32) * (a * arg.cos() + b * arg.sin())
            })
            .sum();
        self.scale * (base + sum)
    }

    pub fn sample_closed(&self, samples: usize) -> Result<PlanarCurve> {
        self.sample(samples, 0.0, TAU)
    }
}

impl SmoothCurve for FourierCurve {
    fn derivative(&self, t: f64, order: usize) -> Vector2<f64> {
        // Leibniz rule on r(θ)·e(θ).
        let mut binom = 1.0;
        let mut acc = Vector2::zeros();
        for j in 0..=order {
            acc += binom * self.radius_derivative(t, j) * unit_circle_derivative(t, order - j);
            binom = binom * (order - j) as f64 / (j + 1) as f64;
        }
        acc
    }
}

/// Random simple star-shaped curve. Retries up to 100 times when the draw
/// self-intersects.
pub fn generate_fourier_curve<R: Rng + ?Sized>(
    harmonics: usize,
    decay: f64,
    scale: f64,
    samples: usize,
    rng: &mut R,
) -> Result<PlanarCurve> {
    generate_fourier_shape(harmonics, decay, scale, samples, rng).map(|(_, c)| c)
}

/// Like [`generate_fourier_curve`] but also returns the analytic shape.
pub fn generate_fourier_shape<R: Rng + ?Sized>(
    harmonics: usize,
    decay: f64,
    scale: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(FourierCurve, PlanarCurve)> {
    if harmonics < 1 {
        return Err(Error::InvalidArgument("harmonics must be >= 1".into()));
    }
    if samples < 64 {
        return Err(Error::InvalidArgument(format!("samples must be >= 64, got {samples}")));
    }
    if !(decay > 0.0) || !(scale > 0.0) {
        return Err(Error::InvalidArgument("decay and scale must be positive".into()));
    }
    for _ in 0..MAX_ATTEMPTS {
        let shape = FourierCurve::random(harmonics, decay, scale, rng);
        let positive = (0..samples).all(|i| shape.radius_derivative(TAU * i as f64 / samples as f64, 0) > 0.0);
        if !positive {
            continue;
        }
        if let Ok(curve) = shape.sample_closed(samples) {
            if is_simple(curve.points()) {
                return Ok((shape, curve));
            }
        }
    }
    Err(Error::Numeric(format!(
        "no simple Fourier curve after {MAX_ATTEMPTS} attempts"
    )))
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: &Point, b: &Point, p: &Point, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Brute-force check that no two non-adjacent edges of the closed polygon meet.
pub fn is_simple(points: &[Point]) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (&points[i], &points[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (&points[j], &points[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Smooth low-frequency displacement field bounded by `amplitude` in norm.
struct Warp {
    amplitude: f64,
    waves: [[(Vector2<f64>, f64); 2]; 2],
}

impl Warp {
    fn random<R: Rng + ?Sized>(amplitude: f64, diameter: f64, rng: &mut R) -> Self {
        let mut wave = || {
            let dir = rng.random_range(0.0..TAU);
            let freq = TAU / diameter * rng.random_range(0.5..1.5);
            let phase = rng.random_range(0.0..TAU);
            (Vector2::new(dir.cos(), dir.sin()) * freq, phase)
        };
        Self {
            amplitude,
            waves: [[wave(), wave()], [wave(), wave()]],
        }
    }

    fn displace(&self, p: &Point) -> Vector2<f64> {
        let component = |waves: &[(Vector2<f64>, f64); 2]| {
            0.5 * waves
                .iter()
                .map(|(k, phase)| (k.dot(&p.coords) + phase).sin())
                .sum::<f64>()
        };
        // Each component is bounded by 1, so the norm is bounded by amplitude.
        self.amplitude / 2f64.sqrt() * Vector2::new(component(&self.waves[0]), component(&self.waves[1]))
    }
}

/// Deformed, rigidly moved copies of `base`. The displacement amplitude is at
/// most `deform_magnitude` times the base diameter.
pub fn build_collection<R: Rng + ?Sized>(
    name: impl Into<String>,
    base: &PlanarCurve,
    members: usize,
    deform_magnitude: f64,
    rng: &mut R,
) -> Result<CurveCollection> {
    if members < 2 {
        return Err(Error::InvalidArgument(format!(
            "collections need at least 2 members, got {members}"
        )));
    }
    if !(deform_magnitude >= 0.0) {
        return Err(Error::InvalidArgument("deform magnitude must be >= 0".into()));
    }
    let diameter = base.diameter();
    let centroid = base.centroid();
    let mut out = Vec::with_capacity(members);
    for _ in 0..members {
        let mut member = None;
        for _ in 0..MAX_ATTEMPTS {
            let warp = Warp::random(deform_magnitude * diameter, diameter, rng);
            let rot = rotation(rng.random_range(0.0..TAU));
            let shift = Vector2::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            let points: Vec<Point> = base
                .points()
                .iter()
                .map(|p| {
                    let q = p + warp.displace(p) - centroid;
                    Point::from(rot * q + centroid.coords + shift)
                })
                .collect();
            if !is_simple(&points) {
                continue;
            }
            if let Ok(curve) = PlanarCurve::new(points) {
                member = Some(curve);
                break;
            }
        }
        out.push(member.ok_or_else(|| {
            Error::Numeric(format!(
                "deformation kept self-intersecting after {MAX_ATTEMPTS} attempts"
            ))
        })?);
    }
    CurveCollection::new(name, out)
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    version: u32,
    #[serde(default)]
    split: Split,
    curves: Vec<RawCurve>,
}

#[derive(Serialize, Deserialize)]
struct RawCollection {
    name: String,
    curves: Vec<RawCurve>,
}

#[derive(Serialize, Deserialize)]
struct RawCollections {
    version: u32,
    collections: Vec<RawCollection>,
}

fn to_raw(curve: &PlanarCurve) -> RawCurve {
    RawCurve {
        points: curve.points().iter().map(|p| [p.x, p.y]).collect(),
    }
}

fn from_raw(raw: RawCurve, path: &Path, context: &str) -> Result<PlanarCurve> {
    PlanarCurve::from_xy(&raw.points).map_err(|e| Error::parse(path, format!("{context}: {e}")))
}

fn check_version(version: u32, path: &Path) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::parse(
            path,
            format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_curves(dataset: &CurveDataset, path: impl AsRef<Path>) -> Result<()> {
    let raw = RawDataset {
        version: FORMAT_VERSION,
        split: dataset.split,
        curves: dataset.curves.iter().map(to_raw).collect(),
    };
    let text = serde_json::to_string(&raw).map_err(|e| Error::Numeric(e.to_string()))?;
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_curves(path: impl AsRef<Path>) -> Result<CurveDataset> {
    let path = path.as_ref();
    let raw: RawDataset = read_json(path)?;
    check_version(raw.version, path)?;
    if raw.curves.is_empty() {
        return Err(Error::parse(path, "dataset has no curves"));
    }
    let curves = raw
        .curves
        .into_iter()
        .enumerate()
        .map(|(i, c)| from_raw(c, path, &format!("curve {i}")))
        .collect::<Result<Vec<_>>>()?;
    CurveDataset::new(curves, raw.split)
}

pub fn save_collections(collections: &[CurveCollection], path: impl AsRef<Path>) -> Result<()> {
    let raw = RawCollections {
        version: FORMAT_VERSION,
        collections: collections
            .iter()
            .map(|c| RawCollection {
                name: c.name.clone(),
                curves: c.members.iter().map(to_raw).collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string(&raw).map_err(|e| Error::Numeric(e.to_string()))?;
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_collections(path: impl AsRef<Path>) -> Result<Vec<CurveCollection>> {
    let path = path.as_ref();
    let raw: RawCollections = read_json(path)?;
    check_version(raw.version, path)?;
    if raw.collections.is_empty() {
        return Err(Error::parse(path, "no collections"));
    }
    raw.collections
        .into_iter()
        .enumerate()
        .map(|(ci, c)| {
            let name = c.name;
            let members = c
                .curves
                .into_iter()
                .enumerate()
                .map(|(i, m)| from_raw(m, path, &format!("collection {ci} ({name}) curve {i}")))
                .collect::<Result<Vec<_>>>()?;
            CurveCollection::new(name.clone(), members)
                .map_err(|e| Error::parse(path, format!("collection {ci}: {e}")))
        })
        .collect()
}

/// Parameters for the synthetic generators; the defaults are the ones used
/// by the CLI and the acceptance suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub harmonics: usize,
    pub decay: f64,
    pub scale: f64,
    pub samples: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            harmonics: 6,
            decay: 0.55,
            scale: 1.0,
            samples: 96,
        }
    }
}

impl GeneratorConfig {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PlanarCurve> {
        generate_fourier_curve(self.harmonics, self.decay, self.scale, self.samples, rng)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_CURVE_POINTS.max(64) {
            return Err(Error::InvalidArgument(format!(
                "samples must be >= 64, got {}",
                self.samples
            )));
        }
        Ok(())
    }
}
