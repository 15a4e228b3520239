use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transformation group whose invariants are being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Euclidean,
    Equiaffine,
    Affine,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Euclidean => "euclidean",
            Group::Equiaffine => "equiaffine",
            Group::Affine => "affine",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Group::Euclidean),
            "equiaffine" => Ok(Group::Equiaffine),
            "affine" => Ok(Group::Affine),
            other => Err(Error::InvalidArgument(format!("unknown group {other:?}"))),
        }
    }
}

/// Curvature and its derivative with respect to the group's arc-length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantEstimate {
    pub kappa: f64,
    pub kappa_s: f64,
    pub group: Group,
}

/// Ordered `(κ, κ_s)` pairs, one per curve point, with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureCurve {
    points: Vec<[f64; 2]>,
    valid: Vec<bool>,
}

impl SignatureCurve {
    pub fn new(points: Vec<[f64; 2]>, valid: Vec<bool>) -> Result<Self> {
        if points.len() != valid.len() {
            return Err(Error::Shape(format!(
                "{} signature points but {} validity flags",
                points.len(),
                valid.len()
            )));
        }
        if let Some(i) = points
            .iter()
            .zip(&valid)
            .position(|(p, &v)| v && !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(Error::Numeric(format!("non-finite valid signature point {i}")));
        }
        Ok(Self { points, valid })
    }

    /// All points valid.
    pub fn from_points(points: Vec<[f64; 2]>) -> Result<Self> {
        let valid = vec![true; points.len()];
        Self::new(points, valid)
    }

    /// Builds from per-point estimates; `None` marks an invalid point.
    pub fn from_estimates(estimates: Vec<Option<[f64; 2]>>) -> Self {
        let valid = estimates.iter().map(|e| e.is_some()).collect();
        let points = estimates
            .into_iter()
            .map(|e| e.unwrap_or([f64::NAN, f64::NAN]))
            .collect();
        Self { points, valid }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.points
            .iter()
            .zip(&self.valid)
            .filter_map(|(p, &v)| v.then_some(*p))
    }
}
