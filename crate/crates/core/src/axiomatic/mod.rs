//! Joint-invariant estimators of `(κ, κ_s)`.
//!
//! The Euclidean curvature at a point is that of the circle through it and
//! its two neighbours; the equiaffine curvature is the (constant) equiaffine
//! curvature of the conic through five consecutive points. Derivatives with
//! respect to the invariant arc-length are central differences.

mod conic;
mod equiaffine;
mod euclidean;
pub mod oracle;

pub use conic::{equiaffine_curvature_conic, fit_conic, ConicCoefficients};
pub use equiaffine::{equiaffine_curvature_at, equiaffine_kappa_s, equiaffine_step};
pub use euclidean::{euclidean_curvature_3pt, euclidean_curvature_at, euclidean_kappa_s};
pub use oracle::analytic_oracle;

use crate::error::{Error, Result};
use crate::geometry::PlanarCurve;
use crate::signature::{Group, SignatureCurve};

/// Per-point signature; degenerate points are marked invalid. Fails when more
/// than half the points are degenerate.
pub fn axiomatic_signature(curve: &PlanarCurve, group: Group) -> Result<SignatureCurve> {
    let n = curve.len();
    let kappa: Vec<Option<f64>> = match group {
        Group::Euclidean => (0..n).map(|i| euclidean_curvature_at(curve, i).ok()).collect(),
        Group::Equiaffine => (0..n).map(|i| equiaffine_curvature_at(curve, i).ok()).collect(),
        Group::Affine => {
            return Err(Error::InvalidArgument(
                "no axiomatic estimator for the full affine group".into(),
            ))
        }
    };
    let estimates: Vec<Option<[f64; 2]>> = (0..n)
        .map(|i| {
            let k = kappa[i]?;
            let prev = kappa[(i + n - 1) % n]?;
            let next = kappa[(i + 1) % n]?;
            let ks = match group {
                Group::Euclidean => euclidean::kappa_s_from_neighbors(curve, i, prev, next),
                _ => equiaffine::mu_s_from_neighbors(curve, i, prev, next).ok()?,
            };
            (k.is_finite() && ks.is_finite()).then_some([k, ks])
        })
        .collect();
    let signature = SignatureCurve::from_estimates(estimates);
    if 2 * signature.valid_count() < n {
        return Err(Error::Degenerate(format!(
            "{} of {n} points have no {group} estimate",
            n - signature.valid_count()
        )));
    }
    Ok(signature)
}
