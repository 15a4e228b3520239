//! Reference invariants from analytic derivatives of a smooth parametrization.
//!
//! Shares no code with the discrete estimators; tests compare against it.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::signature::{Group, InvariantEstimate};
use crate::smooth::SmoothCurve;

const MIN_DENOMINATOR: f64 = 1e-12;
const FD_STEP: f64 = 1e-4;

fn cross(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    u.x * v.y - u.y * v.x
}

fn euclidean_kappa<C: SmoothCurve + ?Sized>(c: &C, t: f64) -> Result<(f64, f64)> {
    let d1 = c.derivative(t, 1);
    let d2 = c.derivative(t, 2);
    let speed = d1.norm();
    if speed < MIN_DENOMINATOR {
        return Err(Error::Degenerate(format!("vanishing speed at t = {t}")));
    }
    Ok((cross(&d1, &d2) / speed.powi(3), speed))
}

/// Equiaffine curvature
/// `μ = [c'', c'''] / w^{5/3} + (3 w w'' − 5 w'²) / (9 w^{8/3})` with `w = [c', c'']`.
fn equiaffine_mu<C: SmoothCurve + ?Sized>(c: &C, t: f64) -> Result<(f64, f64)> {
    let d1 = c.derivative(t, 1);
    let d2 = c.derivative(t, 2);
    let d3 = c.derivative(t, 3);
    let d4 = c.derivative(t, 4);
    let w = cross(&d1, &d2);
    if w.abs() < MIN_DENOMINATOR {
        return Err(Error::Degenerate(format!("inflection at t = {t}")));
    }
    let w1 = cross(&d1, &d3);
    let w2 = cross(&d2, &d3) + cross(&d1, &d4);
    let cw = w.cbrt();
    let mu = cross(&d2, &d3) / cw.powi(5) + (3.0 * w * w2 - 5.0 * w1 * w1) / (9.0 * cw.powi(8));
    Ok((mu, cw))
}

/// Five-point central difference of a scalar function of `t`.
fn central_difference(f: impl Fn(f64) -> Result<f64>, t: f64) -> Result<f64> {
    let h = FD_STEP;
    Ok((f(t - 2.0 * h)? - 8.0 * f(t - h)? + 8.0 * f(t + h)? - f(t + 2.0 * h)?) / (12.0 * h))
}

/// Continuous `(κ, κ_s)` at parameter `t`. Euclidean `κ_s` uses the analytic
/// derivative of `κ`; the equiaffine `μ_s` differentiates the analytic `μ`
/// numerically (step `1e-4`).
pub fn analytic_oracle<C: SmoothCurve + ?Sized>(curve: &C, t: f64, group: Group) -> Result<InvariantEstimate> {
    match group {
        Group::Euclidean => {
            let (kappa, speed) = euclidean_kappa(curve, t)?;
            let d1 = curve.derivative(t, 1);
            let d2 = curve.derivative(t, 2);
            let d3 = curve.derivative(t, 3);
            let dkappa = cross(&d1, &d3) / speed.powi(3)
                - 3.0 * cross(&d1, &d2) * d1.dot(&d2) / speed.powi(5);
            Ok(InvariantEstimate {
                kappa,
                kappa_s: dkappa / speed,
                group,
            })
        }
        Group::Equiaffine => {
            let (mu, ds_dt) = equiaffine_mu(curve, t)?;
            let dmu = central_difference(|s| equiaffine_mu(curve, s).map(|(m, _)| m), t)?;
            Ok(InvariantEstimate {
                kappa: mu,
                kappa_s: dmu / ds_dt,
                group,
            })
        }
        Group::Affine => Err(Error::InvalidArgument(
            "no analytic oracle for the full affine group".into(),
        )),
    }
}
