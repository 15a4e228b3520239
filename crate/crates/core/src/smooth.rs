//! Analytically parametrized curves with closed-form derivatives.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Vector2;

use crate::error::Result;
use crate::geometry::{PlanarCurve, Point};

/// A smooth parametrization `t ↦ c(t)` with derivatives of every order used
/// by the invariant formulas (up to four).
pub trait SmoothCurve {
    /// `order`-th derivative of the parametrization at `t`; order 0 is the point.
    fn derivative(&self, t: f64, order: usize) -> Vector2<f64>;

    fn point(&self, t: f64) -> Point {
        Point::from(self.derivative(t, 0))
    }

    /// `n` samples at uniform parameter steps over `[t0, t0 + period)`.
    fn sample(&self, n: usize, t0: f64, period: f64) -> Result<PlanarCurve> {
        PlanarCurve::new(
            (0..n)
                .map(|i| self.point(t0 + period * i as f64 / n as f64))
                .collect(),
        )
    }
}

/// `(cos θ, sin θ)` differentiated `order` times.
pub(crate) fn unit_circle_derivative(theta: f64, order: usize) -> Vector2<f64> {
    let phase = theta + order as f64 * FRAC_PI_2;
    Vector2::new(phase.cos(), phase.sin())
}

/// Axis-aligned ellipse `(a cos t, b sin t)`; a circle when `a == b`.
#[derive(Debug, Clone, Copy)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
}

impl Ellipse {
    pub fn circle(radius: f64) -> Self {
        Self { a: radius, b: radius }
    }

    pub fn sample_closed(&self, n: usize) -> Result<PlanarCurve> {
        self.sample(n, 0.0, TAU)
    }
}

impl SmoothCurve for Ellipse {
    fn derivative(&self, t: f64, order: usize) -> Vector2<f64> {
        let e = unit_circle_derivative(t, order);
        Vector2::new(self.a * e.x, self.b * e.y)
    }
}

/// `(t, k t²)`.
#[derive(Debug, Clone, Copy)]
pub struct Parabola {
    pub k: f64,
}

impl SmoothCurve for Parabola {
    fn derivative(&self, t: f64, order: usize) -> Vector2<f64> {
        match order {
            0 => Vector2::new(t, self.k * t * t),
            1 => Vector2::new(1.0, 2.0 * self.k * t),
            2 => Vector2::new(0.0, 2.0 * self.k),
            _ => Vector2::zeros(),
        }
    }
}

/// Curve with a reparametrized parameter `t ↦ base(φ(t))`, `φ(t) = t + ε sin t`.
/// Used to check that invariants do not depend on the parametrization.
#[derive(Debug, Clone, Copy)]
pub struct Reparametrized<C> {
    pub base: C,
    pub eps: f64,
}

impl<C: SmoothCurve> SmoothCurve for Reparametrized<C> {
    fn derivative(&self, t: f64, order: usize) -> Vector2<f64> {
        let (s, c) = t.sin_cos();
        let phi = t + self.eps * s;
        // φ derivatives: φ' = 1 + ε cos, φ'' = -ε sin, φ''' = -ε cos, φ'''' = ε sin
        let p1 = 1.0 + self.eps * c;
        let p2 = -self.eps * s;
        let p3 = -self.eps * c;
        let p4 = self.eps * s;
        let d = |k: usize| self.base.derivative(phi, k);
        // Faà di Bruno up to fourth order.
        match order {
            0 => d(0),
            1 => d(1) * p1,
            2 => d(2) * p1 * p1 + d(1) * p2,
            3 => d(3) * p1.powi(3) + d(2) * 3.0 * p1 * p2 + d(1) * p3,
            4 => {
                d(4) * p1.powi(4)
                    + d(3) * 6.0 * p1 * p1 * p2
                    + d(2) * (4.0 * p1 * p3 + 3.0 * p2 * p2)
                    + d(1) * p4
            }
            _ => unimplemented!("derivatives above fourth order"),
        }
    }
}
