use std::f64::consts::TAU;

use invsig::axiomatic::{
    analytic_oracle, axiomatic_signature, equiaffine_curvature_at, equiaffine_kappa_s,
    euclidean_curvature_at, euclidean_kappa_s, fit_conic, equiaffine_curvature_conic,
};
use invsig::datasets::FourierCurve;
use invsig::geometry::{apply_affine, random_affine};
use invsig::rng::seeded;
use invsig::smooth::{Ellipse, SmoothCurve};
use invsig::{Group, PlanarCurve, Point};
use proptest::prelude::*;

fn convex_fourier() -> FourierCurve {
    FourierCurve {
        scale: 1.0,
        coefficients: vec![(0.0, 0.0), (0.06, 0.02), (-0.015, 0.01), (0.004, -0.003)],
    }
}

#[test]
fn euclidean_kappa_s_on_ellipse_matches_analytic() {
    let e = Ellipse { a: 2.0, b: 1.0 };
    let n = 512;
    let curve = e.sample_closed(n).unwrap();
    let max_ks = (0..n)
        .map(|i| analytic_oracle(&e, TAU * i as f64 / n as f64, Group::Euclidean).unwrap().kappa_s.abs())
        .fold(0.0, f64::max);
    let mut checked = 0;
    for i in 0..n {
        let t = TAU * i as f64 / n as f64;
        let exact = analytic_oracle(&e, t, Group::Euclidean).unwrap();
        // Away from curvature extrema, where κ_s crosses zero.
        if exact.kappa_s.abs() < 0.1 * max_ks {
            continue;
        }
        let est = euclidean_kappa_s(&curve, i).unwrap();
        let rel = (est - exact.kappa_s).abs() / exact.kappa_s.abs();
        assert!(rel < 5e-2, "i={i} est={est} exact={} rel={rel}", exact.kappa_s);
        checked += 1;
    }
    assert!(checked > n / 2);
}

#[test]
fn euclidean_kappa_on_ellipse_converges() {
    let e = Ellipse { a: 2.0, b: 1.0 };
    let err = |n: usize| {
        let c = e.sample_closed(n).unwrap();
        (0..n)
            .map(|i| {
                let exact = analytic_oracle(&e, TAU * i as f64 / n as f64, Group::Euclidean).unwrap().kappa;
                (euclidean_curvature_at(&c, i).unwrap() - exact).abs()
            })
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(128), err(256));
    // Second order: halving the step divides the error by about four.
    assert!(coarse / fine > 3.5, "{coarse} {fine}");
}

#[test]
fn reversal_negates_kappa_and_keeps_kappa_s() {
    let curve = convex_fourier().sample_closed(200).unwrap();
    let rev = curve.reversed();
    let n = curve.len();
    for i in 0..n {
        let j = n - 1 - i;
        let (k, kr) = (euclidean_curvature_at(&curve, i).unwrap(), euclidean_curvature_at(&rev, j).unwrap());
        assert!((k + kr).abs() < 1e-12);
        let (s, sr) = (euclidean_kappa_s(&curve, i).unwrap(), euclidean_kappa_s(&rev, j).unwrap());
        assert!((s - sr).abs() < 1e-9 * (1.0 + s.abs()));
        let (m, mr) = (equiaffine_kappa_s(&curve, i).unwrap(), equiaffine_kappa_s(&rev, j).unwrap());
        assert!((m + mr).abs() < 1e-6 * (1.0 + m.abs()));
    }
}

#[test]
fn equiaffine_kappa_s_matches_analytic_on_convex_fourier_curve() {
    let shape = convex_fourier();
    let n = 1024;
    let curve = shape.sample_closed(n).unwrap();
    let mut checked = 0;
    let mut worst = 0.0f64;
    for i in 0..n {
        let t = TAU * i as f64 / n as f64;
        let exact = analytic_oracle(&shape, t, Group::Equiaffine).unwrap();
        let mu = equiaffine_curvature_at(&curve, i).unwrap();
        assert!((mu - exact.kappa).abs() < 1e-3 * exact.kappa.abs().max(1.0), "mu i={i}");
        if exact.kappa.abs() <= 0.1 || exact.kappa_s.abs() < 0.05 {
            continue;
        }
        let est = equiaffine_kappa_s(&curve, i).unwrap();
        let rel = (est - exact.kappa_s).abs() / exact.kappa_s.abs();
        worst = worst.max(rel);
        checked += 1;
    }
    eprintln!("equiaffine kappa_s: checked {checked}, worst rel err {worst:.3e}");
    assert!(worst < 0.1);
    assert!(checked > n / 2);
}

#[test]
fn signature_is_invariant_to_its_group() {
    let mut rng = seeded(99, &[]);
    let shape = convex_fourier();
    let curve = shape.sample_closed(400).unwrap();
    let euclid = axiomatic_signature(&curve, Group::Euclidean).unwrap();
    let equi = axiomatic_signature(&curve, Group::Equiaffine).unwrap();
    for _ in 0..20 {
        let rigid = apply_affine(&curve, &random_affine(1.0, 1.0, &mut rng).unwrap()).unwrap();
        let s = axiomatic_signature(&rigid, Group::Euclidean).unwrap();
        for (a, b) in euclid.points().iter().zip(s.points()) {
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
        let unimodular = apply_affine(&curve, &random_affine(1.0, 2.5, &mut rng).unwrap()).unwrap();
        let s = axiomatic_signature(&unimodular, Group::Equiaffine).unwrap();
        for (a, b) in equi.points().iter().zip(s.points()) {
            assert!((a[0] - b[0]).abs() < 1e-6 * (1.0 + a[0].abs()));
            assert!((a[1] - b[1]).abs() < 1e-4 * (1.0 + a[1].abs()));
        }
    }
}

#[test]
fn ellipse_equiaffine_signature_collapses_to_a_point() {
    let c = Ellipse { a: 2.0, b: 1.0 }.sample_closed(512).unwrap();
    let s = axiomatic_signature(&c, Group::Equiaffine).unwrap();
    assert_eq!(s.valid_count(), 512);
    let mu = 2f64.powf(-2.0 / 3.0);
    for [k, ks] in s.valid_points() {
        assert!((k - mu).abs() < 1e-4 && ks.abs() < 1e-4);
    }
}

fn arbitrary_five() -> impl Strategy<Value = [Point; 5]> {
    // Five distinct angles on a random ellipse: always in general position.
    (
        prop::array::uniform5(0.0..TAU),
        0.5f64..3.0,
        0.5f64..3.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
    )
        .prop_filter_map("distinct angles", |(mut ts, a, b, cx, cy)| {
            ts.sort_by(f64::total_cmp);
            let gaps_ok = ts.windows(2).all(|w| w[1] - w[0] > 0.05) && ts[0] + TAU - ts[4] > 0.05;
            gaps_ok.then(|| {
                let e = Ellipse { a, b };
                ts.map(|t| {
                    let p = e.point(t);
                    Point::new(p.x + cx, p.y + cy)
                })
            })
        })
}

proptest! {
    #[test]
    fn conic_curvature_ignores_point_order(pts in arbitrary_five(), perm in Just([3usize, 0, 4, 1, 2])) {
        let mu = equiaffine_curvature_conic(&fit_conic(&pts).unwrap()).unwrap();
        let shuffled = perm.map(|i| pts[i]);
        let mu2 = equiaffine_curvature_conic(&fit_conic(&shuffled).unwrap()).unwrap();
        prop_assert!((mu - mu2).abs() < 1e-9 * (1.0 + mu.abs()));
    }

    #[test]
    fn conic_interpolates_its_points(pts in arbitrary_five()) {
        let conic = fit_conic(&pts).unwrap();
        for p in &pts {
            prop_assert!(conic.evaluate(p).abs() < 1e-9);
        }
    }
}

#[test]
fn circle_euclidean_kappa_second_order() {
    for n in [64usize, 256] {
        let exact = 1.0 / 1.5;
        let c: PlanarCurve = Ellipse::circle(1.5).sample_closed(n).unwrap();
        for i in 0..n {
            assert!((euclidean_curvature_at(&c, i).unwrap() - exact).abs() / exact < 1e-3);
        }
    }
}
