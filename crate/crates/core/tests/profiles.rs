mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::*;
use rollkit_core::{
    certify, find_equilibria, integrate_reduced, reconstruct, BodyParams, CertificationConfig, Coefficients,
    ConstrainedSystem, Curvature, FullInitial, Method, PlanarPose, ReducedState, Stability, SurfaceProfile,
};

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.01 + (PI - 0.02) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn ellipsoid_meridian_matches_closed_form() {
    let c = ellipsoid();
    for t in grid(500) {
        let (h, f) = c.geometry().meridian(t).unwrap();
        let (eh, ef) = ellipsoid_meridian(t);
        assert!((h - eh).abs() < 1e-11 && (f - ef).abs() < 1e-11, "{t}");
    }
    assert!((c.geometry().f_pi() - 2.0 * ELL_C).abs() < 1e-11);
}

#[test]
fn sampled_ellipsoid_converges_to_function_profile() {
    let exact = ellipsoid();
    let coarse = ellipsoid_sampled(65);
    let fine = ellipsoid_sampled(513);
    let err = |c: &Coefficients| {
        grid(400)
            .into_iter()
            .map(|t| (c.nose(t).unwrap() - exact.nose(t).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(&coarse), err(&fine));
    assert!(e2 < 1e-6, "{e2}");
    assert!(e2 < e1 / 10.0, "{e1} {e2}");
}

#[test]
fn egg_meridian_matches_closed_form() {
    let c = egg();
    for t in grid(500) {
        let (h, f) = c.geometry().meridian(t).unwrap();
        let (eh, ef) = egg_meridian(t);
        assert!((h - eh).abs() < 1e-11 && (f - ef).abs() < 1e-11, "{t}");
    }
}

#[test]
fn torus_through_quadrature_matches_closed_form() {
    let a = torus_defaults();
    let b = torus_general();
    for t in grid(300) {
        for (x, y) in [
            (a.coeff_a(t).unwrap(), b.coeff_a(t).unwrap()),
            (a.coeff_b(t).unwrap(), b.coeff_b(t).unwrap()),
            (a.coeff_c(t).unwrap(), b.coeff_c(t).unwrap()),
            (a.potential(t, 0.3).unwrap(), b.potential(t, 0.3).unwrap()),
        ] {
            assert!((x - y).abs() < 1e-10 * x.abs().max(1.0), "{t}: {x} {y}");
        }
    }
}

#[test]
fn constant_curvature_is_a_torus() {
    let body = BodyParams::new(1.0, TORUS_I1, TORUS_I3, 1.0).unwrap();
    let c = Coefficients::from_profile(&SurfaceProfile::general(Curvature::Constant(0.5), 1.0, 0.5), body).unwrap();
    let eq = find_equilibria(&c, 0.1);
    assert_eq!(eq.len(), 3);
    assert!((eq[0].theta - 0.01f64.cbrt().asin()).abs() < 1e-9);
}

#[test]
fn general_profiles_certify() {
    let cfg = CertificationConfig {
        grid_points: 400,
        random_points: 200,
        ..Default::default()
    };
    for c in [ellipsoid(), egg(), torus_general(), ellipsoid_sampled(257)] {
        let report = certify(&c, &c, &cfg).unwrap();
        let failures: Vec<_> = report.failures().collect();
        assert!(failures.is_empty(), "{failures:?}");
    }
}

#[test]
fn ellipsoid_stands_on_its_rim_only_when_spinning_fast() {
    // Centre of mass at the centre: Λ(π/2) = 0, so θ = π/2 is always an
    // equilibrium; the oblate body lies flat (θ → 0) when not spinning.
    let c = ellipsoid();
    let slow = find_equilibria(&c, 0.0);
    assert!(slow
        .iter()
        .any(|e| (e.theta - FRAC_PI_2).abs() < 1e-9 && e.stability == Stability::Unstable));
    let fast = find_equilibria(&c, 20.0);
    assert_eq!(fast.len(), 1);
    assert_eq!(fast[0].stability, Stability::Stable);
}

#[test]
fn egg_full_oracle_agrees_with_reduction() {
    let c = egg();
    let s = ReducedState::new(1.3, 0.15, 0.6);
    let pose = PlanarPose {
        psi: 0.2,
        phi: -0.4,
        x: 1.0,
        y: 2.0,
    };
    let red = integrate_reduced(&c, &s, 3.0, 1e-3, Method::Rk4).unwrap();
    let rec = reconstruct(&c, &red, pose).unwrap();
    let init = FullInitial::matched(&c, &s, pose).unwrap();
    let full = ConstrainedSystem::new(c).integrate_full(&init, 3.0, 1e-3).unwrap();
    assert_eq!(rec.len(), full.len());
    for (a, b) in rec.samples.iter().zip(&full.samples) {
        assert!((a.theta - b.theta).abs() < 1e-8, "{}", a.t);
        assert!((a.x - b.x).hypot(a.y - b.y) < 1e-7, "{}", a.t);
        assert!((a.psi - b.psi).abs() < 1e-7 && (a.phi - b.phi).abs() < 1e-7);
    }
    assert!(full.ell_drift() < 1e-9 && full.energy_drift() < 1e-9);
}

#[test]
fn invalid_profiles_are_rejected() {
    let body = BodyParams::new(1.0, 0.5, 0.7, 1.0).unwrap();
    let neg = Curvature::function(|t: f64| 0.1 - t, |_| -1.0);
    assert!(Coefficients::from_profile(&SurfaceProfile::general(neg, 0.5, 0.01), body).is_err());
    assert!(Coefficients::from_profile(&SurfaceProfile::general(Curvature::Constant(0.5), 1.0, 1.5), body).is_err());
    assert!(Coefficients::from_profile(&SurfaceProfile::torus(0.4, 0.5), body).is_err());
}
