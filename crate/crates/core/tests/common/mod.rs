#![allow(dead_code)]

use rollkit_core::{BodyParams, Coefficients, Curvature, SurfaceProfile};

pub const TORUS_I1: f64 = 0.65625;
pub const TORUS_I3: f64 = 0.6875;

/// m = g = R = 1, r = 0.5 with the explicit default inertias.
pub fn torus_defaults() -> Coefficients {
    torus_with(TORUS_I1, TORUS_I3)
}

pub fn torus_with(i1: f64, i3: f64) -> Coefficients {
    let body = BodyParams::new(1.0, i1, i3, 1.0).unwrap();
    Coefficients::from_profile(&SurfaceProfile::torus(1.0, 0.5), body).unwrap()
}

pub fn torus_solid() -> Coefficients {
    let body = BodyParams::solid_torus(1.0, 1.0, 0.5, 1.0).unwrap();
    Coefficients::from_profile(&SurfaceProfile::torus(1.0, 0.5), body).unwrap()
}

pub fn torus_hollow() -> Coefficients {
    let body = BodyParams::hollow_torus(1.0, 1.0, 0.5, 1.0).unwrap();
    Coefficients::from_profile(&SurfaceProfile::torus(1.0, 0.5), body).unwrap()
}

/// Semi-axes of the oblate test ellipsoid.
pub const ELL_A: f64 = 1.0;
pub const ELL_C: f64 = 0.6;

fn ellipse_d(t: f64) -> f64 {
    ELL_C * ELL_C * t.cos().powi(2) + ELL_A * ELL_A * t.sin().powi(2)
}

/// Closed-form meridian `(h, f)` of the ellipsoid, used as an oracle.
pub fn ellipsoid_meridian(t: f64) -> (f64, f64) {
    let d = ellipse_d(t).sqrt();
    (ELL_A * ELL_A * t.sin() / d, ELL_C * (1.0 - ELL_C * t.cos() / d))
}

pub fn ellipsoid_curvature() -> Curvature {
    let k = ELL_A * ELL_A * ELL_C * ELL_C;
    Curvature::function(
        move |t: f64| k / ellipse_d(t).powf(1.5),
        move |t: f64| {
            let dd = 2.0 * t.sin() * t.cos() * (ELL_A * ELL_A - ELL_C * ELL_C);
            -1.5 * k * ellipse_d(t).powf(-2.5) * dd
        },
    )
}

/// Solid ellipsoid of revolution, centre of mass at the centre.
pub fn ellipsoid() -> Coefficients {
    let m = 1.0;
    let body = BodyParams::new(
        m,
        m * (ELL_A * ELL_A + ELL_C * ELL_C) / 5.0,
        2.0 * m * ELL_A * ELL_A / 5.0,
        1.0,
    )
    .unwrap();
    Coefficients::from_profile(&SurfaceProfile::general(ellipsoid_curvature(), 0.0, ELL_C), body).unwrap()
}

/// Same ellipsoid through sampled curvature radii.
pub fn ellipsoid_sampled(samples: usize) -> Coefficients {
    let k = ELL_A * ELL_A * ELL_C * ELL_C;
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / (samples - 1) as f64;
            (t, k / ellipse_d(t).powf(1.5))
        })
        .collect();
    let body = *ellipsoid().body();
    Coefficients::from_profile(
        &SurfaceProfile::general(Curvature::sampled(&pts).unwrap(), 0.0, ELL_C),
        body,
    )
    .unwrap()
}

pub const EGG_H0: f64 = 0.8;
pub const EGG_F0: f64 = 0.55;

/// `r(θ) = 0.6 + 0.25 cos θ`: a body that is not symmetric about its equator.
pub fn egg() -> Coefficients {
    let body = BodyParams::new(1.0, 0.5, 0.7, 1.0).unwrap();
    let curvature = Curvature::function(|t: f64| 0.6 + 0.25 * t.cos(), |t: f64| -0.25 * t.sin());
    Coefficients::from_profile(&SurfaceProfile::general(curvature, EGG_H0, EGG_F0), body).unwrap()
}

pub fn egg_meridian(t: f64) -> (f64, f64) {
    let h = EGG_H0 + 0.6 * t.sin() + 0.25 * (0.5 * t + 0.25 * (2.0 * t).sin());
    let f = 0.6 * (1.0 - t.cos()) + 0.125 * t.sin().powi(2);
    (h, f)
}

/// Torus expressed through the general quadrature path.
pub fn torus_general() -> Coefficients {
    let body = BodyParams::new(1.0, TORUS_I1, TORUS_I3, 1.0).unwrap();
    Coefficients::from_profile(&SurfaceProfile::torus_as_general(1.0, 0.5), body).unwrap()
}

/// Upward zero crossings of `values - centre`, linearly interpolated in `times`.
pub fn upward_crossings(times: &[f64], values: &[f64], centre: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..values.len() {
        let (a, b) = (values[k - 1] - centre, values[k] - centre);
        if a < 0.0 && b >= 0.0 {
            let s = a / (a - b);
            out.push(times[k - 1] + s * (times[k] - times[k - 1]));
        }
    }
    out
}
