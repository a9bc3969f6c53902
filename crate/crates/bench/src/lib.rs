//! Shared fixtures for the benchmarks.

use rollkit_core::{BodyParams, Coefficients, Curvature, SurfaceProfile};

/// m = g = R = 1, r = 0.5.
pub fn torus() -> Coefficients {
    let body = BodyParams::new(1.0, 0.65625, 0.6875, 1.0).expect("valid body");
    Coefficients::from_profile(&SurfaceProfile::torus(1.0, 0.5), body).expect("valid torus")
}

/// Egg-shaped body with curvature radius `0.6 + 0.25 cos θ`.
pub fn egg() -> Coefficients {
    let curvature = Curvature::function(|t| 0.6 + 0.25 * t.cos(), |t| -0.25 * t.sin());
    let body = BodyParams::new(1.0, 0.5, 0.7, 1.0).expect("valid body");
    Coefficients::from_profile(&SurfaceProfile::general(curvature, 0.8, 0.55), body).expect("valid egg")
}
