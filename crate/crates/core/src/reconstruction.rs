//! Lift a reduced trajectory to the full motion `(θ, ψ, φ, x, y)`.
//!
//! ```text
//! ψ̇ = ℓ / (N sin²θ)
//! φ̇ = −cos θ ψ̇                                   (no twist)
//! (ẋ, ẏ) = −h ψ̇ e_N − r θ̇ e_N⊥                    (no slip)
//! e_N = (cos φ, sin φ),  e_N⊥ = (−sin φ, cos φ)
//! ```

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::coefficients::{Coefficients, POLE_EPS};
use crate::error::{Error, Result};
use crate::ode::rk4_step;
use crate::reduced::SIN_GUARD;
use crate::surface::{ContactGeometry, Geometry};
use crate::trajectory::{FullSample, FullTrajectory, ReducedTrajectory};

/// Planar pose at the first sample of a reconstruction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarPose {
    pub psi: f64,
    pub phi: f64,
    pub x: f64,
    pub y: f64,
}

/// `ψ̇ = ℓ / (N(θ) sin²θ)`.
pub fn psi_rate(coeffs: &Coefficients, theta: f64, ell: f64) -> Result<f64> {
    let g = coeffs.geometry().eval(theta)?;
    if g.sin.abs() < POLE_EPS {
        return Err(Error::Pole { theta });
    }
    Ok(psi_rate_at(coeffs, &g, ell))
}

fn psi_rate_at(coeffs: &Coefficients, g: &ContactGeometry, ell: f64) -> f64 {
    if ell == 0.0 {
        return 0.0;
    }
    ell / (coeffs.nose_sq_at(g).sqrt() * g.sin * g.sin)
}

/// No-twist: `φ̇ = −cos θ ψ̇`.
pub fn phi_rate(theta: f64, psi_dot: f64) -> f64 {
    -theta.cos() * psi_dot
}

fn frame(phi: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = phi.sin_cos();
    ([c, s], [-s, c])
}

fn contact_velocity_at(g: &ContactGeometry, theta_dot: f64, psi_dot: f64, phi: f64) -> [f64; 2] {
    let (e_n, e_perp) = frame(phi);
    [
        -g.h * psi_dot * e_n[0] - g.r * theta_dot * e_perp[0],
        -g.h * psi_dot * e_n[1] - g.r * theta_dot * e_perp[1],
    ]
}

/// No-slip: `(ẋ, ẏ) = −h ψ̇ e_N − r θ̇ e_N⊥`.
pub fn contact_velocity(geometry: &Geometry, theta: f64, theta_dot: f64, psi_dot: f64, phi: f64) -> Result<(f64, f64)> {
    let g = geometry.eval(theta)?;
    let [vx, vy] = contact_velocity_at(&g, theta_dot, psi_dot, phi);
    Ok((vx, vy))
}

/// Attitude `Rz(φ) Rx(θ) Rz(ψ)` taking body to space coordinates.
pub fn attitude(phi: f64, theta: f64, psi: f64) -> Matrix3<f64> {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Matrix3::new(
        cf * cp - sf * ct * sp,
        -cf * sp - sf * ct * cp,
        sf * st,
        sf * cp + cf * ct * sp,
        -sf * sp + cf * ct * cp,
        -cf * st,
        st * sp,
        st * cp,
        ct,
    )
}

/// Radius of the planar circle traced at a relative equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SteadyCircle {
    /// `h(θ*)/cos θ*`; negative past the upright position.
    Finite(f64),
    /// Upright (`cos θ* = 0`): straight-line rolling.
    Infinite,
}

impl SteadyCircle {
    pub fn radius(self) -> Option<f64> {
        match self {
            SteadyCircle::Finite(r) => Some(r),
            SteadyCircle::Infinite => None,
        }
    }
}

pub fn steady_circle(geometry: &Geometry, theta: f64) -> Result<SteadyCircle> {
    let g = geometry.eval(theta)?;
    if g.cos.abs() < 1e-12 {
        return Ok(SteadyCircle::Infinite);
    }
    Ok(SteadyCircle::Finite(g.h / g.cos))
}

/// Horizontal centre-of-mass position, `(x, y) + Λ e_N⊥`.
pub fn center_of_mass_xy(geometry: &Geometry, sample: &FullSample) -> (f64, f64) {
    let g = geometry.eval_unchecked(sample.theta);
    let (_, e_perp) = frame(sample.phi);
    (sample.x + g.lambda * e_perp[0], sample.y + g.lambda * e_perp[1])
}

/// Constraint residuals `(|φ̇ + cos θ ψ̇|, |(ẋ, ẏ) + h ψ̇ e_N + r θ̇ e_N⊥|)`.
pub fn constraint_residuals(g: &ContactGeometry, q: &[f64; 5], qd: &[f64; 5]) -> (f64, f64) {
    let twist = (qd[2] + g.cos * qd[1]).abs();
    let [vx, vy] = contact_velocity_at(g, qd[0], qd[1], q[2]);
    let slip = (qd[3] - vx).hypot(qd[4] - vy);
    (twist, slip)
}

fn full_sample(
    coeffs: &Coefficients,
    t: f64,
    theta: f64,
    p_theta: f64,
    ell: f64,
    energy: f64,
    pose: [f64; 4],
) -> FullSample {
    let g = coeffs.geometry().eval_unchecked(theta);
    let theta_dot = p_theta / coeffs.b_at(&g);
    let psi_dot = psi_rate_at(coeffs, &g, ell);
    let phi_dot = -g.cos * psi_dot;
    let [x_dot, y_dot] = contact_velocity_at(&g, theta_dot, psi_dot, pose[1]);
    let q = [theta, pose[0], pose[1], pose[2], pose[3]];
    let qd = [theta_dot, psi_dot, phi_dot, x_dot, y_dot];
    let (res_notwist, res_noslip) = constraint_residuals(&g, &q, &qd);
    FullSample {
        t,
        theta,
        psi: pose[0],
        phi: pose[1],
        x: pose[2],
        y: pose[3],
        theta_dot,
        psi_dot,
        phi_dot,
        x_dot,
        y_dot,
        energy,
        ell: coeffs.nose_sq_at(&g).sqrt() * g.sin * g.sin * psi_dot,
        res_notwist,
        res_noslip,
        valid: g.sin >= SIN_GUARD,
    }
}

/// Integrate `ψ, φ, x, y` along a reduced trajectory with RK4 on the same
/// grid. Each interval restarts from the stored reduced sample, so `θ` and
/// `p_θ` in the output are the reduced values.
pub fn reconstruct(coeffs: &Coefficients, traj: &ReducedTrajectory, initial: PlanarPose) -> Result<FullTrajectory> {
    let ell = traj.ell;
    let geo = coeffs.geometry();
    let mut f = |_t: f64, y: &[f64; 6]| -> Result<[f64; 6]> {
        let theta = y[0];
        if !theta.is_finite() || theta.sin().abs() < SIN_GUARD {
            return Err(Error::Singularity {
                t: _t,
                theta,
                last_t: _t,
                last_theta: theta,
            });
        }
        let g = geo.eval_unchecked(theta);
        let b = coeffs.b_at(&g);
        let theta_dot = y[1] / b;
        let p_dot = 0.5 * y[1] * y[1] * coeffs.db_at(&g) / (b * b) - coeffs.dpotential_at(&g, ell);
        let psi_dot = psi_rate_at(coeffs, &g, ell);
        let [vx, vy] = contact_velocity_at(&g, theta_dot, psi_dot, y[3]);
        Ok([theta_dot, p_dot, psi_dot, -g.cos * psi_dot, vx, vy])
    };

    let mut pose = [initial.psi, initial.phi, initial.x, initial.y];
    let mut samples = Vec::with_capacity(traj.samples.len());
    for (k, s) in traj.samples.iter().enumerate() {
        if k > 0 {
            let prev = &traj.samples[k - 1];
            let y0 = [prev.theta, prev.p_theta, pose[0], pose[1], pose[2], pose[3]];
            let y1 = rk4_step(&mut f, prev.t, &y0, s.t - prev.t).map_err(|e| match e {
                Error::Singularity { t, theta, .. } => Error::Singularity {
                    t,
                    theta,
                    last_t: prev.t,
                    last_theta: prev.theta,
                },
                other => other,
            })?;
            pose = [y1[2], y1[3], y1[4], y1[5]];
        }
        samples.push(full_sample(coeffs, s.t, s.theta, s.p_theta, ell, s.energy, pose));
    }
    Ok(FullTrajectory { samples })
}

/// Least-squares circle through planar points: `(centre, radius, rms of the
/// radial residuals)`. Algebraic fit refined by Gauss–Newton on the geometric
/// distance.
pub fn fit_circle(points: &[(f64, f64)]) -> Option<((f64, f64), f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    // Algebraic fit of u² + v² + D u + E v + F = 0 in centred coordinates.
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(x, y) in points {
        let (u, v) = (x - mx, y - my);
        let row = Vector3::new(u, v, 1.0);
        ata += row * row.transpose();
        atb += row * -(u * u + v * v);
    }
    let sol = ata.lu().solve(&atb)?;
    let (mut a, mut b) = (-0.5 * sol[0], -0.5 * sol[1]);
    let mut radius = (a * a + b * b - sol[2]).max(0.0).sqrt();

    for _ in 0..50 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for &(x, y) in points {
            let (du, dv) = (x - mx - a, y - my - b);
            let d = du.hypot(dv);
            if d == 0.0 {
                continue;
            }
            let j = Vector3::new(-du / d, -dv / d, -1.0);
            let res = d - radius;
            jtj += j * j.transpose();
            jtr += j * res;
        }
        let Some(delta) = jtj.lu().solve(&(-jtr)) else {
            break;
        };
        a += delta[0];
        b += delta[1];
        radius += delta[2];
        if delta.norm() < 1e-15 * radius.abs().max(1.0) {
            break;
        }
    }
    let rms = (points
        .iter()
        .map(|&(x, y)| ((x - mx - a).hypot(y - my - b) - radius).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some(((a + mx, b + my), radius, rms))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::body::BodyParams;
    use crate::ode::Method;
    use crate::reduced::{find_equilibria, integrate_reduced, ReducedState};
    use crate::surface::SurfaceProfile;

    fn torus() -> Coefficients {
        let body = BodyParams::new(1.0, 0.65625, 0.6875, 1.0).unwrap();
        Coefficients::from_profile(&SurfaceProfile::torus(1.0, 0.5), body).unwrap()
    }

    #[test]
    fn psi_rate_recovers_ell() {
        let c = torus();
        assert_eq!(psi_rate(&c, 0.7, 0.0).unwrap(), 0.0);
        for &(th, l) in &[(0.3, 0.1), (1.1, -0.8), (2.9, 3.0)] {
            let w = psi_rate(&c, th, l).unwrap();
            let back = c.nose(th).unwrap() * th.sin().powi(2) * w;
            assert!((back - l).abs() < 1e-14 * l.abs().max(1.0));
        }
    }

    #[test]
    fn phi_rate_signs() {
        assert!(phi_rate(FRAC_PI_2, 2.0).abs() < 1e-15);
        assert!(phi_rate(0.5, 1.0) < 0.0);
        let (th, w) = (0.8f64, 1.3);
        let omega3 = phi_rate(th, w) * th.cos() + w;
        assert!((omega3 - th.sin().powi(2) * w).abs() < 1e-15);
    }

    #[test]
    fn contact_velocity_axes() {
        let c = torus();
        let geo = c.geometry();
        assert_eq!(contact_velocity(geo, 0.9, 0.0, 0.0, 0.4).unwrap(), (0.0, 0.0));
        let (th, td, pd) = (0.9f64, 0.3, -1.2);
        let (vx, vy) = contact_velocity(geo, th, td, pd, 0.0).unwrap();
        let h = 1.0 + 0.5 * th.sin();
        assert!((vx + h * pd).abs() < 1e-15);
        assert!((vy + 0.5 * td).abs() < 1e-15);
    }

    #[test]
    fn attitude_is_a_rotation() {
        assert_eq!(attitude(0.0, 0.0, 0.0), Matrix3::identity());
        let r = attitude(0.3, 1.1, -2.0);
        assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-14);
        assert!((r.determinant() - 1.0).abs() < 1e-14);
        let (st, ct) = 1.1f64.sin_cos();
        let (sp, cp) = (-2.0f64).sin_cos();
        assert!((r.row(2) - nalgebra::RowVector3::new(st * sp, st * cp, ct)).norm() < 1e-15);
    }

    #[test]
    fn steady_circle_limits() {
        let c = torus();
        assert_eq!(steady_circle(c.geometry(), FRAC_PI_2).unwrap(), SteadyCircle::Infinite);
        let near_flat = steady_circle(c.geometry(), 1e-3).unwrap().radius().unwrap();
        assert!(near_flat > 1.0 && near_flat < 1.001);
        for th in [0.2, 0.7, 1.3] {
            let r = steady_circle(c.geometry(), th).unwrap().radius().unwrap();
            assert!(r / c.geometry().eval(th).unwrap().h >= 1.0);
        }
    }

    #[test]
    fn equilibrium_track_is_the_steady_circle() {
        let c = torus();
        let eq = find_equilibria(&c, 0.1)[0];
        let traj = integrate_reduced(&c, &ReducedState::new(eq.theta, 0.0, 0.1), 30.0, 1e-3, Method::Rk4).unwrap();
        let full = reconstruct(&c, &traj, PlanarPose::default()).unwrap();
        let (_, radius, rms) = fit_circle(&full.contact_track()).unwrap();
        let expect = steady_circle(c.geometry(), eq.theta).unwrap().radius().unwrap();
        assert!((radius - expect).abs() < 1e-6, "{radius} vs {expect}");
        assert!(rms < 1e-6);
        let s = full.samples[100];
        let g = c.geometry().eval(eq.theta).unwrap();
        assert!((s.x_dot.hypot(s.y_dot) - g.h * s.psi_dot.abs()).abs() < 1e-12);
    }

    #[test]
    fn static_equilibrium_stays_put() {
        let c = torus();
        let traj = integrate_reduced(&c, &ReducedState::new(FRAC_PI_2, 0.0, 0.0), 5.0, 1e-2, Method::Rk4).unwrap();
        let full = reconstruct(
            &c,
            &traj,
            PlanarPose {
                psi: 0.1,
                phi: 0.2,
                x: 1.0,
                y: -1.0,
            },
        )
        .unwrap();
        for s in &full.samples {
            assert_eq!((s.psi, s.phi, s.x, s.y), (0.1, 0.2, 1.0, -1.0));
        }
    }

    #[test]
    fn residuals_and_ell_along_generic_motion() {
        let c = torus();
        let traj = integrate_reduced(&c, &ReducedState::new(1.0, 0.2, 0.3), 10.0, 1e-3, Method::Rk4).unwrap();
        let full = reconstruct(&c, &traj, PlanarPose::default()).unwrap();
        let (twist, slip) = full.max_residuals();
        assert!(twist < 1e-9 && slip < 1e-8);
        assert!(full.ell_drift() < 1e-9);
        assert!(full.samples.iter().all(|s| s.valid));
    }

    #[test]
    fn circle_fit_recovers_noisy_free_circle() {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let a = 0.3 + k as f64 * PI / 50.0;
                (2.0 + 1.5 * a.cos(), -1.0 + 1.5 * a.sin())
            })
            .collect();
        let ((cx, cy), r, rms) = fit_circle(&pts).unwrap();
        assert!((cx - 2.0).abs() < 1e-12 && (cy + 1.0).abs() < 1e-12);
        assert!((r - 1.5).abs() < 1e-12 && rms < 1e-12);
    }
}
