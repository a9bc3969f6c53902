//! One-degree-of-freedom reduced flow in `(θ, p_θ)` at fixed `ℓ`.
//!
//! ```text
//! H̃ = ½(p_θ²/B(θ) + ℓ²/sin²θ) + m g z_C(θ)
//! θ̇ = p_θ / B
//! ṗ_θ = ½ p_θ² B'/B² + ℓ² cos θ / sin³θ − m g Λ
//! ```
//!
//! In the rescaled time `τ` with `dt = √B dτ` and `p̃ = p_θ/√B` the flow is
//! the classical `θ'' = −Ṽ'(θ)`.

mod equilibria;
mod phase;

pub use equilibria::{
    bifurcation_scan, equilibrium_residual, find_equilibria, BifurcationDiagram, BifurcationKind, BifurcationPoint,
    BifurcationRow, Equilibrium, Stability,
};
pub use phase::{phase_portrait, Contour, PhaseGrid};

use serde::{Deserialize, Serialize};

use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::ode::{dopri_advance, output_grid, rk4_step, Method};
use crate::surface::ContactGeometry;
use crate::trajectory::{ReducedSample, ReducedTrajectory, TauSample, TauTrajectory};

/// Integrators abort once `sin θ` drops below this.
pub const SIN_GUARD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub theta: f64,
    pub p_theta: f64,
    pub ell: f64,
    pub t: f64,
}

impl ReducedState {
    pub fn new(theta: f64, p_theta: f64, ell: f64) -> Self {
        Self {
            theta,
            p_theta,
            ell,
            t: 0.0,
        }
    }
}

fn energy_at(coeffs: &Coefficients, g: &ContactGeometry, p: f64, ell: f64) -> f64 {
    0.5 * p * p / coeffs.b_at(g) + coeffs.potential_at(g, ell)
}

fn rates_at(coeffs: &Coefficients, g: &ContactGeometry, p: f64, ell: f64) -> [f64; 2] {
    let b = coeffs.b_at(g);
    let db = coeffs.db_at(g);
    [p / b, 0.5 * p * p * db / (b * b) - coeffs.dpotential_at(g, ell)]
}

fn off_pole(coeffs: &Coefficients, theta: f64, ell: f64) -> Result<ContactGeometry> {
    let g = coeffs.geometry().eval(theta)?;
    if ell != 0.0 && g.sin.abs() < crate::coefficients::POLE_EPS {
        return Err(Error::Pole { theta });
    }
    Ok(g)
}

/// `H̃(θ, p_θ; ℓ)`.
pub fn hamiltonian(coeffs: &Coefficients, state: &ReducedState) -> Result<f64> {
    let g = off_pole(coeffs, state.theta, state.ell)?;
    Ok(energy_at(coeffs, &g, state.p_theta, state.ell))
}

/// `(θ̇, ṗ_θ)` from the closed-form `B'` and `Λ = dz_C/dθ`.
pub fn rhs(coeffs: &Coefficients, state: &ReducedState) -> Result<(f64, f64)> {
    let g = off_pole(coeffs, state.theta, state.ell)?;
    let [a, b] = rates_at(coeffs, &g, state.p_theta, state.ell);
    Ok((a, b))
}

/// Geometry at `θ` if the chart guard and the domain allow integrating there.
fn guarded(coeffs: &Coefficients, theta: f64) -> Option<ContactGeometry> {
    if !theta.is_finite() || !coeffs.geometry().domain().contains(theta) {
        return None;
    }
    let g = coeffs.geometry().eval_unchecked(theta);
    (g.sin >= SIN_GUARD).then_some(g)
}

struct Breach {
    t: f64,
    theta: f64,
}

fn sample(coeffs: &Coefficients, t: f64, y: [f64; 2], ell: f64) -> ReducedSample {
    let g = coeffs.geometry().eval_unchecked(y[0]);
    ReducedSample {
        t,
        theta: y[0],
        p_theta: y[1],
        theta_dot: y[1] / coeffs.b_at(&g),
        energy: energy_at(coeffs, &g, y[1], ell),
    }
}

/// Integrate on the uniform grid `t0, t0 + dt, …, t0 + t_end`. On a guard
/// breach the samples reached so far are returned together with the
/// [`Error::Singularity`] describing the breach.
pub fn integrate_reduced_partial(
    coeffs: &Coefficients,
    initial: &ReducedState,
    t_end: f64,
    dt: f64,
    method: Method,
) -> (ReducedTrajectory, Option<Error>) {
    let ell = initial.ell;
    let mut traj = ReducedTrajectory {
        ell,
        dt,
        samples: Vec::new(),
    };
    let grid = match output_grid(t_end, dt) {
        Ok(g) => g,
        Err(e) => return (traj, Some(e)),
    };
    if let Err(e) = coeffs.geometry().domain().check(initial.theta) {
        return (traj, Some(e));
    }
    let t0 = initial.t;
    if guarded(coeffs, initial.theta).is_none() {
        let err = Error::Singularity {
            t: t0,
            theta: initial.theta,
            last_t: t0,
            last_theta: initial.theta,
        };
        return (traj, Some(err));
    }

    let mut f = |t: f64, y: &[f64; 2]| -> Result<[f64; 2], Breach> {
        let g = guarded(coeffs, y[0]).ok_or(Breach { t, theta: y[0] })?;
        Ok(rates_at(coeffs, &g, y[1], ell))
    };

    let mut y = [initial.theta, initial.p_theta];
    traj.samples.reserve(grid.len());
    traj.samples.push(sample(coeffs, t0, y, ell));
    let mut h_adaptive = dt;
    for w in grid.windows(2) {
        let (ta, tb) = (t0 + w[0], t0 + w[1]);
        let singular = |b: Breach| Error::Singularity {
            t: b.t,
            theta: b.theta,
            last_t: ta,
            last_theta: y[0],
        };
        let step = match method {
            Method::Rk4 => rk4_step(&mut f, ta, &y, tb - ta).map_err(singular),
            Method::AdaptiveRk45 { atol, rtol } => {
                let mut fa = |t: f64, s: &[f64; 2]| f(t, s).map_err(singular);
                dopri_advance(&mut fa, ta, tb, &y, &mut h_adaptive, atol, rtol)
            }
        };
        let next = match step {
            Ok(v) if guarded(coeffs, v[0]).is_some() => v,
            Ok(v) => return (traj, Some(singular(Breach { t: tb, theta: v[0] }))),
            Err(e) => return (traj, Some(e)),
        };
        y = next;
        traj.samples.push(sample(coeffs, tb, y, ell));
    }
    (traj, None)
}

pub fn integrate_reduced(
    coeffs: &Coefficients,
    initial: &ReducedState,
    t_end: f64,
    dt: f64,
    method: Method,
) -> Result<ReducedTrajectory> {
    match integrate_reduced_partial(coeffs, initial, t_end, dt, method) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// RK4 on `(θ, p̃, t)` with `θ' = p̃`, `p̃' = −Ṽ'(θ)`, `t' = √B(θ)`.
pub fn integrate_tau(coeffs: &Coefficients, initial: &ReducedState, tau_end: f64, dtau: f64) -> Result<TauTrajectory> {
    let ell = initial.ell;
    let grid = output_grid(tau_end, dtau)?;
    coeffs.geometry().domain().check(initial.theta)?;
    let g0 = guarded(coeffs, initial.theta).ok_or(Error::Singularity {
        t: initial.t,
        theta: initial.theta,
        last_t: initial.t,
        last_theta: initial.theta,
    })?;

    let tau_sample = |tau: f64, y: &[f64; 3]| {
        let g = coeffs.geometry().eval_unchecked(y[0]);
        TauSample {
            tau,
            t: y[2],
            theta: y[0],
            p_tilde: y[1],
            energy: 0.5 * y[1] * y[1] + coeffs.potential_at(&g, ell),
        }
    };
    let mut f = |tau: f64, y: &[f64; 3]| -> Result<[f64; 3], Breach> {
        let g = guarded(coeffs, y[0]).ok_or(Breach { t: tau, theta: y[0] })?;
        Ok([y[1], -coeffs.dpotential_at(&g, ell), coeffs.b_at(&g).sqrt()])
    };

    let mut y = [initial.theta, initial.p_theta / coeffs.b_at(&g0).sqrt(), initial.t];
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(tau_sample(0.0, &y));
    for w in grid.windows(2) {
        let next = rk4_step(&mut f, w[0], &y, w[1] - w[0]);
        let next = match next {
            Ok(v) if guarded(coeffs, v[0]).is_some() => v,
            Ok(v) => {
                return Err(Error::Singularity {
                    t: v[2],
                    theta: v[0],
                    last_t: y[2],
                    last_theta: y[0],
                })
            }
            Err(_) => {
                return Err(Error::Singularity {
                    t: y[2],
                    theta: y[0],
                    last_t: y[2],
                    last_theta: y[0],
                })
            }
        };
        y = next;
        samples.push(tau_sample(w[1], &y));
    }
    Ok(TauTrajectory { ell, dtau, samples })
}
