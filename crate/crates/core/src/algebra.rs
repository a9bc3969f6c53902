//! Numerical checks of the structure behind the reduction.
//!
//! All identities are scalar statements on the `(θ, ψ)` base:
//!
//! ```text
//! [h_θ, h_ψ] = sin θ ∂_φ + (r cos θ − h') e_N       (second term vanishes)
//! J·K(∂_θ, ∂_ψ) = −p_ψ n(θ) = −P_φ sin θ
//! d(N⁻¹ Ω) = 0   ⇔   n = N'/N
//! Φ = −log N,  Φ' = −n,  f_θ^{θψ} = 0,  f_ψ^{θψ} = −n
//! ```

use std::sync::Arc;

use serde::Serialize;

use crate::coefficients::{Coefficients, NoseModel, POLE_EPS};
use crate::error::{Error, Result};
use crate::oracle::{horizontal_lifts, ConstrainedSystem, Coords, Vector5};
use crate::surface::Geometry;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Horizontal lifts of the base coordinate fields.
#[derive(Debug, Clone)]
pub struct ConnectionFrame {
    geometry: Arc<Geometry>,
}

impl ConnectionFrame {
    pub fn new(geometry: Arc<Geometry>) -> Self {
        Self { geometry }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// `h_θ = ∂_θ − r e_N⊥`.
    pub fn h_theta(&self, q: &Coords) -> Result<Coords> {
        let g = self.geometry.eval(q[0])?;
        Ok(horizontal_lifts(&g, q[2]).0)
    }

    /// `h_ψ = ∂_ψ − h e_N − cos θ ∂_φ`.
    pub fn h_psi(&self, q: &Coords) -> Result<Coords> {
        let g = self.geometry.eval(q[0])?;
        Ok(horizontal_lifts(&g, q[2]).1)
    }

    fn lifts_unchecked(&self, q: &Coords) -> (Coords, Coords) {
        horizontal_lifts(&self.geometry.eval_unchecked(q[0]), q[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketCurvature {
    /// `∂_φ` component of `[h_θ, h_ψ]`.
    pub phi_coefficient: f64,
    /// Norm of the `θ, ψ, x, y` components.
    pub residual_norm: f64,
    /// Planar component along `e_N`.
    pub e_n_component: f64,
    pub bracket: Coords,
}

/// `[h_θ, h_ψ] = Dh_ψ · h_θ − Dh_θ · h_ψ` with central-difference Jacobians.
pub fn bracket_curvature(frame: &ConnectionFrame, q: &Coords, step: f64) -> Result<BracketCurvature> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step {step} must be positive")));
    }
    frame.geometry.domain().check(q[0])?;
    let directional = |field: usize, dir: &Coords| -> Coords {
        let shifted = |sign: f64| {
            let p: Coords = std::array::from_fn(|i| q[i] + sign * step * dir[i]);
            let (a, b) = frame.lifts_unchecked(&p);
            if field == 0 {
                a
            } else {
                b
            }
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        std::array::from_fn(|i| (plus[i] - minus[i]) / (2.0 * step))
    };
    let (ht, hp) = frame.lifts_unchecked(q);
    let d_hp_ht = directional(1, &ht);
    let d_ht_hp = directional(0, &hp);
    let bracket: Coords = std::array::from_fn(|i| d_hp_ht[i] - d_ht_hp[i]);
    let (sf, cf) = q[2].sin_cos();
    let residual_norm = [bracket[0], bracket[1], bracket[3], bracket[4]]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    Ok(BracketCurvature {
        phi_coefficient: bracket[2],
        residual_norm,
        e_n_component: bracket[3] * cf + bracket[4] * sf,
        bracket,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JkRoutes {
    /// `−p_ψ C sin θ / A = −p_ψ n`.
    pub via_gyroscopic: f64,
    /// `−P_φ sin θ`, `P_φ` read off the full mass matrix on the horizontal
    /// lift of `(θ̇, p_ψ/A)`.
    pub via_momentum: f64,
}

impl JkRoutes {
    pub fn discrepancy(&self) -> f64 {
        (self.via_gyroscopic - self.via_momentum).abs()
    }
}

/// `P_φ` at `φ = 0` for the constrained velocity with rates `(θ̇, ψ̇)`.
fn p_phi(system: &ConstrainedSystem, theta: f64, theta_dot: f64, psi_dot: f64) -> Result<f64> {
    let q = [theta, 0.0, 0.0, 0.0, 0.0];
    let g = system.coefficients().geometry().eval(theta)?;
    let (ht, hp) = horizontal_lifts(&g, 0.0);
    let qd = Vector5::from_fn(|i, _| theta_dot * ht[i] + psi_dot * hp[i]);
    Ok((system.mass_matrix(&q)? * qd)[2])
}

/// `J·K` on `(∂_θ, ∂_ψ)` computed twice. `model` supplies `n(θ)` for the
/// first route; the second uses only the mass matrix of the full system.
pub fn jk_coefficient(coeffs: &Coefficients, model: &dyn NoseModel, theta: f64, p_psi: f64) -> Result<JkRoutes> {
    let g = coeffs.geometry().eval(theta)?;
    if g.sin.abs() < POLE_EPS {
        return Err(Error::Pole { theta });
    }
    let via_gyroscopic = -p_psi * model.n_func(theta)?;
    let a = coeffs.nose_sq_at(&g) * g.sin * g.sin;
    let system = ConstrainedSystem::new(coeffs.clone());
    // θ̇ does not enter P_φ; any value will do.
    let via_momentum = -p_phi(&system, theta, 0.37, p_psi / a)? * g.sin;
    Ok(JkRoutes {
        via_gyroscopic,
        via_momentum,
    })
}

fn log_nose_derivative(model: &dyn NoseModel, theta: f64, step: f64) -> Result<f64> {
    let plus = model.nose(theta + step)?.ln();
    let minus = model.nose(theta - step)?.ln();
    Ok((plus - minus) / (2.0 * step))
}

/// `|n(θ) − (log N)'(θ)|`, the scalar form of `d(N⁻¹Ω) = 0`.
pub fn conformal_check(model: &dyn NoseModel, theta: f64, step: f64) -> Result<f64> {
    Ok((model.n_func(theta)? - log_nose_derivative(model, theta, step)?).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiSimple {
    /// `Φ = −log N`.
    pub phi: f64,
    /// `|Φ' + n|`.
    pub potential_residual: f64,
    /// `∂(J·K)/∂p_θ`.
    pub f_theta: f64,
    /// `∂(J·K)/∂p_ψ`.
    pub f_psi: f64,
    /// `max(|f_θ|, |f_ψ + n|)`.
    pub tensor_residual: f64,
}

/// Gyroscopic-tensor check. `J·K` coefficients come from the mass-matrix
/// route so they are independent of `model`.
pub fn phi_simple_check(coeffs: &Coefficients, model: &dyn NoseModel, theta: f64, step: f64) -> Result<PhiSimple> {
    let n = model.n_func(theta)?;
    let phi = -model.nose(theta)?.ln();
    let dphi = -log_nose_derivative(model, theta, step)?;

    let g = coeffs.geometry().eval(theta)?;
    if g.sin.abs() < POLE_EPS {
        return Err(Error::Pole { theta });
    }
    let system = ConstrainedSystem::new(coeffs.clone());
    let a = coeffs.nose_sq_at(&g) * g.sin * g.sin;
    let b = coeffs.b_at(&g);
    let jk = |p_theta: f64, p_psi: f64| -> Result<f64> { Ok(-p_phi(&system, theta, p_theta / b, p_psi / a)? * g.sin) };
    let f_theta = (jk(1.0, 0.5)? - jk(-1.0, 0.5)?) / 2.0;
    let f_psi = jk(0.0, 1.0)? - jk(0.0, 0.0)?;
    Ok(PhiSimple {
        phi,
        potential_residual: (dphi + n).abs(),
        f_theta,
        f_psi,
        tensor_residual: f_theta.abs().max((f_psi + n).abs()),
    })
}
