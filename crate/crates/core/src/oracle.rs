//! Unreduced constrained dynamics on `q = (θ, ψ, φ, x, y)`.
//!
//! The kinetic energy of the free (skidding) body is
//!
//! ```text
//! T = ½ m (ẋ_C² + ẏ_C² + Λ² θ̇²) + ½ I1 (θ̇² + φ̇² sin²θ) + ½ I3 (ψ̇ + φ̇ cos θ)²
//! (ẋ_C, ẏ_C) = (ẋ, ẏ) − Λ φ̇ e_N + Λ' θ̇ e_N⊥
//! ```
//!
//! with `V = m g z_C`. No-twist and no-slip enter through multipliers:
//! `M q̈ + b(q, q̇) = Gᵀ λ`, `G q̇ = 0`. Accelerations come from the saddle
//! system `[M Gᵀ; G 0][q̈; λ] = [−b; −Ġ q̇]`; there is no constraint
//! stabilisation, drift is only monitored.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::body::BodyParams;
use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::ode::{output_grid, rk4_step};
use crate::reconstruction::{constraint_residuals, psi_rate, PlanarPose};
use crate::reduced::{ReducedState, SIN_GUARD};
use crate::surface::ContactGeometry;
use crate::trajectory::{FullSample, FullTrajectory};

pub type Coords = [f64; 5];
pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Vector5 = SVector<f64, 5>;
pub type Jacobian = SMatrix<f64, 3, 5>;

/// Largest `|G q̇|` tolerated after a step.
pub const DRIFT_LIMIT: f64 = 1e-6;
/// Largest `|G q̇|` accepted for initial data.
pub const INITIAL_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullInitial {
    pub q: Coords,
    pub qd: Coords,
}

impl FullInitial {
    /// Full state on the constraint distribution matching a reduced state:
    /// `θ̇ = p_θ/B`, `ψ̇ = ℓ/(N sin²θ)`, `φ̇ = −cos θ ψ̇`, `(ẋ, ẏ)` from
    /// no-slip.
    pub fn matched(coeffs: &Coefficients, state: &ReducedState, pose: PlanarPose) -> Result<Self> {
        let g = coeffs.geometry().eval(state.theta)?;
        let theta_dot = state.p_theta / coeffs.b_at(&g);
        let psi_dot = psi_rate(coeffs, state.theta, state.ell)?;
        let (s, c) = pose.phi.sin_cos();
        Ok(Self {
            q: [state.theta, pose.psi, pose.phi, pose.x, pose.y],
            qd: [
                theta_dot,
                psi_dot,
                -g.cos * psi_dot,
                -g.h * psi_dot * c + g.r * theta_dot * s,
                -g.h * psi_dot * s - g.r * theta_dot * c,
            ],
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    coeffs: Coefficients,
}

impl ConstrainedSystem {
    pub fn new(coeffs: Coefficients) -> Self {
        Self { coeffs }
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    fn body(&self) -> &BodyParams {
        self.coeffs.body()
    }

    fn geom(&self, theta: f64) -> Result<ContactGeometry> {
        self.coeffs.geometry().eval(theta)
    }

    /// Columns of the horizontal centre-of-mass velocity map, `ẋ_C = J q̇`.
    fn com_jacobian(g: &ContactGeometry, phi: f64) -> SMatrix<f64, 2, 5> {
        let (s, c) = phi.sin_cos();
        SMatrix::<f64, 2, 5>::new(
            -g.dlambda * s,
            0.0,
            -g.lambda * c,
            1.0,
            0.0,
            g.dlambda * c,
            0.0,
            -g.lambda * s,
            0.0,
            1.0,
        )
    }

    pub fn mass_matrix(&self, q: &Coords) -> Result<Matrix5> {
        let g = self.geom(q[0])?;
        Ok(self.mass_matrix_at(&g, q[2]))
    }

    fn mass_matrix_at(&self, g: &ContactGeometry, phi: f64) -> Matrix5 {
        let BodyParams { m, i1, i3, .. } = *self.body();
        let j = Self::com_jacobian(g, phi);
        let mut mm = j.transpose() * j * m;
        mm[(0, 0)] += m * g.lambda * g.lambda + i1;
        mm[(1, 1)] += i3;
        mm[(1, 2)] += i3 * g.cos;
        mm[(2, 1)] += i3 * g.cos;
        mm[(2, 2)] += i1 * g.sin * g.sin + i3 * g.cos * g.cos;
        mm
    }

    /// Velocity-dependent and gravitational terms `b` in `M q̈ + b = Gᵀλ`.
    pub fn bias(&self, q: &Coords, qd: &Coords) -> Result<Vector5> {
        let g = self.geom(q[0])?;
        Ok(self.bias_at(&g, q, qd))
    }

    fn bias_at(&self, g: &ContactGeometry, q: &Coords, qd: &Coords) -> Vector5 {
        let BodyParams { m, i1, i3, g: grav } = *self.body();
        let (sf, cf) = q[2].sin_cos();
        let [td, pd, fd, _, _] = *qd;
        let (s, c) = (g.sin, g.cos);
        let (lam, dlam, ddlam) = (g.lambda, g.dlambda, g.d2lambda());
        // J̇ q̇ for the horizontal centre-of-mass velocity.
        let a_perp = ddlam * td * td - lam * fd * fd;
        let a_n = -2.0 * dlam * td * fd;
        let jdot_qd = SVector::<f64, 2>::new(a_perp * -sf + a_n * cf, a_perp * cf + a_n * sf);
        let mut b = Self::com_jacobian(g, q[2]).transpose() * jdot_qd * m;
        let omega3 = pd + fd * c;
        b[0] += m * lam * dlam * td * td - i1 * fd * fd * s * c + i3 * omega3 * fd * s + m * grav * lam;
        b[1] += -i3 * fd * td * s;
        b[2] += 2.0 * i1 * fd * td * s * c - i3 * c * fd * td * s - i3 * omega3 * td * s;
        b
    }

    /// Generalised forces `f = −b`.
    pub fn forces(&self, q: &Coords, qd: &Coords) -> Result<Vector5> {
        self.bias(q, qd).map(|b| -b)
    }

    /// `(T, V)` from the explicit kinetic-energy formula.
    pub fn lagrangian(&self, q: &Coords, qd: &Coords) -> Result<(f64, f64)> {
        let g = self.geom(q[0])?;
        let BodyParams { m, i1, i3, g: grav } = *self.body();
        let (sf, cf) = q[2].sin_cos();
        let [td, pd, fd, xd, yd] = *qd;
        let vx = xd - g.lambda * fd * cf - g.dlambda * td * sf;
        let vy = yd - g.lambda * fd * sf + g.dlambda * td * cf;
        let vz = g.lambda * td;
        let t_lin = 0.5 * m * (vx * vx + vy * vy + vz * vz);
        let omega3 = pd + fd * g.cos;
        let t_ang = 0.5 * i1 * (td * td + fd * fd * g.sin * g.sin) + 0.5 * i3 * omega3 * omega3;
        Ok((t_lin + t_ang, m * grav * g.z_c))
    }

    pub fn energy(&self, q: &Coords, qd: &Coords) -> Result<f64> {
        self.lagrangian(q, qd).map(|(t, v)| t + v)
    }

    /// `ℓ = N(θ)(φ̇ cos θ + ψ̇)`.
    pub fn ell_full(&self, q: &Coords, qd: &Coords) -> Result<f64> {
        let g = self.geom(q[0])?;
        Ok(self.coeffs.nose_sq_at(&g).sqrt() * (qd[2] * g.cos + qd[1]))
    }

    /// Rows: no-twist, no-slip x, no-slip y.
    pub fn constraint_jacobian(&self, q: &Coords) -> Result<Jacobian> {
        let g = self.geom(q[0])?;
        Ok(Self::jacobian_at(&g, q[2]))
    }

    fn jacobian_at(g: &ContactGeometry, phi: f64) -> Jacobian {
        let (sf, cf) = phi.sin_cos();
        Jacobian::new(
            0.0,
            g.cos,
            1.0,
            0.0,
            0.0, //
            -g.r * sf,
            g.h * cf,
            0.0,
            1.0,
            0.0, //
            g.r * cf,
            g.h * sf,
            0.0,
            0.0,
            1.0,
        )
    }

    /// `Ġ q̇` from closed-form derivatives (`h' = r cos θ`).
    pub fn constraint_bias(&self, q: &Coords, qd: &Coords) -> Result<SVector<f64, 3>> {
        let g = self.geom(q[0])?;
        Ok(Self::constraint_bias_at(&g, q, qd))
    }

    fn constraint_bias_at(g: &ContactGeometry, q: &Coords, qd: &Coords) -> SVector<f64, 3> {
        let (sf, cf) = q[2].sin_cos();
        let [td, pd, fd, _, _] = *qd;
        let dh = g.r * g.cos;
        SVector::<f64, 3>::new(
            -g.sin * td * pd,
            -(g.dr * td * sf + g.r * cf * fd) * td + (dh * td * cf - g.h * sf * fd) * pd,
            (g.dr * td * cf - g.r * sf * fd) * td + (dh * td * sf + g.h * cf * fd) * pd,
        )
    }

    fn solve_saddle(&self, g: &ContactGeometry, q: &Coords, qd: &Coords) -> Result<(Vector5, SVector<f64, 3>)> {
        let mm = self.mass_matrix_at(g, q[2]);
        let gg = Self::jacobian_at(g, q[2]);
        let mut k = SMatrix::<f64, 8, 8>::zeros();
        k.fixed_view_mut::<5, 5>(0, 0).copy_from(&mm);
        k.fixed_view_mut::<5, 3>(0, 5).copy_from(&gg.transpose());
        k.fixed_view_mut::<3, 5>(5, 0).copy_from(&gg);
        let mut rhs = SVector::<f64, 8>::zeros();
        rhs.fixed_rows_mut::<5>(0).copy_from(&-self.bias_at(g, q, qd));
        rhs.fixed_rows_mut::<3>(5)
            .copy_from(&-Self::constraint_bias_at(g, q, qd));
        let sol = k.lu().solve(&rhs).ok_or(Error::SingularMatrix)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix);
        }
        Ok((sol.fixed_rows::<5>(0).into(), sol.fixed_rows::<3>(5).into()))
    }

    /// `(q̈, λ)`.
    pub fn accelerations(&self, q: &Coords, qd: &Coords) -> Result<(Vector5, SVector<f64, 3>)> {
        let g = self.geom(q[0])?;
        self.solve_saddle(&g, q, qd)
    }

    fn derivative(&self, t: f64, y: &[f64; 10]) -> Result<[f64; 10]> {
        let theta = y[0];
        if !theta.is_finite() || !self.coeffs.geometry().domain().contains(theta) || theta.sin() < SIN_GUARD {
            return Err(Error::Singularity {
                t,
                theta,
                last_t: t,
                last_theta: theta,
            });
        }
        let g = self.coeffs.geometry().eval_unchecked(theta);
        let q: Coords = std::array::from_fn(|i| y[i]);
        let qd: Coords = std::array::from_fn(|i| y[5 + i]);
        let (qdd, _) = self.solve_saddle(&g, &q, &qd)?;
        Ok(std::array::from_fn(|i| if i < 5 { qd[i] } else { qdd[i - 5] }))
    }

    fn residual_norm(&self, q: &Coords, qd: &Coords) -> Result<f64> {
        let gg = self.constraint_jacobian(q)?;
        Ok((gg * Vector5::from_column_slice(qd)).norm())
    }

    /// One RK4 step of the multiplier dynamics; fails if `|G q̇|` exceeds
    /// [`DRIFT_LIMIT`] afterwards.
    pub fn step_constrained(&self, q: &Coords, qd: &Coords, dt: f64) -> Result<(Coords, Coords)> {
        self.step_at(0.0, q, qd, dt)
    }

    fn step_at(&self, t: f64, q: &Coords, qd: &Coords, dt: f64) -> Result<(Coords, Coords)> {
        let y0: [f64; 10] = std::array::from_fn(|i| if i < 5 { q[i] } else { qd[i - 5] });
        let y1 = rk4_step(&mut |t, y: &[f64; 10]| self.derivative(t, y), t, &y0, dt)?;
        let q1: Coords = std::array::from_fn(|i| y1[i]);
        let qd1: Coords = std::array::from_fn(|i| y1[5 + i]);
        let residual = self.residual_norm(&q1, &qd1)?;
        if !(residual <= DRIFT_LIMIT) {
            return Err(Error::ConstraintDrift {
                t: t + dt,
                residual,
                limit: DRIFT_LIMIT,
            });
        }
        Ok((q1, qd1))
    }

    fn sample(&self, t: f64, q: &Coords, qd: &Coords) -> Result<FullSample> {
        let g = self.geom(q[0])?;
        let (res_notwist, res_noslip) = constraint_residuals(&g, q, qd);
        Ok(FullSample {
            t,
            theta: q[0],
            psi: q[1],
            phi: q[2],
            x: q[3],
            y: q[4],
            theta_dot: qd[0],
            psi_dot: qd[1],
            phi_dot: qd[2],
            x_dot: qd[3],
            y_dot: qd[4],
            energy: self.energy(q, qd)?,
            ell: self.ell_full(q, qd)?,
            res_notwist,
            res_noslip,
            valid: g.sin >= SIN_GUARD,
        })
    }

    /// Fixed-step RK4 on the uniform grid `0, dt, …, t_end`.
    pub fn integrate_full(&self, initial: &FullInitial, t_end: f64, dt: f64) -> Result<FullTrajectory> {
        let grid = output_grid(t_end, dt)?;
        let (mut q, mut qd) = (initial.q, initial.qd);
        let residual = self.residual_norm(&q, &qd)?;
        if residual > INITIAL_RESIDUAL {
            return Err(Error::InvalidArgument(format!(
                "initial velocity violates the constraints (|G q̇| = {residual:e})"
            )));
        }
        let mut samples = Vec::with_capacity(grid.len());
        samples.push(self.sample(0.0, &q, &qd)?);
        for w in grid.windows(2) {
            let (q1, qd1) = self.step_at(w[0], &q, &qd, w[1] - w[0]).map_err(|e| match e {
                Error::Singularity { t, theta, .. } => Error::Singularity {
                    t,
                    theta,
                    last_t: w[0],
                    last_theta: q[0],
                },
                other => other,
            })?;
            q = q1;
            qd = qd1;
            samples.push(self.sample(w[1], &q, &qd)?);
        }
        Ok(FullTrajectory { samples })
    }

    /// `M`-orthogonal projection of `q̇_raw` onto `ker G`:
    /// `q̇ = q̇_raw − M⁻¹Gᵀ (G M⁻¹ Gᵀ)⁻¹ G q̇_raw`.
    pub fn velocity_projection(&self, q: &Coords, qd_raw: &Coords) -> Result<Coords> {
        let g = self.geom(q[0])?;
        let mm = self.mass_matrix_at(&g, q[2]);
        let gg = Self::jacobian_at(&g, q[2]);
        let m_lu = mm.lu();
        let m_inv_gt = m_lu.solve(&gg.transpose()).ok_or(Error::SingularMatrix)?;
        let schur = gg * m_inv_gt;
        let v = Vector5::from_column_slice(qd_raw);
        let mu = schur.lu().solve(&(gg * v)).ok_or(Error::SingularMatrix)?;
        let out = v - m_inv_gt * mu;
        Ok(std::array::from_fn(|i| out[i]))
    }
}

/// Horizontal lifts of `∂_θ` and `∂_ψ` to the constraint distribution:
/// `h_θ = ∂_θ − r e_N⊥`, `h_ψ = ∂_ψ − h e_N − cos θ ∂_φ`.
pub fn horizontal_lifts(g: &ContactGeometry, phi: f64) -> (Coords, Coords) {
    let (sf, cf) = phi.sin_cos();
    (
        [1.0, 0.0, 0.0, g.r * sf, -g.r * cf],
        [0.0, 1.0, -g.cos, -g.h * cf, -g.h * sf],
    )
}
