//! Compressed kinetic-energy coefficients and the Nose function.
//!
//! On the constraint distribution the kinetic energy compresses to
//! `T = ½(A ψ̇² + B θ̇²)` with
//!
//! ```text
//! N²(θ) = I1 cos²θ + I3 sin²θ + m z_C²
//! A(θ)  = N² sin²θ
//! B(θ)  = I1 + m |CP|²                   (no I3)
//! C(θ)  = ((I3 − I1) sin θ cos θ + m Λ z_C) sin θ    (P_φ = C ψ̇)
//! n(θ)  = C sin θ / A = N'/N
//! Ṽ(θ)  = ℓ²/(2 sin²θ) + m g z_C           (no I1, no I3)
//! ```
//!
//! Units: `A, B, C` in kg·m², `N` in √kg·m, `ℓ` in √kg·m/s, `Ṽ` in J.

use std::sync::Arc;

use crate::body::BodyParams;
use crate::error::{Error, Result};
use crate::surface::{ContactGeometry, Geometry, SurfaceProfile};

/// `|sin θ|` below which `1/sin θ` factors are refused.
pub const POLE_EPS: f64 = 1e-12;

/// Source of the two functions whose relation `n = d(log N)/dθ` the
/// certification suite checks.
pub trait NoseModel: Sync {
    /// `n(θ)` from the gyroscopic coefficient, `C sin θ / A`.
    fn n_func(&self, theta: f64) -> Result<f64>;
    /// `N(θ)`.
    fn nose(&self, theta: f64) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct Coefficients {
    geometry: Arc<Geometry>,
    body: BodyParams,
}

impl Coefficients {
    pub fn new(geometry: Arc<Geometry>, body: BodyParams) -> Result<Self> {
        body.validate()?;
        Ok(Self { geometry, body })
    }

    pub fn from_profile(profile: &SurfaceProfile, body: BodyParams) -> Result<Self> {
        Self::new(Arc::new(Geometry::new(profile)?), body)
    }

    /// Same geometry, different body.
    pub fn with_body(&self, body: BodyParams) -> Result<Self> {
        Self::new(Arc::clone(&self.geometry), body)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn shared_geometry(&self) -> Arc<Geometry> {
        Arc::clone(&self.geometry)
    }

    pub fn body(&self) -> &BodyParams {
        &self.body
    }

    pub fn nose_sq_at(&self, g: &ContactGeometry) -> f64 {
        let BodyParams { m, i1, i3, .. } = self.body;
        i1 * g.cos * g.cos + i3 * g.sin * g.sin + m * g.z_c * g.z_c
    }

    pub fn b_at(&self, g: &ContactGeometry) -> f64 {
        self.body.i1 + self.body.m * g.cp_sq
    }

    /// `B' = m d|CP|²/dθ = 2 m (h h' + f* f*')`.
    pub fn db_at(&self, g: &ContactGeometry) -> f64 {
        self.body.m * g.dcp_sq()
    }

    pub fn c_at(&self, g: &ContactGeometry) -> f64 {
        let BodyParams { m, i1, i3, .. } = self.body;
        ((i3 - i1) * g.sin * g.cos + m * g.lambda * g.z_c) * g.sin
    }

    /// `C sin θ / A` with the `sin²θ` cancelled analytically.
    pub fn n_at(&self, g: &ContactGeometry) -> f64 {
        let BodyParams { m, i1, i3, .. } = self.body;
        ((i3 - i1) * g.sin * g.cos + m * g.lambda * g.z_c) / self.nose_sq_at(g)
    }

    pub fn potential_at(&self, g: &ContactGeometry, ell: f64) -> f64 {
        let centrifugal = if ell == 0.0 {
            0.0
        } else {
            ell * ell / (2.0 * g.sin * g.sin)
        };
        centrifugal + self.body.m * self.body.g * g.z_c
    }

    /// `dṼ/dθ = −ℓ² cos θ / sin³θ + m g Λ`.
    pub fn dpotential_at(&self, g: &ContactGeometry, ell: f64) -> f64 {
        let centrifugal = if ell == 0.0 {
            0.0
        } else {
            -ell * ell * g.cos / g.sin.powi(3)
        };
        centrifugal + self.body.m * self.body.g * g.lambda
    }

    fn eval(&self, theta: f64) -> Result<ContactGeometry> {
        self.geometry.eval(theta)
    }

    fn eval_off_pole(&self, theta: f64) -> Result<ContactGeometry> {
        let g = self.eval(theta)?;
        if g.sin.abs() < POLE_EPS {
            return Err(Error::Pole { theta });
        }
        Ok(g)
    }

    /// `A(θ) = (I1 cos²θ + I3 sin²θ + m z_C²) sin²θ`.
    pub fn coeff_a(&self, theta: f64) -> Result<f64> {
        let g = self.eval(theta)?;
        Ok(self.nose_sq_at(&g) * g.sin * g.sin)
    }

    /// `B(θ) = I1 + m (h² + f*²)`.
    pub fn coeff_b(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| self.b_at(&g))
    }

    pub fn coeff_db(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| self.db_at(&g))
    }

    pub fn coeff_c(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| self.c_at(&g))
    }

    pub fn n_func(&self, theta: f64) -> Result<f64> {
        self.eval_off_pole(theta).map(|g| self.n_at(&g))
    }

    /// Closed-form Nose function `N(θ) = √(I1 cos²θ + I3 sin²θ + m z_C²)`.
    pub fn nose(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| self.nose_sq_at(&g).sqrt())
    }

    /// Effective potential `Ṽ(θ; ℓ) = ℓ²/(2 sin²θ) + m g z_C(θ)`.
    pub fn potential(&self, theta: f64, ell: f64) -> Result<f64> {
        let g = if ell == 0.0 {
            self.eval(theta)?
        } else {
            self.eval_off_pole(theta)?
        };
        Ok(self.potential_at(&g, ell))
    }

    pub fn dpotential(&self, theta: f64, ell: f64) -> Result<f64> {
        let g = if ell == 0.0 {
            self.eval(theta)?
        } else {
            self.eval_off_pole(theta)?
        };
        Ok(self.dpotential_at(&g, ell))
    }

    /// `d²Ṽ/dθ² = ℓ² (3 cos²θ/sin⁴θ + 1/sin²θ) + m g Λ'`.
    pub fn d2potential(&self, theta: f64, ell: f64) -> Result<f64> {
        let g = if ell == 0.0 {
            self.eval(theta)?
        } else {
            self.eval_off_pole(theta)?
        };
        let s2 = g.sin * g.sin;
        let centrifugal = if ell == 0.0 {
            0.0
        } else {
            ell * ell * (3.0 * g.cos * g.cos / (s2 * s2) + 1.0 / s2)
        };
        Ok(centrifugal + self.body.m * self.body.g * g.dlambda)
    }
}

impl NoseModel for Coefficients {
    fn n_func(&self, theta: f64) -> Result<f64> {
        Coefficients::n_func(self, theta)
    }

    fn nose(&self, theta: f64) -> Result<f64> {
        Coefficients::nose(self, theta)
    }
}
