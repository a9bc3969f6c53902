use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass `m`, principal inertias `I1 = I2` and `I3` about the centre of mass,
/// and gravitational acceleration `g`. SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyParams {
    pub m: f64,
    pub i1: f64,
    pub i3: f64,
    pub g: f64,
}

impl BodyParams {
    /// Validates positivity. The physical-realisability condition
    /// `I1 ≤ I3 < 2 I1` is only warned about.
    pub fn new(m: f64, i1: f64, i3: f64, g: f64) -> Result<Self> {
        let body = Self { m, i1, i3, g };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("I1", self.i1), ("I3", self.i3), ("g", self.g)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidBody(format!("{name} = {v} must be positive")));
            }
        }
        if !self.satisfies_inertia_bounds() {
            log::warn!("inertias I1 = {}, I3 = {} violate I1 <= I3 < 2 I1", self.i1, self.i3);
        }
        Ok(())
    }

    pub fn satisfies_inertia_bounds(&self) -> bool {
        self.i1 <= self.i3 && self.i3 < 2.0 * self.i1
    }

    /// Solid torus: `I3 = m(4R² + 3r²)/4`, `I1 = m(4R² + 5r²)/8`.
    pub fn solid_torus(m: f64, major: f64, minor: f64, g: f64) -> Result<Self> {
        let (r2, a2) = (major * major, minor * minor);
        Self::new(m, m * (4.0 * r2 + 5.0 * a2) / 8.0, m * (4.0 * r2 + 3.0 * a2) / 4.0, g)
    }

    /// Hollow (thin-shell) torus: `I3 = m(2R² + 3r²)/2`, `I1 = m(2R² + 5r²)/4`.
    pub fn hollow_torus(m: f64, major: f64, minor: f64, g: f64) -> Result<Self> {
        let (r2, a2) = (major * major, minor * minor);
        Self::new(m, m * (2.0 * r2 + 5.0 * a2) / 4.0, m * (2.0 * r2 + 3.0 * a2) / 2.0, g)
    }

    pub fn with_i3(self, i3: f64) -> Self {
        Self { i3, ..self }
    }

    pub fn with_i1(self, i1: f64) -> Self {
        Self { i1, ..self }
    }
}
