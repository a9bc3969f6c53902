//! Sampled trajectories and their CSV form.

use std::io::{self, Write};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedSample {
    pub t: f64,
    pub theta: f64,
    pub p_theta: f64,
    /// `θ̇ = p_θ / B(θ)`, kept for interpolation.
    pub theta_dot: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedTrajectory {
    pub ell: f64,
    pub dt: f64,
    pub samples: Vec<ReducedSample>,
}

pub const REDUCED_COLUMNS: [&str; 5] = ["t", "theta", "p_theta", "energy", "ell"];

pub const FULL_COLUMNS: [&str; 15] = [
    "t",
    "theta",
    "psi",
    "phi",
    "x",
    "y",
    "theta_dot",
    "psi_dot",
    "phi_dot",
    "x_dot",
    "y_dot",
    "energy",
    "ell",
    "res_notwist",
    "res_noslip",
];

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let mut values = values.peekable();
    let Some(&e0) = values.peek() else {
        return 0.0;
    };
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    values.map(|e| (e - e0).abs() / scale).fold(0.0, f64::max)
}

fn hermite(t0: f64, t1: f64, y0: f64, d0: f64, y1: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&ReducedSample> {
        self.samples.last()
    }

    /// `max |H̃(t) − H̃(0)| / |H̃(0)|`.
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|s| s.energy))
    }

    /// Cubic Hermite interpolation of θ using the stored `θ̇`. `None` outside
    /// the sampled time span.
    pub fn theta_at(&self, t: f64) -> Option<f64> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        if self.samples.len() == 1 {
            return Some(first.theta);
        }
        let k = self
            .samples
            .partition_point(|s| s.t <= t)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        Some(hermite(a.t, b.t, a.theta, a.theta_dot, b.theta, b.theta_dot, t))
    }

    pub fn theta_range(&self) -> Option<(f64, f64)> {
        min_max(self.samples.iter().map(|s| s.theta))
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", REDUCED_COLUMNS.join(","))?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.theta, s.p_theta, s.energy, self.ell
            )?;
        }
        Ok(())
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Sample of the flow in the rescaled time `τ`, `dt/dτ = √B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSample {
    pub tau: f64,
    pub t: f64,
    pub theta: f64,
    /// `p̃ = dθ/dτ = p_θ / √B`.
    pub p_tilde: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauTrajectory {
    pub ell: f64,
    pub dtau: f64,
    pub samples: Vec<TauSample>,
}

impl TauTrajectory {
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|s| s.energy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullSample {
    pub t: f64,
    pub theta: f64,
    pub psi: f64,
    pub phi: f64,
    pub x: f64,
    pub y: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
    pub phi_dot: f64,
    pub x_dot: f64,
    pub y_dot: f64,
    pub energy: f64,
    pub ell: f64,
    /// `|φ̇ + cos θ ψ̇|`.
    pub res_notwist: f64,
    /// Norm of `(ẋ, ẏ) + h ψ̇ e_N + r θ̇ e_N⊥`.
    pub res_noslip: f64,
    /// False once the chart guard `sin θ < 1e-4` was hit.
    pub valid: bool,
}

impl FullSample {
    pub fn q(&self) -> [f64; 5] {
        [self.theta, self.psi, self.phi, self.x, self.y]
    }

    pub fn qdot(&self) -> [f64; 5] {
        [self.theta_dot, self.psi_dot, self.phi_dot, self.x_dot, self.y_dot]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullTrajectory {
    pub samples: Vec<FullSample>,
}

impl FullTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|s| s.energy))
    }

    pub fn ell_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|s| s.ell))
    }

    pub fn max_residuals(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((0.0, 0.0), |(a, b), s| (a.max(s.res_notwist), b.max(s.res_noslip)))
    }

    pub fn contact_track(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.x, s.y)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", FULL_COLUMNS.join(","))?;
        for s in &self.samples {
            let row = [
                s.t,
                s.theta,
                s.psi,
                s.phi,
                s.x,
                s.y,
                s.theta_dot,
                s.psi_dot,
                s.phi_dot,
                s.x_dot,
                s.y_dot,
                s.energy,
                s.ell,
                s.res_notwist,
                s.res_noslip,
            ];
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_trajectory() -> ReducedTrajectory {
        let samples = (0..=100)
            .map(|k| {
                let t = k as f64 * 0.05;
                ReducedSample {
                    t,
                    theta: t.sin(),
                    p_theta: 0.0,
                    theta_dot: t.cos(),
                    energy: 1.0 + 1e-9 * t,
                }
            })
            .collect();
        ReducedTrajectory {
            ell: 0.0,
            dt: 0.05,
            samples,
        }
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let tr = sine_trajectory();
        for t in [0.01, 1.234, 3.3, 4.999] {
            assert!((tr.theta_at(t).unwrap() - t.sin()).abs() < 1e-6);
        }
        assert!(tr.theta_at(-0.1).is_none());
        assert!(tr.theta_at(5.1).is_none());
        assert_eq!(tr.theta_at(5.0).unwrap(), 5f64.sin());
    }

    #[test]
    fn drift_is_relative_to_first_sample() {
        let tr = sine_trajectory();
        assert!((tr.energy_drift() - 5e-9).abs() < 1e-15);
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let tr = sine_trajectory();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,theta,p_theta,energy,ell");
        let row: Vec<f64> = lines.nth(7).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[1], tr.samples[7].theta);
        assert_eq!(text.lines().count(), 102);
    }
}
