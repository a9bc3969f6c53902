//! Aggregated identity checks with a serialisable report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{bracket_curvature, conformal_check, jk_coefficient, phi_simple_check, ConnectionFrame};
use crate::coefficients::{Coefficients, NoseModel};
use crate::error::Result;
use crate::oracle::{horizontal_lifts, ConstrainedSystem, Vector5};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub nose_log_derivative: f64,
    pub phi_simple: f64,
    pub bracket: f64,
    pub lifts_in_kernel: f64,
    pub jk_routes: f64,
    pub finite_difference: f64,
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            nose_log_derivative: 1e-8,
            phi_simple: 1e-8,
            bracket: 1e-6,
            lifts_in_kernel: 1e-12,
            jk_routes: 1e-10,
            finite_difference: 1e-6,
            closed_form: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificationConfig {
    /// Evenly spaced `θ` samples.
    pub grid_points: usize,
    /// Random configurations for the checks that depend on `φ`, `x`, `y`.
    pub random_points: usize,
    pub fd_step: f64,
    pub seed: u64,
    /// Distance kept from the ends of the admissible domain.
    pub margin: f64,
    pub tolerances: Tolerances,
}

impl Default for CertificationConfig {
    fn default() -> Self {
        Self {
            grid_points: 1000,
            random_points: 1000,
            fd_step: crate::algebra::FD_STEP,
            seed: 0,
            margin: 1e-2,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub grid_points: usize,
    pub random_points: usize,
    pub fd_step: f64,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl CertificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn max_over<F>(points: &[f64], f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    points.par_iter().map(|&t| f(t)).try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn result(name: &str, max_residual: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        max_residual,
        tolerance,
        // NaN residuals fail.
        pass: max_residual <= tolerance,
    }
}

/// Run every identity check. `model` provides `n` and `N` for the checks
/// that concern them, which lets a deliberately wrong model be certified as a
/// negative control; everything else reads `coeffs` directly.
pub fn certify(coeffs: &Coefficients, model: &dyn NoseModel, cfg: &CertificationConfig) -> Result<CertificationReport> {
    let tol = cfg.tolerances;
    let h = cfg.fd_step;
    let geo = coeffs.geometry();
    let domain = geo.domain();
    let margin = cfg.margin.max(2.0 * h);
    let (lo, hi) = (domain.lo().max(margin), domain.hi().min(std::f64::consts::PI - margin));
    let n = cfg.grid_points.max(2);
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random: Vec<([f64; 5], f64)> = (0..cfg.random_points)
        .map(|_| {
            let q = [
                rng.random_range(lo..hi),
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            ];
            (q, rng.random_range(-2.0..2.0))
        })
        .collect();
    let thetas: Vec<f64> = random.iter().map(|r| r.0[0]).collect();

    let mut checks = Vec::new();

    checks.push(result(
        "nose_log_derivative",
        max_over(&grid, |t| conformal_check(model, t, h))?,
        tol.nose_log_derivative,
    ));

    let phi_simple: Vec<_> = grid
        .par_iter()
        .map(|&t| phi_simple_check(coeffs, model, t, h))
        .collect::<Result<_>>()?;
    checks.push(result(
        "phi_simple_potential",
        phi_simple.iter().map(|p| p.potential_residual).fold(0.0, f64::max),
        tol.phi_simple,
    ));
    checks.push(result(
        "phi_simple_tensor",
        phi_simple.iter().map(|p| p.tensor_residual).fold(0.0, f64::max),
        tol.phi_simple,
    ));

    let frame = ConnectionFrame::new(coeffs.shared_geometry());
    let brackets: Vec<_> = random
        .par_iter()
        .map(|(q, _)| bracket_curvature(&frame, q, h).map(|b| (q[0], b)))
        .collect::<Result<_>>()?;
    checks.push(result(
        "bracket_phi_coefficient",
        brackets
            .iter()
            .map(|(t, b)| (b.phi_coefficient - t.sin()).abs())
            .fold(0.0, f64::max),
        tol.bracket,
    ));
    checks.push(result(
        "bracket_other_components",
        brackets.iter().map(|(_, b)| b.residual_norm).fold(0.0, f64::max),
        tol.bracket,
    ));

    let system = ConstrainedSystem::new(coeffs.clone());
    let lifts = random
        .par_iter()
        .map(|(q, _)| -> Result<f64> {
            let gg = system.constraint_jacobian(q)?;
            let (ht, hp) = horizontal_lifts(&geo.eval(q[0])?, q[2]);
            let a = (gg * Vector5::from_column_slice(&ht)).norm();
            let b = (gg * Vector5::from_column_slice(&hp)).norm();
            Ok(a.max(b))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    checks.push(result("lifts_in_kernel", lifts, tol.lifts_in_kernel));

    let jk = random
        .par_iter()
        .map(|&(q, p_psi)| jk_coefficient(coeffs, model, q[0], p_psi).map(|r| r.discrepancy()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    checks.push(result("jk_two_routes", jk, tol.jk_routes));

    // Meridian identities, by finite differences and in closed form.
    let fd = |f: &(dyn Fn(f64) -> f64 + Sync), t: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    let at = |t: f64| geo.eval_unchecked(t);
    checks.push(result(
        "dzc_equals_lambda",
        max_over(&grid, |t| Ok((fd(&|s| at(s).z_c, t) - at(t).lambda).abs()))?,
        tol.finite_difference,
    ));
    checks.push(result(
        "dh_equals_r_cos",
        max_over(&grid, |t| Ok((fd(&|s| at(s).h, t) - at(t).r * t.cos()).abs()))?,
        tol.finite_difference,
    ));
    checks.push(result(
        "df_equals_r_sin",
        max_over(&grid, |t| Ok((fd(&|s| at(s).f, t) - at(t).r * t.sin()).abs()))?,
        tol.finite_difference,
    ));
    checks.push(result(
        "dlambda_finite_difference",
        max_over(&grid, |t| Ok((fd(&|s| at(s).lambda, t) - at(t).dlambda).abs()))?,
        tol.finite_difference,
    ));
    checks.push(result(
        "db_finite_difference",
        max_over(&grid, |t| {
            let b = |s: f64| coeffs.b_at(&at(s));
            Ok((fd(&b, t) - coeffs.db_at(&at(t))).abs())
        })?,
        tol.finite_difference,
    ));
    checks.push(result(
        "cp_distance_two_routes",
        max_over(&grid, |t| {
            let g = at(t);
            let alt = g.lambda * g.lambda + (g.r - g.dlambda).powi(2);
            Ok((g.cp_sq - alt).abs())
        })?,
        tol.closed_form,
    ));
    checks.push(result(
        "h_minus_lambda_cos",
        max_over(&grid, |t| {
            let g = at(t);
            Ok((g.h - g.lambda * g.cos - g.z_c * g.sin).abs())
        })?,
        tol.closed_form,
    ));
    checks.push(result(
        "n_equals_c_sin_over_a",
        max_over(&thetas, |t| {
            let direct = coeffs.coeff_c(t)? * t.sin() / coeffs.coeff_a(t)?;
            Ok((direct - model.n_func(t)?).abs())
        })?,
        tol.closed_form,
    ));

    let pass = checks.iter().all(|c| c.pass);
    Ok(CertificationReport {
        grid_points: n,
        random_points: cfg.random_points,
        fd_step: h,
        seed: cfg.seed,
        checks,
        pass,
    })
}
