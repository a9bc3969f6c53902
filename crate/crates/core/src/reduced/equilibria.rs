//! Relative equilibria `Λ(θ) = (ℓ²/mg) cos θ / sin³θ` and their bifurcations.

use rayon::prelude::*;
use serde::Serialize;

use super::SIN_GUARD;
use crate::coefficients::Coefficients;
use crate::root::scan_roots;

pub const SCAN_POINTS: usize = 2000;
pub const ROOT_TOL: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-6;
pub const MERGE_DISTANCE: f64 = 1e-8;
/// `|Ṽ''|` below this fraction of its two competing terms counts as zero.
pub const DEGENERACY_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub theta: f64,
    pub ell: f64,
    pub stability: Stability,
    /// `d²Ṽ/dθ²` at `θ*`, by central difference.
    pub second_derivative: f64,
    /// `|Λ − (ℓ²/mg) cos θ/sin³θ|` at `θ*`.
    pub residual: f64,
}

/// Residual of the equilibrium equation (length units).
pub fn equilibrium_residual(coeffs: &Coefficients, theta: f64, ell: f64) -> f64 {
    let g = coeffs.geometry().eval_unchecked(theta);
    let mg = coeffs.body().m * coeffs.body().g;
    let centrifugal = if ell == 0.0 {
        0.0
    } else {
        ell * ell / mg * g.cos / g.sin.powi(3)
    };
    g.lambda - centrifugal
}

/// Part of the domain where `sin θ` clears the chart guard.
fn scan_interval(coeffs: &Coefficients) -> Option<(f64, f64)> {
    let d = coeffs.geometry().domain();
    let edge = SIN_GUARD.asin();
    let lo = d.lo().max(edge);
    let hi = d.hi().min(std::f64::consts::PI - edge);
    (lo < hi).then_some((lo, hi))
}

fn classify(coeffs: &Coefficients, theta: f64, ell: f64) -> (Stability, f64) {
    let geo = coeffs.geometry();
    let dv = |t: f64| coeffs.dpotential_at(&geo.eval_unchecked(t), ell);
    let d2 = (dv(theta + FD_STEP) - dv(theta - FD_STEP)) / (2.0 * FD_STEP);
    let g = geo.eval_unchecked(theta);
    let (s2, c2) = (g.sin * g.sin, g.cos * g.cos);
    let scale = ell * ell * (3.0 * c2 / (s2 * s2) + 1.0 / s2) + coeffs.body().m * coeffs.body().g * g.dlambda.abs();
    let stability = if d2.abs() <= DEGENERACY_RATIO * scale {
        Stability::Degenerate
    } else if d2 > 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    (stability, d2)
}

/// All relative equilibria in the admissible domain at level `ℓ`, ordered by
/// `θ`.
pub fn find_equilibria(coeffs: &Coefficients, ell: f64) -> Vec<Equilibrium> {
    let Some((lo, hi)) = scan_interval(coeffs) else {
        return Vec::new();
    };
    let roots = scan_roots(|t| equilibrium_residual(coeffs, t, ell), lo, hi, SCAN_POINTS, ROOT_TOL);

    let mut merged: Vec<(f64, bool)> = Vec::new();
    for r in roots {
        match merged.last_mut() {
            Some((prev, merged_flag)) if (r - *prev).abs() < MERGE_DISTANCE => {
                *prev = 0.5 * (*prev + r);
                *merged_flag = true;
            }
            _ => merged.push((r, false)),
        }
    }

    merged
        .into_iter()
        .map(|(theta, was_merged)| {
            let (stability, second_derivative) = classify(coeffs, theta, ell);
            Equilibrium {
                theta,
                ell,
                stability: if was_merged { Stability::Degenerate } else { stability },
                second_derivative,
                residual: equilibrium_residual(coeffs, theta, ell).abs(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationRow {
    pub ell: f64,
    pub theta: f64,
    pub stability: Stability,
    /// `H̃(θ*, 0; ℓ) = Ṽ(θ*; ℓ)`.
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BifurcationKind {
    /// Symmetric branch point on the vertical branch `θ = π/2`.
    Pitchfork,
    /// Fold of the equilibrium curve `ℓ² = Q(θ)`.
    SaddleNode,
    /// Non-symmetric crossing of the vertical branch.
    Transcritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationPoint {
    pub ell: f64,
    pub theta: f64,
    pub kind: BifurcationKind,
    /// Whether the sampled rows change their equilibrium count across `ℓ`.
    pub seen_in_scan: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BifurcationDiagram {
    pub rows: Vec<BifurcationRow>,
    pub points: Vec<BifurcationPoint>,
}

/// Equilibria lie on `ℓ² = Q(θ) = m g Λ sin³θ / cos θ`. Bifurcations sit at
/// the critical points of `Q`, the zeros of
/// `P(θ) = Λ' sin θ cos θ + Λ (3 cos²θ + sin²θ)`, and where `Q` meets the
/// vertical branch (`cos θ = Λ = 0`).
fn critical_points(coeffs: &Coefficients) -> Vec<(f64, f64, BifurcationKind)> {
    let Some((lo, hi)) = scan_interval(coeffs) else {
        return Vec::new();
    };
    let geo = coeffs.geometry();
    let mg = coeffs.body().m * coeffs.body().g;
    let p = |t: f64| {
        let g = geo.eval_unchecked(t);
        g.dlambda * g.sin * g.cos + g.lambda * (3.0 * g.cos * g.cos + g.sin * g.sin)
    };
    let q = |t: f64| {
        let g = geo.eval_unchecked(t);
        if g.cos.abs() < 1e-6 {
            // Λ/cos θ → Λ'/(−sin θ) where both vanish.
            -mg * g.dlambda * g.sin * g.sin
        } else {
            mg * g.lambda * g.sin.powi(3) / g.cos
        }
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    // θ = π/2 is an equilibrium for every ℓ when Λ(π/2) = 0.
    let vertical = {
        let g = geo.eval_unchecked(half_pi);
        g.lambda.abs() <= 1e-10 * (g.h.abs() + g.f_star.abs())
    };

    let mut out: Vec<(f64, f64, BifurcationKind)> = Vec::new();
    let mut symmetric_found = false;
    for t in scan_roots(p, lo, hi, SCAN_POINTS, ROOT_TOL) {
        // A triple zero of P, so bisection only pins it to ~(eps)^(1/3).
        let on_vertical = vertical && (t - half_pi).abs() < 1e-4;
        let g = geo.eval_unchecked(t);
        if !on_vertical && g.cos.abs() < 1e-6 {
            continue;
        }
        let kind = if on_vertical {
            symmetric_found = true;
            BifurcationKind::Pitchfork
        } else {
            BifurcationKind::SaddleNode
        };
        let t = if on_vertical { half_pi } else { t };
        if out.iter().any(|&(u, _, _)| (u - t).abs() < 1e-4) {
            continue;
        }
        out.push((t, q(t), kind));
    }
    if vertical && !symmetric_found && lo < half_pi && half_pi < hi {
        out.push((half_pi, q(half_pi), BifurcationKind::Transcritical));
    }
    out.retain(|&(_, ell_sq, _)| ell_sq >= 0.0);
    out
}

/// Equilibria over `samples` evenly spaced `ℓ` in `ell_range` plus the
/// bifurcation points inside the range. Invalid or empty ranges give an empty
/// diagram.
pub fn bifurcation_scan(coeffs: &Coefficients, ell_range: (f64, f64), samples: usize) -> BifurcationDiagram {
    let (lo, hi) = ell_range;
    if samples == 0 || !(lo >= 0.0) || !(hi >= lo) || !hi.is_finite() {
        return BifurcationDiagram::default();
    }
    let ells: Vec<f64> = (0..samples)
        .map(|i| {
            if samples == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (samples - 1) as f64
            }
        })
        .collect();
    let per_ell: Vec<Vec<BifurcationRow>> = ells
        .par_iter()
        .map(|&ell| {
            find_equilibria(coeffs, ell)
                .into_iter()
                .map(|e| BifurcationRow {
                    ell,
                    theta: e.theta,
                    stability: e.stability,
                    energy: coeffs.potential_at(&coeffs.geometry().eval_unchecked(e.theta), ell),
                })
                .collect()
        })
        .collect();

    let counts: Vec<usize> = per_ell.iter().map(Vec::len).collect();
    let points = critical_points(coeffs)
        .into_iter()
        .map(|(theta, ell_sq, kind)| (theta, ell_sq.sqrt(), kind))
        .filter(|&(_, ell, _)| ell >= lo && ell <= hi)
        .map(|(theta, ell, kind)| {
            let k = ells.partition_point(|&e| e < ell);
            let before = k.checked_sub(1).map(|i| counts[i]);
            let after = counts.get(k + usize::from(ells.get(k) == Some(&ell))).copied();
            BifurcationPoint {
                ell,
                theta,
                kind,
                seen_in_scan: matches!((before, after), (Some(a), Some(b)) if a != b),
            }
        })
        .collect();

    BifurcationDiagram {
        rows: per_ell.into_iter().flatten().collect(),
        points,
    }
}
