//! Subcommand implementations.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use rollkit_core::reconstruction::center_of_mass_xy;
use rollkit_core::{
    bifurcation_scan, certify, find_equilibria, integrate_reduced_partial, phase_portrait, reconstruct,
    BifurcationDiagram, CertificationReport, Coefficients, ConstrainedSystem, Equilibrium, FullInitial, FullTrajectory,
    NoseModel, PhaseGrid, ReducedTrajectory, Stability,
};
use serde::Serialize;

use crate::config::{Format, Overrides, Scene, SceneConfig};
use crate::error::{CliError, CliResult};
use crate::output::{AbortRecord, OutputDir};
use crate::svg::{padded_range, Figure, Layer};

/// Parsed configuration plus command-line overrides and output directory.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: SceneConfig,
    pub overrides: Overrides,
    pub out: PathBuf,
}

impl Context {
    pub fn load(config: &Path, out: &Path, overrides: Overrides) -> CliResult<Self> {
        Ok(Self {
            config: SceneConfig::load(config)?,
            overrides,
            out: out.to_path_buf(),
        })
    }

    fn prepare(&self) -> CliResult<(Scene, OutputDir)> {
        let scene = self.config.scene(&self.overrides)?;
        let dir = OutputDir::new(&self.out, &self.config.output.prefix, &scene.hash)?;
        Ok((scene, dir))
    }
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Degenerate => "degenerate",
    }
}

/// Reduced run followed by reconstruction. A guard breach keeps the samples
/// reached so far.
pub fn run_scene(scene: &Scene) -> CliResult<(ReducedTrajectory, FullTrajectory, Option<rollkit_core::Error>)> {
    let (traj, err) = integrate_reduced_partial(&scene.coeffs, &scene.initial, scene.t_end, scene.dt, scene.method);
    if let Some(e) = &err {
        if !e.is_singularity() {
            return Err(e.clone().into());
        }
    }
    let full = reconstruct(&scene.coeffs, &traj, scene.pose)?;
    Ok((traj, full, err))
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    status: &'static str,
    ell: f64,
    samples: usize,
    t_final: Option<f64>,
    theta_range: Option<(f64, f64)>,
    reduced_energy_drift: f64,
    ell_drift: f64,
    max_res_notwist: f64,
    max_res_noslip: f64,
    abort: Option<AbortRecord>,
}

pub fn simulate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let (scene, dir) = ctx.prepare()?;
    let (traj, full, err) = run_scene(&scene)?;
    let abort = err.as_ref().map(AbortRecord::from_error);
    let out = &ctx.config.output;
    let mut files = Vec::new();
    if out.wants(Format::Csv) {
        files.push(dir.csv("reduced.csv", abort.as_ref(), |w| traj.write_csv(w))?);
        files.push(dir.csv("full.csv", abort.as_ref(), |w| full.write_csv(w))?);
    }
    let (tw, sl) = full.max_residuals();
    let summary = SimulateSummary {
        status: if abort.is_some() { "aborted" } else { "ok" },
        ell: traj.ell,
        samples: traj.len(),
        t_final: traj.last().map(|s| s.t),
        theta_range: traj.theta_range(),
        reduced_energy_drift: traj.energy_drift(),
        ell_drift: full.ell_drift(),
        max_res_notwist: tw,
        max_res_noslip: sl,
        abort,
    };
    if out.wants(Format::Json) {
        files.push(dir.json("summary.json", "simulate", &summary)?);
    }
    if out.wants(Format::Svg) {
        files.push(dir.svg(
            "track.svg",
            &track_figure(&scene.coeffs, &full).render(&metadata(&dir, "track")),
        )?);
    }
    info!("simulate: {} samples, status {}", summary.samples, summary.status);
    match err {
        Some(e) => Err(CliError::Singularity(e)),
        None => Ok(files),
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Deviations {
    pub max_theta: f64,
    pub max_xy: f64,
    pub max_psi: f64,
    pub max_phi: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub status: &'static str,
    pub ell: f64,
    pub samples: usize,
    pub deviations: Option<Deviations>,
    pub oracle_ell_drift: Option<f64>,
    pub oracle_energy_drift: Option<f64>,
    pub oracle_max_res_notwist: Option<f64>,
    pub oracle_max_res_noslip: Option<f64>,
    pub reduced_energy_drift: f64,
    pub i3_perturbed: f64,
    /// Largest `|Δθ|` between the reduced run and one with `I3 = i3_perturbed`.
    pub i3_perturbed_max_theta: f64,
    pub abort: Option<AbortRecord>,
}

pub fn deviations(a: &FullTrajectory, b: &FullTrajectory) -> Deviations {
    a.samples
        .iter()
        .zip(&b.samples)
        .fold(Deviations::default(), |d, (x, y)| Deviations {
            max_theta: d.max_theta.max((x.theta - y.theta).abs()),
            max_xy: d.max_xy.max((x.x - y.x).hypot(x.y - y.y)),
            max_psi: d.max_psi.max((x.psi - y.psi).abs()),
            max_phi: d.max_phi.max((x.phi - y.phi).abs()),
        })
}

/// The report, plus the error that stopped either run.
pub fn compare_scene(scene: &Scene) -> CliResult<(CompareReport, Option<rollkit_core::Error>)> {
    let (traj, rec, err) = run_scene(scene)?;
    let body = *scene.coeffs.body();
    // Another admissible I3, inside [I1, 2 I1).
    let i3_perturbed = if (body.i3 - 1.5 * body.i1).abs() > 1e-3 * body.i1 {
        1.5 * body.i1
    } else {
        1.25 * body.i1
    };
    let perturbed = scene.coeffs.with_body(body.with_i3(i3_perturbed))?;
    let (other, _) = integrate_reduced_partial(&perturbed, &scene.initial, scene.t_end, scene.dt, scene.method);
    let i3_perturbed_max_theta = traj
        .samples
        .iter()
        .zip(&other.samples)
        .map(|(a, b)| (a.theta - b.theta).abs())
        .fold(0.0, f64::max);
    let mut report = CompareReport {
        status: "ok",
        ell: scene.initial.ell,
        samples: traj.len(),
        deviations: None,
        oracle_ell_drift: None,
        oracle_energy_drift: None,
        oracle_max_res_notwist: None,
        oracle_max_res_noslip: None,
        reduced_energy_drift: traj.energy_drift(),
        i3_perturbed,
        i3_perturbed_max_theta,
        abort: None,
    };
    let oracle = match err {
        Some(e) => Err(e),
        None => FullInitial::matched(&scene.coeffs, &scene.initial, scene.pose)
            .and_then(|init| ConstrainedSystem::new(scene.coeffs.clone()).integrate_full(&init, scene.t_end, scene.dt)),
    };
    match oracle {
        Ok(full) => {
            let (tw, sl) = full.max_residuals();
            report.deviations = Some(deviations(&rec, &full));
            report.oracle_ell_drift = Some(full.ell_drift());
            report.oracle_energy_drift = Some(full.energy_drift());
            report.oracle_max_res_notwist = Some(tw);
            report.oracle_max_res_noslip = Some(sl);
        }
        Err(e) => {
            report.status = "aborted";
            report.abort = Some(AbortRecord::from_error(&e));
            return Ok((report, Some(e)));
        }
    }
    Ok((report, None))
}

pub fn oracle_compare(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let (scene, dir) = ctx.prepare()?;
    let (report, err) = compare_scene(&scene)?;
    let file = dir.json("compare.json", "oracle-compare", &report)?;
    match err {
        Some(e) => Err(e.into()),
        None => Ok(vec![file]),
    }
}

fn scan_range(ctx: &Context, coeffs: &Coefficients) -> (f64, f64, usize) {
    if let Some(s) = ctx.config.scan {
        return (s.ell_min, s.ell_max, s.samples);
    }
    // Twice the largest ℓ on the off-vertical equilibrium curve ℓ² = Q(θ).
    let body = coeffs.body();
    let geo = coeffs.geometry();
    let q_max = (1..1000)
        .map(|i| {
            let g = geo.eval_unchecked(PI * i as f64 / 1000.0);
            if g.cos.abs() < 1e-6 {
                0.0
            } else {
                body.m * body.g * g.lambda * g.sin.powi(3) / g.cos
            }
        })
        .fold(0.0, f64::max);
    (0.0, if q_max > 0.0 { 2.0 * q_max.sqrt() } else { 2.0 }, 400)
}

#[derive(Debug, Serialize)]
struct EquilibriaReport<'a> {
    ell: f64,
    equilibria: &'a [Equilibrium],
    bifurcation: Option<&'a BifurcationDiagram>,
}

pub fn equilibria(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let (scene, dir) = ctx.prepare()?;
    let ell = scene.initial.ell;
    let eq = find_equilibria(&scene.coeffs, ell);
    let out = &ctx.config.output;
    let mut files = Vec::new();
    if out.wants(Format::Csv) {
        files.push(dir.csv("equilibria.csv", None, |w| {
            writeln!(w, "ell,theta,stability,second_derivative,residual")?;
            for e in &eq {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{},{:.16e},{:.16e}",
                    e.ell,
                    e.theta,
                    stability_name(e.stability),
                    e.second_derivative,
                    e.residual
                )?;
            }
            Ok(())
        })?);
    }
    let diagram = ctx
        .config
        .scan
        .map(|s| bifurcation_scan(&scene.coeffs, (s.ell_min, s.ell_max), s.samples));
    if let Some(d) = &diagram {
        if out.wants(Format::Csv) {
            files.push(dir.csv("bifurcation.csv", None, |w| {
                writeln!(w, "ell,theta,stability,energy")?;
                for r in &d.rows {
                    writeln!(
                        w,
                        "{:.16e},{:.16e},{},{:.16e}",
                        r.ell,
                        r.theta,
                        stability_name(r.stability),
                        r.energy
                    )?;
                }
                Ok(())
            })?);
        }
        if out.wants(Format::Svg) {
            files.push(dir.svg(
                "bifurcation.svg",
                &bifurcation_figure(d).render(&metadata(&dir, "bifurcation")),
            )?);
        }
    }
    if out.wants(Format::Json) {
        let report = EquilibriaReport {
            ell,
            equilibria: &eq,
            bifurcation: diagram.as_ref(),
        };
        files.push(dir.json("equilibria.json", "equilibria", &report)?);
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Potential,
    Phase,
    Bifurcation,
    Track,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Potential => "potential",
            PlotKind::Phase => "phase",
            PlotKind::Bifurcation => "bifurcation",
            PlotKind::Track => "track",
        }
    }
}

fn metadata(dir: &OutputDir, kind: &str) -> String {
    format!("{} plot={kind}", dir.stamp())
}

fn plot_theta_range(coeffs: &Coefficients) -> (f64, f64) {
    let d = coeffs.geometry().domain();
    (d.lo().max(0.05), d.hi().min(PI - 0.05))
}

fn equilibrium_layers(eq: &[Equilibrium], y: impl Fn(&Equilibrium) -> f64) -> Vec<Layer> {
    [
        (Stability::Stable, "#1f5fbf"),
        (Stability::Unstable, "#c0392b"),
        (Stability::Degenerate, "#222222"),
    ]
    .into_iter()
    .map(|(s, color)| Layer::Markers {
        points: eq
            .iter()
            .filter(|e| e.stability == s)
            .map(|e| (e.theta, y(e)))
            .collect(),
        color,
        radius: 4.0,
        class: stability_name(s),
    })
    .collect()
}

pub fn potential_figure(coeffs: &Coefficients, ell: f64, samples: usize) -> Figure {
    let (lo, hi) = plot_theta_range(coeffs);
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            (t, coeffs.potential(t, ell).unwrap_or(f64::NAN))
        })
        .collect();
    let vmin = pts
        .iter()
        .map(|p| p.1)
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let mid = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]
        .iter()
        .filter_map(|&t| coeffs.potential(t, ell).ok())
        .fold(vmin, f64::max);
    let span = (1.5 * (mid - vmin)).max(1e-3);
    let eq = find_equilibria(coeffs, ell);
    let mut layers = vec![Layer::Line {
        points: pts,
        color: "black",
    }];
    layers.extend(equilibrium_layers(&eq, |e| {
        coeffs.potential(e.theta, ell).unwrap_or(f64::NAN)
    }));
    Figure {
        title: format!("reduced potential, ell = {ell}"),
        x_label: "theta".into(),
        y_label: "V(theta)".into(),
        x_range: (lo, hi),
        y_range: (vmin - 0.05 * span, vmin + span),
        layers,
    }
}

/// Phase-portrait levels placed between the lowest equilibrium and the
/// highest unstable one.
fn default_levels(coeffs: &Coefficients, ell: f64) -> Vec<f64> {
    let eq = find_equilibria(coeffs, ell);
    let energy = |e: &Equilibrium| coeffs.potential(e.theta, ell).unwrap_or(f64::NAN);
    let low = eq.iter().map(energy).fold(f64::INFINITY, f64::min);
    let sep = eq
        .iter()
        .filter(|e| e.stability != Stability::Stable)
        .map(energy)
        .fold(f64::NEG_INFINITY, f64::max);
    if !low.is_finite() {
        return Vec::new();
    }
    if sep.is_finite() && sep > low {
        let d = sep - low;
        [0.1, 0.3, 0.6, 0.9, 1.0, 1.1, 1.5, 2.0]
            .iter()
            .map(|k| low + k * d)
            .collect()
    } else {
        let d = low.abs().max(1.0);
        [0.01, 0.05, 0.1, 0.2, 0.4].iter().map(|k| low + k * d).collect()
    }
}

pub fn phase_figure(coeffs: &Coefficients, ell: f64, cfg: &crate::config::PlotConfig) -> CliResult<Figure> {
    let (lo, hi) = plot_theta_range(coeffs);
    let grid = PhaseGrid::new((lo, hi), (-cfg.p_max, cfg.p_max), cfg.phase_grid, cfg.phase_grid);
    let levels = cfg.levels.clone().unwrap_or_else(|| default_levels(coeffs, ell));
    let contours = phase_portrait(coeffs, ell, &levels, &grid)?;
    const COLORS: [&str; 4] = ["#1f5fbf", "#c0392b", "#27ae60", "#8e44ad"];
    let mut layers = Vec::new();
    for (k, c) in contours.iter().enumerate() {
        for line in &c.polylines {
            layers.push(Layer::Line {
                points: line.clone(),
                color: COLORS[k % COLORS.len()],
            });
        }
    }
    layers.extend(equilibrium_layers(&find_equilibria(coeffs, ell), |_| 0.0));
    Ok(Figure {
        title: format!("phase portrait, ell = {ell}"),
        x_label: "theta".into(),
        y_label: "p_theta".into(),
        x_range: (lo, hi),
        y_range: (-cfg.p_max, cfg.p_max),
        layers,
    })
}

pub fn bifurcation_figure(d: &BifurcationDiagram) -> Figure {
    let (x0, x1) = padded_range(d.rows.iter().map(|r| r.ell), 0.02);
    let mut layers: Vec<Layer> = [
        (Stability::Stable, "#1f5fbf"),
        (Stability::Unstable, "#c0392b"),
        (Stability::Degenerate, "#222222"),
    ]
    .into_iter()
    .map(|(s, color)| Layer::Markers {
        points: d
            .rows
            .iter()
            .filter(|r| r.stability == s)
            .map(|r| (r.ell, r.theta))
            .collect(),
        color,
        radius: 1.5,
        class: stability_name(s),
    })
    .collect();
    layers.push(Layer::Markers {
        points: d.points.iter().map(|p| (p.ell, p.theta)).collect(),
        color: "#f39c12",
        radius: 5.0,
        class: "bifurcation",
    });
    Figure {
        title: "relative equilibria".into(),
        x_label: "ell".into(),
        y_label: "theta".into(),
        x_range: (x0, x1),
        y_range: (0.0, PI),
        layers,
    }
}

/// Contact and centre-of-mass tracks with equal axis scales.
pub fn track_figure(coeffs: &Coefficients, full: &FullTrajectory) -> Figure {
    let contact = full.contact_track();
    let com: Vec<(f64, f64)> = full
        .samples
        .iter()
        .map(|s| center_of_mass_xy(coeffs.geometry(), s))
        .collect();
    let all = || contact.iter().chain(&com);
    let (mut xr, mut yr) = (
        padded_range(all().map(|p| p.0), 0.05),
        padded_range(all().map(|p| p.1), 0.05),
    );
    // Plot area is 630 × 390.
    let ratio = 390.0 / 630.0;
    let (wx, wy) = (xr.1 - xr.0, yr.1 - yr.0);
    if wy < wx * ratio {
        let c = 0.5 * (yr.0 + yr.1);
        yr = (c - 0.5 * wx * ratio, c + 0.5 * wx * ratio);
    } else {
        let c = 0.5 * (xr.0 + xr.1);
        xr = (c - 0.5 * wy / ratio, c + 0.5 * wy / ratio);
    }
    Figure {
        title: "planar track".into(),
        x_label: "x".into(),
        y_label: "y".into(),
        x_range: xr,
        y_range: yr,
        layers: vec![
            Layer::Line {
                points: contact,
                color: "black",
            },
            Layer::Line {
                points: com,
                color: "#1f5fbf",
            },
        ],
    }
}

pub fn plot(ctx: &Context, kind: PlotKind) -> CliResult<Vec<PathBuf>> {
    let (scene, dir) = ctx.prepare()?;
    let ell = scene.initial.ell;
    let mut err = None;
    let figure = match kind {
        PlotKind::Potential => potential_figure(&scene.coeffs, ell, ctx.config.plot.theta_samples),
        PlotKind::Phase => phase_figure(&scene.coeffs, ell, &ctx.config.plot)?,
        PlotKind::Bifurcation => {
            let (lo, hi, n) = scan_range(ctx, &scene.coeffs);
            bifurcation_figure(&bifurcation_scan(&scene.coeffs, (lo, hi), n))
        }
        PlotKind::Track => {
            let (_, full, e) = run_scene(&scene)?;
            err = e;
            track_figure(&scene.coeffs, &full)
        }
    };
    let file = dir.svg(
        &format!("{}.svg", kind.name()),
        &figure.render(&metadata(&dir, kind.name())),
    )?;
    match err {
        Some(e) => Err(CliError::Singularity(e)),
        None => Ok(vec![file]),
    }
}

/// Certification with an explicit nose model, so a corrupted one can be
/// checked as a negative control.
pub fn verify_with(ctx: &Context, model: Option<&dyn NoseModel>) -> CliResult<(CertificationReport, Vec<PathBuf>)> {
    let (scene, dir) = ctx.prepare()?;
    let cfg = ctx.config.certification(&ctx.overrides);
    let report = certify(&scene.coeffs, model.unwrap_or(&scene.coeffs), &cfg)?;
    let file = dir.json("verify.json", "verify", &report)?;
    if report.pass {
        Ok((report, vec![file]))
    } else {
        let names: Vec<String> = report
            .failures()
            .map(|c| format!("{} ({:e} > {:e})", c.name, c.max_residual, c.tolerance))
            .collect();
        Err(CliError::Verify(names.join(", ")))
    }
}

pub fn verify(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    verify_with(ctx, None).map(|(_, f)| f)
}
