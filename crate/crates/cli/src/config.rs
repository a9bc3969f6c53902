//! Scene configuration files.

use std::f64::consts::PI;
use std::path::Path;

use rollkit_core::{
    BodyParams, CertificationConfig, Coefficients, Curvature, FullInitial, Method, PlanarPose, ReducedState,
    SurfaceProfile, ThetaDomain,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Largest constraint violation accepted for explicitly given rates.
const RATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub surface: SurfaceConfig,
    pub body: BodyConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub plot: PlotConfig,
    #[serde(default)]
    pub verify: CertificationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SurfaceConfig {
    Torus {
        #[serde(rename = "R")]
        major: f64,
        r: f64,
        /// Defaults to `r`, the centre of the tube circle.
        #[serde(default)]
        f_o: Option<f64>,
        #[serde(default)]
        theta_domain: Option<[f64; 2]>,
    },
    General {
        curvature: CurvatureConfig,
        h_o: f64,
        f_o: f64,
        #[serde(default)]
        theta_domain: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurvatureConfig {
    Constant(f64),
    /// `[θ, r]` pairs, interpolated monotonically.
    Table(Vec<[f64; 2]>),
    /// Meridian ellipse with horizontal semi-axis `a` and vertical `c`.
    Ellipse {
        a: f64,
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub m: f64,
    pub g: f64,
    pub inertia: InertiaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InertiaConfig {
    Preset(InertiaPreset),
    Explicit(ExplicitInertia),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InertiaPreset {
    Solid,
    Hollow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInertia {
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I3")]
    pub i3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    Reduced { theta0: f64, p_theta0: f64, ell: f64 },
    Full(FullInitialConfig),
}

/// Full initial state. `φ̇`, `ẋ`, `ẏ` follow from the constraints; when given
/// they must agree with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullInitialConfig {
    pub theta0: f64,
    #[serde(default)]
    pub psi0: f64,
    #[serde(default)]
    pub phi0: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
    pub theta_dot0: f64,
    pub psi_dot0: f64,
    #[serde(default)]
    pub phi_dot0: Option<f64>,
    #[serde(default)]
    pub x_dot0: Option<f64>,
    #[serde(default)]
    pub y_dot0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    Rk4,
    AdaptiveRk45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: MethodConfig,
    pub dt: f64,
    pub t_end: f64,
    pub atol: f64,
    pub rtol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: MethodConfig::Rk4,
            dt: 1e-3,
            t_end: 10.0,
            atol: 1e-10,
            rtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Prepended to every file name.
    pub prefix: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            prefix: String::new(),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub ell_min: f64,
    pub ell_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotConfig {
    pub theta_samples: usize,
    pub phase_grid: usize,
    pub p_max: f64,
    /// Energy levels for the phase portrait; chosen from the equilibria when
    /// absent.
    pub levels: Option<Vec<f64>>,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            theta_samples: 800,
            phase_grid: 201,
            p_max: 2.5,
            levels: None,
        }
    }
}

/// Everything a command needs, validated.
#[derive(Debug, Clone)]
pub struct Scene {
    pub coeffs: Coefficients,
    pub initial: ReducedState,
    pub pose: PlanarPose,
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub hash: String,
}

/// Command-line overrides folded into the run identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub ell: Option<f64>,
    pub seed: Option<u64>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn finite(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(format!("{name} must be finite, got {v}")))
    }
}

fn ellipse_curvature(a: f64, c: f64) -> Curvature {
    let k = a * a * c * c;
    let d = move |t: f64| c * c * t.cos().powi(2) + a * a * t.sin().powi(2);
    Curvature::function(
        move |t: f64| k / d(t).powf(1.5),
        move |t: f64| -1.5 * k * d(t).powf(-2.5) * 2.0 * t.sin() * t.cos() * (a * a - c * c),
    )
}

impl SceneConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON of the configuration and overrides.
    pub fn hash(&self, overrides: &Overrides) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            config: &'a SceneConfig,
            overrides: &'a Overrides,
        }
        let bytes = serde_json::to_vec(&Key {
            config: self,
            overrides,
        })
        .expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn profile(&self) -> CliResult<SurfaceProfile> {
        let (profile, domain) = match &self.surface {
            SurfaceConfig::Torus {
                major,
                r,
                f_o,
                theta_domain,
            } => {
                let mut p = SurfaceProfile::torus(finite("R", *major)?, finite("r", *r)?);
                if let Some(f) = f_o {
                    p = p.with_f_o(finite("f_o", *f)?);
                }
                (p, theta_domain)
            }
            SurfaceConfig::General {
                curvature,
                h_o,
                f_o,
                theta_domain,
            } => {
                let curvature = match curvature {
                    CurvatureConfig::Constant(r) => Curvature::Constant(finite("curvature", *r)?),
                    CurvatureConfig::Table(rows) => {
                        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                        if pts.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
                            return Err(bad("curvature table entries must be finite"));
                        }
                        let (first, last) = (pts.first().map(|p| p.0), pts.last().map(|p| p.0));
                        if first.is_none_or(|t| t > 0.0) || last.is_none_or(|t| t < PI) {
                            return Err(bad("curvature table must cover [0, pi]"));
                        }
                        Curvature::sampled(&pts).map_err(|e| bad(e.to_string()))?
                    }
                    CurvatureConfig::Ellipse { a, c } => {
                        if !(finite("a", *a)? > 0.0 && finite("c", *c)? > 0.0) {
                            return Err(bad("ellipse semi-axes must be positive"));
                        }
                        ellipse_curvature(*a, *c)
                    }
                };
                (
                    SurfaceProfile::general(curvature, finite("h_o", *h_o)?, finite("f_o", *f_o)?),
                    theta_domain,
                )
            }
        };
        Ok(match domain {
            Some([lo, hi]) => profile.with_domain(ThetaDomain::new(*lo, *hi).map_err(|e| bad(e.to_string()))?),
            None => profile,
        })
    }

    pub fn body(&self) -> CliResult<BodyParams> {
        let BodyConfig { m, g, inertia } = &self.body;
        let (m, g) = (finite("m", *m)?, finite("g", *g)?);
        let body = match (inertia, &self.surface) {
            (InertiaConfig::Explicit(e), _) => BodyParams::new(m, finite("I1", e.i1)?, finite("I3", e.i3)?, g),
            (InertiaConfig::Preset(p), SurfaceConfig::Torus { major, r, .. }) => match p {
                InertiaPreset::Solid => BodyParams::solid_torus(m, *major, *r, g),
                InertiaPreset::Hollow => BodyParams::hollow_torus(m, *major, *r, g),
            },
            (InertiaConfig::Preset(_), _) => {
                return Err(bad("inertia presets are defined for tori only; give I1 and I3"));
            }
        };
        body.map_err(|e| bad(e.to_string()))
    }

    pub fn method(&self) -> CliResult<Method> {
        let i = &self.integrator;
        Ok(match i.method {
            MethodConfig::Rk4 => Method::Rk4,
            MethodConfig::AdaptiveRk45 => {
                if !(i.atol > 0.0 && i.rtol > 0.0) {
                    return Err(bad("atol and rtol must be positive"));
                }
                Method::AdaptiveRk45 {
                    atol: i.atol,
                    rtol: i.rtol,
                }
            }
        })
    }

    /// Validate every field and build the scene.
    pub fn scene(&self, overrides: &Overrides) -> CliResult<Scene> {
        let coeffs = Coefficients::from_profile(&self.profile()?, self.body()?).map_err(|e| bad(e.to_string()))?;
        let method = self.method()?;
        let (dt, t_end) = (self.integrator.dt, self.integrator.t_end);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(bad(format!("dt must be positive, got {dt}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(bad(format!("t_end must be non-negative, got {t_end}")));
        }
        if let Some(scan) = &self.scan {
            finite("scan.ell_min", scan.ell_min)?;
            finite("scan.ell_max", scan.ell_max)?;
        }
        if self.plot.theta_samples < 2 || self.plot.phase_grid < 2 || !(self.plot.p_max > 0.0) {
            return Err(bad("plot needs at least 2 samples per axis and p_max > 0"));
        }
        let domain = coeffs.geometry().domain();
        let (initial, pose) = match &self.initial {
            InitialConfig::Reduced { theta0, p_theta0, ell } => {
                let theta = finite("theta0", *theta0)?;
                domain.check(theta).map_err(|e| bad(e.to_string()))?;
                let ell = overrides.ell.unwrap_or(finite("ell", *ell)?);
                (
                    ReducedState::new(theta, finite("p_theta0", *p_theta0)?, ell),
                    PlanarPose::default(),
                )
            }
            InitialConfig::Full(f) => full_to_reduced(&coeffs, f, overrides.ell)?,
        };
        finite("ell", initial.ell)?;
        Ok(Scene {
            coeffs,
            initial,
            pose,
            method,
            dt,
            t_end,
            hash: self.hash(overrides),
        })
    }

    pub fn certification(&self, overrides: &Overrides) -> CertificationConfig {
        let mut cfg = self.verify;
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        cfg
    }
}

/// `p_θ = B θ̇`, `ℓ = N sin²θ ψ̇`; an `--ell` override replaces `ψ̇`.
fn full_to_reduced(
    coeffs: &Coefficients,
    f: &FullInitialConfig,
    ell_override: Option<f64>,
) -> CliResult<(ReducedState, PlanarPose)> {
    let theta = finite("theta0", f.theta0)?;
    let geo = coeffs.geometry();
    let g = geo.eval(theta).map_err(|e| bad(e.to_string()))?;
    if g.sin.abs() < 1e-12 {
        return Err(bad("theta0 lies on a pole of the Euler chart"));
    }
    let pose = PlanarPose {
        psi: finite("psi0", f.psi0)?,
        phi: finite("phi0", f.phi0)?,
        x: finite("x0", f.x0)?,
        y: finite("y0", f.y0)?,
    };
    let p_theta = coeffs.b_at(&g) * finite("theta_dot0", f.theta_dot0)?;
    let ell = match ell_override {
        Some(ell) => ell,
        None => coeffs.nose_sq_at(&g).sqrt() * g.sin * g.sin * finite("psi_dot0", f.psi_dot0)?,
    };
    let state = ReducedState::new(theta, p_theta, ell);
    if ell_override.is_none() {
        let matched = FullInitial::matched(coeffs, &state, pose).map_err(|e| bad(e.to_string()))?;
        for (name, given, implied) in [
            ("phi_dot0", f.phi_dot0, matched.qd[2]),
            ("x_dot0", f.x_dot0, matched.qd[3]),
            ("y_dot0", f.y_dot0, matched.qd[4]),
        ] {
            if let Some(v) = given {
                if (v - implied).abs() > RATE_TOLERANCE * implied.abs().max(1.0) {
                    return Err(bad(format!(
                        "{name} = {v} violates the rolling constraints (expected {implied})"
                    )));
                }
            }
        }
    }
    Ok((state, pose))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TORUS: &str = r#"{
        "surface": {"kind": "torus", "R": 1.0, "r": 0.5},
        "body": {"m": 1.0, "g": 1.0, "inertia": {"I1": 0.65625, "I3": 0.6875}},
        "initial": {"reduced": {"theta0": 0.3, "p_theta0": 0.0, "ell": 0.1}}
    }"#;

    #[test]
    fn parses_minimal_torus() {
        let cfg = SceneConfig::from_json(TORUS).unwrap();
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        let scene = cfg.scene(&Overrides::default()).unwrap();
        assert_eq!(scene.initial.ell, 0.1);
        assert_eq!(scene.hash.len(), 64);
    }

    #[test]
    fn rejects_unknown_keys_everywhere() {
        for (from, to) in [
            (r#""r": 0.5}"#, r#""r": 0.5, "q": 1}"#),
            (r#""g": 1.0,"#, r#""g": 1.0, "mass": 2,"#),
            (r#""ell": 0.1}"#, r#""ell": 0.1, "extra": 0}"#),
            (r#""I3": 0.6875}"#, r#""I3": 0.6875, "I2": 1}"#),
        ] {
            let text = TORUS.replacen(from, to, 1);
            assert_ne!(text, TORUS);
            assert!(SceneConfig::from_json(&text).is_err(), "{text}");
        }
        let text = TORUS.replacen("}\n    }", "},\n \"extra\": {}\n    }", 1);
        assert!(SceneConfig::from_json(&text).is_err());
    }

    #[test]
    fn hash_tracks_content_and_overrides() {
        let cfg = SceneConfig::from_json(TORUS).unwrap();
        let base = cfg.hash(&Overrides::default());
        assert_eq!(
            base,
            SceneConfig::from_json(&TORUS.replace("    ", "  "))
                .unwrap()
                .hash(&Overrides::default())
        );
        let over = Overrides {
            ell: Some(0.2),
            ..Default::default()
        };
        assert_ne!(base, cfg.hash(&over));
        let mut other = cfg.clone();
        other.integrator.dt = 2e-3;
        assert_ne!(base, other.hash(&Overrides::default()));
    }

    #[test]
    fn validates_before_running() {
        let cfg = SceneConfig::from_json(&TORUS.replace("\"theta0\": 0.3", "\"theta0\": 3.5")).unwrap();
        assert!(matches!(cfg.scene(&Overrides::default()), Err(CliError::Config(_))));
        let mut cfg = SceneConfig::from_json(TORUS).unwrap();
        cfg.integrator.dt = 0.0;
        assert!(matches!(cfg.scene(&Overrides::default()), Err(CliError::Config(_))));
        let cfg = SceneConfig::from_json(&TORUS.replace("\"r\": 0.5", "\"r\": 1.5")).unwrap();
        assert!(matches!(cfg.scene(&Overrides::default()), Err(CliError::Config(_))));
    }

    #[test]
    fn presets_only_for_tori() {
        let solid = TORUS.replace(r#"{"I1": 0.65625, "I3": 0.6875}"#, r#""solid""#);
        let scene = SceneConfig::from_json(&solid)
            .unwrap()
            .scene(&Overrides::default())
            .unwrap();
        assert_eq!(scene.coeffs.body().i3, 1.1875);
        let general = solid.replace(
            r#"{"kind": "torus", "R": 1.0, "r": 0.5}"#,
            r#"{"kind": "general", "curvature": {"constant": 0.5}, "h_o": 1.0, "f_o": 0.5}"#,
        );
        assert!(SceneConfig::from_json(&general)
            .unwrap()
            .scene(&Overrides::default())
            .is_err());
    }

    #[test]
    fn full_initial_conditions_map_to_reduced() {
        let text = TORUS.replace(
            r#"{"reduced": {"theta0": 0.3, "p_theta0": 0.0, "ell": 0.1}}"#,
            r#"{"full": {"theta0": 1.0, "theta_dot0": 0.2, "psi_dot0": 0.5, "phi0": 0.3}}"#,
        );
        let cfg = SceneConfig::from_json(&text).unwrap();
        let scene = cfg.scene(&Overrides::default()).unwrap();
        let c = &scene.coeffs;
        let expected_ell = c.nose(1.0).unwrap() * 1f64.sin().powi(2) * 0.5;
        assert!((scene.initial.ell - expected_ell).abs() < 1e-15);
        assert!((scene.initial.p_theta - 0.2 * c.coeff_b(1.0).unwrap()).abs() < 1e-15);
        assert_eq!(scene.pose.phi, 0.3);

        let wrong = text.replace(r#""phi0": 0.3"#, r#""phi0": 0.3, "phi_dot0": 0.0"#);
        assert!(SceneConfig::from_json(&wrong)
            .unwrap()
            .scene(&Overrides::default())
            .is_err());
        let right = text.replace(
            r#""phi0": 0.3"#,
            &format!(r#""phi0": 0.3, "phi_dot0": {}"#, -1f64.cos() * 0.5),
        );
        assert!(SceneConfig::from_json(&right)
            .unwrap()
            .scene(&Overrides::default())
            .is_ok());
    }

    #[test]
    fn curvature_variants_parse() {
        for curvature in [
            r#"{"constant": 0.5}"#,
            r#"{"table": [[0.0, 0.5], [1.0, 0.5], [3.141592653589793, 0.5]]}"#,
            r#"{"ellipse": {"a": 1.0, "c": 0.6}}"#,
        ] {
            let f_o = if curvature.contains("ellipse") { 0.6 } else { 0.5 };
            let h_o = if curvature.contains("ellipse") { 0.0 } else { 1.0 };
            let text = TORUS.replace(
                r#"{"kind": "torus", "R": 1.0, "r": 0.5}"#,
                &format!(r#"{{"kind": "general", "curvature": {curvature}, "h_o": {h_o}, "f_o": {f_o}}}"#),
            );
            SceneConfig::from_json(&text)
                .unwrap()
                .scene(&Overrides::default())
                .unwrap();
        }
        let short = TORUS.replace(
            r#"{"kind": "torus", "R": 1.0, "r": 0.5}"#,
            r#"{"kind": "general", "curvature": {"table": [[0.0, 0.5], [1.0, 0.5]]}, "h_o": 1.0, "f_o": 0.5}"#,
        );
        assert!(SceneConfig::from_json(&short)
            .unwrap()
            .scene(&Overrides::default())
            .is_err());
    }
}
