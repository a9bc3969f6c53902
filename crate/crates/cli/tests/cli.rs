use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rollkit_cli::commands::{compare_scene, run_scene, verify_with};
use rollkit_cli::{CliError, Context, Overrides, SceneConfig};
use rollkit_core::reconstruction::fit_circle;
use rollkit_core::{Coefficients, NoseModel};
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn rollkit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollkit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ROLLKIT_THREADS")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str], out: &Path) {
    let o = rollkit(args, out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scene.json");
    fs::write(&p, text).unwrap();
    p
}

/// Data rows of a CSV written by the tool: `(header, rows)`.
fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# rollkit "));
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_well_motion_stays_in_the_well() {
    let out = TempDir::new().unwrap();
    run_ok(
        &["simulate", "--config", config("torus_well.json").to_str().unwrap()],
        out.path(),
    );
    let (header, rows) = read_csv(&out.path().join("reduced.csv"));
    assert_eq!(header, "t,theta,p_theta,energy,ell");
    assert_eq!(rows.len(), 20001);
    let star = 0.01f64.cbrt().asin();
    for r in &rows {
        assert!(r[1] > 0.1 && r[1] < star + 0.0501, "{r:?}");
    }
    let (full_header, full_rows) = read_csv(&out.path().join("full.csv"));
    assert_eq!(full_header.split(',').count(), 15);
    assert_eq!(full_rows.len(), rows.len());
    let summary = json(&out.path().join("summary.json"));
    assert_eq!(summary["status"], "ok");
    assert!(summary["reduced_energy_drift"].as_f64().unwrap() < 1e-10);
    let svg = fs::read_to_string(out.path().join("track.svg")).unwrap();
    assert!(svg.contains(summary["config_sha256"].as_str().unwrap()));
}

#[test]
fn simulate_at_rest_gives_constant_rows() {
    let out = TempDir::new().unwrap();
    run_ok(
        &["simulate", "--config", config("torus_rest.json").to_str().unwrap()],
        out.path(),
    );
    let (_, rows) = read_csv(&out.path().join("reduced.csv"));
    assert_eq!(rows.len(), 201);
    for r in &rows {
        assert!((r[1] - FRAC_PI_2).abs() < 1e-14 && r[2].abs() < 1e-14 && r[3] == rows[0][3]);
    }
    let (_, full) = read_csv(&out.path().join("full.csv"));
    assert!(full.iter().all(|r| r[4].abs() < 1e-14 && r[5].abs() < 1e-14));
}

#[test]
fn every_output_carries_the_config_hash() {
    let out = TempDir::new().unwrap();
    let cfg = config("torus_scan.json");
    run_ok(&["equilibria", "--config", cfg.to_str().unwrap()], out.path());
    let hash = SceneConfig::load(&cfg).unwrap().hash(&Overrides::default());
    for name in [
        "equilibria.csv",
        "equilibria.json",
        "bifurcation.csv",
        "bifurcation.svg",
    ] {
        let text = fs::read_to_string(out.path().join(name)).unwrap();
        assert!(text.contains("config_sha256"), "{name}");
        assert!(text.contains(&hash), "{name}");
        assert!(
            text.contains("rollkit 0.1.0") || text.contains("\"version\": \"0.1.0\""),
            "{name}"
        );
    }
}

#[test]
fn equilibria_table_and_pitchfork() {
    let out = TempDir::new().unwrap();
    run_ok(
        &["equilibria", "--config", config("torus_scan.json").to_str().unwrap()],
        out.path(),
    );
    let text = fs::read_to_string(out.path().join("equilibria.csv")).unwrap();
    let kinds: Vec<&str> = text.lines().skip(2).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(kinds, ["stable", "unstable", "stable"]);
    let report = json(&out.path().join("equilibria.json"));
    let points = report["bifurcation"]["points"].as_array().unwrap();
    assert!(points
        .iter()
        .any(|p| p["kind"] == "pitchfork" && (p["ell"].as_f64().unwrap().powi(2) - 1.0).abs() < 1e-6));
}

#[test]
fn ell_override_changes_the_run() {
    let out = TempDir::new().unwrap();
    run_ok(
        &[
            "equilibria",
            "--config",
            config("torus_scan.json").to_str().unwrap(),
            "--ell",
            "10",
        ],
        out.path(),
    );
    let report = json(&out.path().join("equilibria.json"));
    let eq = report["equilibria"].as_array().unwrap();
    assert_eq!(eq.len(), 1);
    assert_eq!(eq[0]["stability"], "stable");
    assert_eq!(report["ell"], 10.0);
}

#[test]
fn empty_scan_range_gives_empty_diagram() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(config("torus_scan.json"))
        .unwrap()
        .replace("\"ell_min\": 0.0", "\"ell_min\": 1.5")
        .replace("\"ell_max\": 2.0", "\"ell_max\": 1.0");
    let cfg = write_config(dir.path(), &text);
    run_ok(&["equilibria", "--config", cfg.to_str().unwrap()], dir.path());
    let report = json(&dir.path().join("equilibria.json"));
    assert!(report["bifurcation"]["rows"].as_array().unwrap().is_empty());
    assert!(report["bifurcation"]["points"].as_array().unwrap().is_empty());
}

#[test]
fn output_is_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for out in [a.path(), b.path()] {
        run_ok(
            &["simulate", "--config", config("ellipsoid.json").to_str().unwrap()],
            out,
        );
        run_ok(
            &[
                "plot",
                "--kind",
                "phase",
                "--config",
                config("torus_well.json").to_str().unwrap(),
            ],
            out,
        );
        run_ok(
            &[
                "verify",
                "--config",
                config("torus_well.json").to_str().unwrap(),
                "--seed",
                "7",
            ],
            out,
        );
    }
    for name in ["reduced.csv", "full.csv", "summary.json", "phase.svg", "verify.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn plots_show_expected_features() {
    let out = TempDir::new().unwrap();
    let well = config("torus_well.json");
    run_ok(
        &["plot", "--kind", "potential", "--config", well.to_str().unwrap()],
        out.path(),
    );
    let svg = fs::read_to_string(out.path().join("potential.svg")).unwrap();
    assert!(svg
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("<!-- rollkit 0.1.0 config_sha256="));
    assert_eq!(svg.matches("class=\"stable\"").count(), 2);
    assert_eq!(svg.matches("class=\"unstable\"").count(), 1);

    run_ok(
        &[
            "plot",
            "--kind",
            "potential",
            "--config",
            well.to_str().unwrap(),
            "--ell",
            "10",
        ],
        out.path(),
    );
    let svg = fs::read_to_string(out.path().join("potential.svg")).unwrap();
    assert_eq!(svg.matches("class=\"stable\"").count(), 1);
    assert_eq!(svg.matches("class=\"unstable\"").count(), 0);

    run_ok(
        &["plot", "--kind", "bifurcation", "--config", well.to_str().unwrap()],
        out.path(),
    );
    let svg = fs::read_to_string(out.path().join("bifurcation.svg")).unwrap();
    assert_eq!(svg.matches("class=\"bifurcation\"").count(), 1);
}

#[test]
fn track_at_equilibrium_is_a_circle() {
    let star = 0.01f64.cbrt().asin();
    let text = fs::read_to_string(config("torus_well.json"))
        .unwrap()
        .replace(&format!("\"theta0\": {}", star + 0.05), &format!("\"theta0\": {star}"));
    let cfg = SceneConfig::from_json(&text).unwrap();
    let scene = cfg.scene(&Overrides::default()).unwrap();
    assert_eq!(scene.initial.theta, star);
    let (_, full, err) = run_scene(&scene).unwrap();
    assert!(err.is_none());
    let (_, radius, rms) = fit_circle(&full.contact_track()).unwrap();
    let expected = (1.0 + 0.5 * star.sin()) / star.cos();
    assert!(
        (radius - expected).abs() < 1e-6 && rms < 1e-6,
        "{radius} {expected} {rms}"
    );
}

#[test]
fn oracle_compare_matches() {
    let out = TempDir::new().unwrap();
    run_ok(
        &[
            "oracle-compare",
            "--config",
            config("torus_full.json").to_str().unwrap(),
        ],
        out.path(),
    );
    let r = json(&out.path().join("compare.json"));
    assert_eq!(r["status"], "ok");
    assert!(r["deviations"]["max_theta"].as_f64().unwrap() < 1e-6);
    assert!(r["deviations"]["max_xy"].as_f64().unwrap() < 1e-5);
    assert!(r["oracle_ell_drift"].as_f64().unwrap() < 1e-8);
    assert_eq!(r["i3_perturbed_max_theta"].as_f64().unwrap(), 0.0);
}

#[test]
fn zero_length_compare_has_zero_deviation() {
    let mut cfg = SceneConfig::load(&config("egg_table.json")).unwrap();
    cfg.integrator.t_end = 0.0;
    let (report, err) = compare_scene(&cfg.scene(&Overrides::default()).unwrap()).unwrap();
    assert!(err.is_none());
    assert_eq!(report.samples, 1);
    let d = report.deviations.unwrap();
    assert_eq!((d.max_theta, d.max_xy, d.max_psi, d.max_phi), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn verify_passes_for_bundled_bodies() {
    for name in [
        "torus_well.json",
        "torus_general.json",
        "ellipsoid.json",
        "egg_table.json",
    ] {
        let out = TempDir::new().unwrap();
        run_ok(&["verify", "--config", config(name).to_str().unwrap()], out.path());
        let r = json(&out.path().join("verify.json"));
        assert_eq!(r["pass"], true, "{name}");
        assert_eq!(r["checks"].as_array().unwrap().len(), 15);
    }
}

/// `N` scaled by a θ-dependent factor: `n` no longer matches `(log N)'`.
struct CorruptedNose<'a>(&'a Coefficients);

impl NoseModel for CorruptedNose<'_> {
    fn n_func(&self, theta: f64) -> rollkit_core::Result<f64> {
        self.0.n_func(theta)
    }

    fn nose(&self, theta: f64) -> rollkit_core::Result<f64> {
        Ok(self.0.nose(theta)? * (1.0 + 0.01 * theta.sin()))
    }
}

#[test]
fn corrupted_nose_function_fails_verification() {
    let out = TempDir::new().unwrap();
    let ctx = Context::load(&config("torus_well.json"), out.path(), Overrides::default()).unwrap();
    let coeffs = ctx.config.scene(&ctx.overrides).unwrap().coeffs;
    let bad = CorruptedNose(&coeffs);
    let err = verify_with(&ctx, Some(&bad)).unwrap_err();
    assert_eq!(err.exit_code(), 5);
    let CliError::Verify(msg) = err else { panic!() };
    assert!(
        msg.contains("nose_log_derivative") && msg.contains("phi_simple_potential"),
        "{msg}"
    );
    let report = json(&out.path().join("verify.json"));
    assert_eq!(report["pass"], false);
    assert!(verify_with(&ctx, None).is_ok());
}

#[test]
fn tight_tolerance_exits_with_verification_code() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(config("torus_well.json")).unwrap().replace(
        "\"output\"",
        "\"verify\": {\"tolerances\": {\"bracket\": 1e-20}},\n  \"output\"",
    );
    let cfg = write_config(dir.path(), &text);
    let o = rollkit(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let base = fs::read_to_string(config("torus_well.json")).unwrap();
    for text in [
        base.replace("\"R\": 1.0", "\"R\": 1.0, \"colour\": \"red\""),
        base.replace("\"dt\": 0.001", "\"dt\": -1.0"),
        base.replace("\"R\": 1.0", "\"R\": 0.2"),
        "{ not json".to_string(),
    ] {
        assert_ne!(text, base);
        let cfg = write_config(dir.path(), &text);
        let o = rollkit(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
    let o = rollkit(&["simulate", "--config", "/nonexistent/scene.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_rollkit"))
        .args(["simulate", "--config", config("torus_rest.json").to_str().unwrap()])
        .arg("--out")
        .arg(dir.path())
        .env("ROLLKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn singularity_flushes_partial_output_and_exits_3() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(config("torus_rest.json"))
        .unwrap()
        .replace(&format!("\"theta0\": {}", FRAC_PI_2), "\"theta0\": 0.3")
        .replace("\"p_theta0\": 0.0", "\"p_theta0\": -1.0");
    let cfg = write_config(dir.path(), &text);
    let o = rollkit(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("reduced.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("# abort t="), "{last}");
    let (_, rows) = read_csv(&dir.path().join("reduced.csv"));
    assert!(!rows.is_empty() && rows.len() < 201);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["status"], "aborted");
    assert_eq!(summary["abort"]["last_t"].as_f64().unwrap(), rows.last().unwrap()[0]);
}

#[test]
fn unwritable_output_exits_with_code_4() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = rollkit(
        &["simulate", "--config", config("torus_rest.json").to_str().unwrap()],
        &blocker.join("sub"),
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn thread_cap_does_not_change_results() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let cfg = config("torus_scan.json");
    run_ok(&["equilibria", "--config", cfg.to_str().unwrap()], a.path());
    let o = Command::new(env!("CARGO_BIN_EXE_rollkit"))
        .args(["equilibria", "--config", cfg.to_str().unwrap()])
        .arg("--out")
        .arg(b.path())
        .env("ROLLKIT_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(
        fs::read(a.path().join("bifurcation.csv")).unwrap(),
        fs::read(b.path().join("bifurcation.csv")).unwrap()
    );
}
