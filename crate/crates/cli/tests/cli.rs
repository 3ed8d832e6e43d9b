use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use parityforge_cli::{output::read_state, ReportFile};
use parityforge_core::analysis::{wigner, WignerGridSpec};
use serde_json::Value;
use tempfile::TempDir;

const DELTA: f64 = 3.5449077018110318;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_parityforge"));
    c.env_remove("PARITYFORGE_JOBS").env("RUST_LOG", "error");
    c
}

/// Writes `config` (with `output_dir` pointing into `dir`) and returns its path.
fn write_config(dir: &TempDir, name: &str, mut config: Value) -> PathBuf {
    let out = dir.path().join(format!("{name}-out"));
    config["output_dir"] = Value::from(out.to_str().unwrap());
    let path = dir.path().join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn out_dir(config: &Path) -> PathBuf {
    let stem = config.file_stem().unwrap().to_str().unwrap();
    config.with_file_name(format!("{stem}-out"))
}

fn run(config: &Path) -> Output {
    bin().arg("run").arg(config).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().find(|l| l.starts_with("{\"error\"")).unwrap_or_else(|| panic!("no error record: {text}"));
    serde_json::from_str::<Value>(line).unwrap()["error"].clone()
}

fn read_report(config: &Path) -> ReportFile {
    let text = std::fs::read_to_string(out_dir(config).join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn squeeze_m3(outputs: &[&str]) -> Value {
    serde_json::json!({
        "protocol": "squeeze", "M": 3, "t_max": 0.8, "epsilon": 0.0, "n_cut": 201, "outputs": outputs
    })
}

#[test]
fn squeeze_run_reports_squeezing_and_probability() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sq", squeeze_m3(&["report", "state", "log"]));
    let o = run(&cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_report(&cfg);
    assert_eq!(r.schema_version, "1");
    let s = r.squeezing.unwrap();
    assert!((s.s_db - 8.9).abs() < 0.2, "s_db = {}", s.s_db);
    let p = r.run_log.as_ref().unwrap().cumulative_probability;
    assert!((p - 0.32).abs() < 0.02, "p = {p}");
    assert_eq!(r.files, ["state.csv", "log.csv", "report.json"]);

    let state = std::fs::read_to_string(out_dir(&cfg).join("state.csv")).unwrap();
    let mut lines = state.lines();
    assert_eq!(lines.next(), Some("index,re,im"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 202);
    let re = rows[0].split(',').nth(1).unwrap();
    let mantissa = re.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.len(), 18, "17 significant digits expected in {re}");

    let log = std::fs::read_to_string(out_dir(&cfg).join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 4);
}

#[test]
fn report_round_trips_and_echoes_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "rt", squeeze_m3(&["report"]));
    assert!(run(&cfg).status.success());
    let text = std::fs::read_to_string(out_dir(&cfg).join("report.json")).unwrap();
    let r: ReportFile = serde_json::from_str(&text).unwrap();
    let again: ReportFile = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, again);
    let echoed = serde_json::to_value(&r.config).unwrap();
    let original: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    for key in ["protocol", "M", "t_max", "epsilon", "n_cut", "output_dir"] {
        assert_eq!(echoed[key], original[key], "{key}");
    }
}

#[test]
fn identical_configs_give_identical_numbers() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let mut c = serde_json::json!({
            "protocol": "gkp", "M": 3, "t_max": 0.8, "delta": DELTA, "comb_steps": 2, "n_cut": 201,
            "outputs": ["report", "state"]
        });
        c["wigner_grid"] = serde_json::json!({"x_range": [-3, 3], "p_range": [-3, 3], "resolution": 11});
        let cfg = write_config(&dir, name, c);
        assert!(run(&cfg).status.success());
        let mut r = read_report(&cfg);
        r.timings = Default::default();
        r.config.output_dir = PathBuf::new();
        reports.push((r, std::fs::read(out_dir(&cfg).join("state.csv")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    let fit = reports[0].0.gkp_fit.unwrap();
    assert!(fit.fidelity > 0.97, "{fit:?}");
}

#[test]
fn cat_matches_analytic_superposition() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "cat",
        serde_json::json!({"protocol": "cat", "M": 2, "delta": DELTA, "n_cut": 201, "outputs": ["report"]}),
    );
    let o = run(&cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cat = read_report(&cfg).cat.unwrap();
    assert_eq!(cat.components, 4);
    assert!(cat.fidelity_vs_analytic >= 1.0 - 1e-6);
}

#[test]
fn explicit_cat_displacements_as_pairs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "pairs",
        serde_json::json!({
            "protocol": "cat", "alphas": [[DELTA / 2.0, 0.0], [0.0, DELTA / 2.0]], "n_cut": 201, "outputs": ["report"]
        }),
    );
    assert!(run(&cfg).status.success());
    assert!(read_report(&cfg).cat.unwrap().fidelity_vs_analytic >= 1.0 - 1e-6);
}

#[test]
fn loss_sweep_has_one_row_per_point_and_the_expected_shape() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sweep",
        serde_json::json!({
            "protocol": "squeeze", "M": 3, "n_cut": 51,
            "sweep": [
                {"parameter": "epsilon", "values": [0.0, 0.05, 0.15]},
                {"parameter": "t_max", "min": 0.0, "max": 2.0, "steps": 21}
            ]
        }),
    );
    let o = run(&cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_report(&cfg).sweep.unwrap();
    assert_eq!(rows.len(), 63);
    assert!(rows.iter().all(|r| r.error.is_none()));
    let peak: Vec<(f64, f64)> = rows
        .chunks(21)
        .map(|c| {
            let best = c.iter().max_by(|a, b| a.s_db.unwrap().total_cmp(&b.s_db.unwrap())).unwrap();
            (best.parameters[1].1, best.s_db.unwrap())
        })
        .collect();
    for &(t, _) in &peak {
        assert!((0.6..=1.0).contains(&t), "{peak:?}");
    }
    assert!(peak[0].1 > peak[1].1 && peak[1].1 > peak[2].1, "{peak:?}");

    let csv = std::fs::read_to_string(out_dir(&cfg).join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,t_max,s_db,p_suc,tail_mass,fidelity,energy,error"));
    assert_eq!(lines.count(), 63);
}

#[test]
fn failed_sweep_points_carry_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad",
        serde_json::json!({
            "protocol": "squeeze", "M": 3, "t_max": 0.5, "n_cut": 60,
            "sweep": [{"parameter": "M", "values": [3, 4, 5]}]
        }),
    );
    let o = run(&cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_report(&cfg).sweep.unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].error.is_none() && rows[2].error.is_none());
    assert!(rows[1].error.as_deref().unwrap().contains("M must be odd"));
    let csv = std::fs::read_to_string(out_dir(&cfg).join("sweep.csv")).unwrap();
    let line = csv.lines().nth(2).unwrap();
    assert!(line.contains("M must be odd"), "{line}");
}

#[test]
fn validate_reports_even_m() {
    let dir = TempDir::new().unwrap();
    let mut c = squeeze_m3(&["report"]);
    c["M"] = Value::from(4);
    let cfg = write_config(&dir, "even", c);
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_error(&o);
    assert_eq!(err["kind"], "ConfigError");
    assert!(err["violations"].as_array().unwrap().iter().any(|v| v.as_str().unwrap().contains("M must be odd")));
    assert!(!out_dir(&cfg).exists());
}

#[test]
fn validate_warns_about_small_gkp_truncation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "gkp",
        serde_json::json!({"protocol": "gkp", "M": 3, "t_max": 0.8, "delta": DELTA, "n_cut": 51}),
    );
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert!(v["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("n_cut >= 201")));
    assert!(!out_dir(&cfg).exists());
}

#[test]
fn validate_accepts_empty_sweep_with_note() {
    let dir = TempDir::new().unwrap();
    let mut c = squeeze_m3(&["report"]);
    c["sweep"] = serde_json::json!([]);
    let cfg = write_config(&dir, "empty", c);
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert!(o.status.success());
    let notes = stdout_json(&o)["notes"].clone();
    assert!(notes.as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("no sweep")));
}

#[test]
fn unparseable_config_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"protocol\": \"squeeze\", ").unwrap();
    let o = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["kind"], "ConfigError");
}

#[test]
fn tail_overflow_is_reported_with_tail_mass() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "tail",
        serde_json::json!({"protocol": "gkp", "M": 3, "t_max": 0.8, "delta": DELTA, "comb_steps": 2, "n_cut": 30}),
    );
    let o = run(&cfg);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr_error(&o);
    assert_eq!(err["kind"], "TailOverflow");
    assert!(err["tail_mass"].as_f64().unwrap() > 1e-6);
}

#[test]
fn wigner_subcommand_matches_library() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "w", squeeze_m3(&["state"]));
    assert!(run(&cfg).status.success());
    let state_path = out_dir(&cfg).join("state.csv");
    let out = dir.path().join("w.csv");
    let o = bin()
        .args(["wigner", state_path.to_str().unwrap(), "--grid", "-3,3,-2,2,21", "-o", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    assert_eq!(summary["wigner"]["resolution"], 21);

    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 21 * 21);
    let state = read_state(&state_path).unwrap();
    let grid = wigner(&state, &WignerGridSpec::new((-3.0, 3.0), (-2.0, 2.0), 21).unwrap());
    for (k, row) in rows.iter().enumerate() {
        let (i, j) = (k / 21, k % 21);
        assert_eq!(row[0], grid.xs[i]);
        assert_eq!(row[1], grid.ps[j]);
        assert_eq!(row[2], grid.values[(i, j)]);
    }
}

#[test]
fn mixed_state_density_matrix_feeds_wigner() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "mixed",
        serde_json::json!({
            "protocol": "squeeze", "M": 3, "t_max": 0.8, "epsilon": 0.15, "n_cut": 30,
            "full_density_matrix": true, "outputs": ["state", "wigner", "report"],
            "wigner_grid": {"x_range": [-5, 5], "p_range": [-5, 5], "resolution": 41}
        }),
    );
    let o = run(&cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dm = out_dir(&cfg).join("density_matrix.csv");
    assert_eq!(std::fs::read_to_string(&dm).unwrap().lines().count(), 31 * 31 + 1);
    let diag = std::fs::read_to_string(out_dir(&cfg).join("state.csv")).unwrap();
    assert!(diag.starts_with("index,rho_nn"));
    let r = read_report(&cfg);
    let w = r.wigner.unwrap();
    assert!((w.integral - 1.0).abs() < 1e-3);
    assert!(r.state.unwrap().purity < 1.0);

    let o = bin().args(["wigner", dm.to_str().unwrap(), "--grid", "-5,5,-5,5,41"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["wigner"]["max"], w.max);

    let o = bin().args(["wigner", out_dir(&cfg).join("state.csv").to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["kind"], "InputError");
}

#[test]
fn malformed_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g", squeeze_m3(&["state"]));
    assert!(run(&cfg).status.success());
    let state = out_dir(&cfg).join("state.csv");
    let o = bin().args(["wigner", state.to_str().unwrap(), "--grid", "-3,3,1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["kind"], "ConfigError");
}

#[test]
fn jobs_environment_overrides_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "jobs", squeeze_m3(&["report"]));
    let o = bin().args(["--jobs", "3", "run"]).arg(&cfg).env("PARITYFORGE_JOBS", "1").output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["jobs"], 1);
    let o = bin().args(["--jobs", "2", "run"]).arg(&cfg).output().unwrap();
    assert_eq!(stdout_json(&o)["jobs"], 2);
    let o = bin().arg("run").arg(&cfg).env("PARITYFORGE_JOBS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hamiltonian_protocol_reports_ground_energy() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "ham",
        serde_json::json!({"protocol": "hamiltonian", "M": 3, "t_max": 0.8, "n_cut": 60, "outputs": ["report"]}),
    );
    let o = run(&cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = read_report(&cfg).hamiltonian.unwrap();
    assert_eq!(h.points, [0.8, -0.8, 0.0]);
    assert!(h.ground_energy >= -3.0 - 1e-8 && h.ground_energy < -2.5);
    assert!(h.fidelity_vs_protocol.is_some());
}
