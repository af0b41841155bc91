//! End-to-end checks of the `fluids` binary: run-directory schema, output
//! determinism, exit codes, and the stdout-only subcommands.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fluids() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fluids"));
    cmd.env_remove("FLUIDS_OUTPUT_DIR");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary spawns")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn dir_entries(path: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("write config");
    path
}

const SMOKE_EULER: &str = r#"model = "euler1d"
initial = "modes"
modes = "0:1:0,4:0.25:0"
n = 64
dt = 0.02
t_end = 0.2
run_name = "smoke"
"#;

#[test]
fn a_config_run_writes_exactly_the_documented_files() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = write_config(tmp.path(), "smoke.toml", SMOKE_EULER);
    let out = run(fluids()
        .arg("euler1d")
        .arg("--config")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(tmp.path().join("out")));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let run_dir = tmp.path().join("out/smoke");
    assert_eq!(
        dir_entries(&run_dir),
        vec!["config.toml", "manifest.json", "trajectory.csv"]
    );
    let echo = std::fs::read_to_string(run_dir.join("config.toml")).expect("echo");
    assert_eq!(echo, SMOKE_EULER, "the config echo is the source file verbatim");
    let csv = std::fs::read_to_string(run_dir.join("trajectory.csv")).expect("csv");
    assert!(csv.starts_with(
        "t,linf,l1,mean,grad_linf,hprime0,hprime_quarter,spectral_tail,stretch_integral\n"
    ));
    assert!(csv.lines().count() >= 11, "expected one row per sample: {csv}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).expect("read"))
            .expect("valid json");
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["model"], "euler1d");
    assert_eq!(manifest["stepper"], "pseudospectral");
    assert_eq!(manifest["n"], 64);
    let stdout = stdout_of(&out);
    assert!(
        stdout.contains("run directory:"),
        "run location should be announced: {stdout}"
    );
}

#[test]
fn rerunning_a_config_is_bit_identical_and_suffixes_the_directory() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = write_config(tmp.path(), "smoke.toml", SMOKE_EULER);
    for _ in 0..2 {
        let out = run(fluids()
            .arg("euler1d")
            .arg("--config")
            .arg(&cfg)
            .arg("--output-dir")
            .arg(tmp.path().join("out")));
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    }
    assert_eq!(dir_entries(&tmp.path().join("out")), vec!["smoke", "smoke-2"]);
    let first = std::fs::read(tmp.path().join("out/smoke/trajectory.csv")).expect("first");
    let second = std::fs::read(tmp.path().join("out/smoke-2/trajectory.csv")).expect("second");
    assert_eq!(first, second, "identical runs must produce identical trajectories");
}

#[test]
fn the_environment_root_overrides_the_configured_one() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let configured = tmp.path().join("configured");
    let env_root = tmp.path().join("redirected");
    let cfg = write_config(
        tmp.path(),
        "smoke.toml",
        &format!("{SMOKE_EULER}output_dir = {:?}\n", configured.to_str().expect("utf-8")),
    );
    let out = run(fluids()
        .arg("euler1d")
        .arg("--config")
        .arg(&cfg)
        .env("FLUIDS_OUTPUT_DIR", &env_root));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(env_root.join("smoke").is_dir());
    assert!(!configured.exists(), "the configured root must stay untouched");
}

#[test]
fn unknown_config_keys_exit_with_code_3_and_name_the_key() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        &format!("{SMOKE_EULER}vorticity_flux = 1.0\n"),
    );
    let out = run(fluids().arg("euler1d").arg("--config").arg(&cfg));
    assert_eq!(out.status.code(), Some(3));
    let stderr = stderr_of(&out);
    assert!(
        stderr.contains("vorticity_flux"),
        "the offending key should be named: {stderr}"
    );
}

#[test]
fn a_model_subcommand_mismatch_exits_with_code_3() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = write_config(tmp.path(), "smoke.toml", SMOKE_EULER);
    let out = run(fluids().arg("sqg").arg("--config").arg(&cfg));
    assert_eq!(out.status.code(), Some(3));
    let stderr = stderr_of(&out);
    assert!(stderr.contains("model"), "stderr: {stderr}");
    assert!(stderr.contains("euler1d"), "stderr: {stderr}");
}

#[test]
fn a_missing_config_file_exits_with_code_3() {
    let out = run(fluids()
        .arg("euler1d")
        .arg("--config")
        .arg("/nonexistent/nowhere.toml"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn a_cfl_violation_exits_with_code_2_but_keeps_the_run_directory() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = write_config(
        tmp.path(),
        "reckless.toml",
        r#"model = "euler1d"
initial = "modes"
modes = "0:4:0,4:1:0"
n = 64
dt = 5.0
t_end = 10.0
run_name = "reckless"
"#,
    );
    let out = run(fluids()
        .arg("euler1d")
        .arg("--config")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(tmp.path().join("out")));
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/reckless/manifest.json")).expect("manifest"),
    )
    .expect("valid json");
    assert!(
        manifest["abort"].as_str().expect("abort recorded").contains("CFL"),
        "manifest: {manifest}"
    );
}

#[test]
fn a_halting_stretching_run_reports_its_verdict_and_exits_cleanly() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = write_config(
        tmp.path(),
        "steepen.toml",
        r#"model = "degregorio"
a = -1.0
initial = "modes"
modes = "1:0:1"
n = 128
dt = 0.01
t_end = 8.0
symmetry_m = 1
odd_axis = 0.0
blowup_threshold = 3.0
run_name = "steepen"
"#,
    );
    let out = run(fluids()
        .arg("degregorio")
        .arg("--config")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(tmp.path().join("out")));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(stdout.contains("verdict: suspected-blowup"), "stdout: {stdout}");
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/steepen/manifest.json")).expect("manifest"),
    )
    .expect("valid json");
    assert_eq!(manifest["verdict"], "suspected-blowup");
    assert!(manifest["measured"]["halt_time"].as_f64().expect("halt time") > 0.0);
    let csv = std::fs::read_to_string(tmp.path().join("out/steepen/trajectory.csv")).expect("csv");
    assert!(csv.starts_with("t,linf,l1,mean,grad_linf,spectral_tail,bkm_integral,tail_ratio\n"));
}

#[test]
fn an_equal_vortex_pair_translates_with_a_locked_gap() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(fluids()
        .args(["vortex", "--weights", "1,1", "--positions", "-0.2,0.2"])
        .args(["--t-end", "5.0", "--dt", "0.005"])
        .arg("--output-dir")
        .arg(tmp.path()));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(tmp.path().join("vortex/trajectory.csv")).expect("csv");
    assert!(csv.starts_with("t,pos0,pos1,gap0\n"));
    let last = csv.lines().last().expect("rows");
    let cells: Vec<f64> = last.split(',').map(|c| c.parse().expect("float")).collect();
    assert!(
        (cells[3] - 0.4).abs() <= 1e-12,
        "an equal pair keeps its gap: {last}"
    );
    assert!(cells[1] > 1.0, "the pair should have translated: {last}");
}

#[test]
fn colliding_vortices_exit_with_code_2() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(fluids()
        .args(["vortex", "--weights", "-1,1", "--positions", "0.2,0.35"])
        .args(["--t-end", "50.0", "--dt", "0.005"])
        .arg("--output-dir")
        .arg(tmp.path()));
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("vortex/manifest.json")).expect("manifest"),
    )
    .expect("valid json");
    assert!(manifest["abort"].is_string(), "manifest: {manifest}");
}

#[test]
fn gap3_scan_measures_orbit_periods() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(fluids()
        .args(["gap3", "--scan", "1.2,1.4", "--t-end", "30.0", "--dt", "0.001"])
        .arg("--output-dir")
        .arg(tmp.path()));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv =
        std::fs::read_to_string(tmp.path().join("gap3-scan/trajectory.csv")).expect("csv");
    assert!(csv.starts_with("energy,z_diagonal,period\n"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let period: f64 = row.split(',').nth(2).expect("period column").parse().expect("float");
        assert!(
            period.is_finite() && period > 0.1,
            "each level should close an orbit: {row}"
        );
    }
}

#[test]
fn gap3_trajectories_conserve_the_energy() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(fluids()
        .args(["gap3", "--z1", "0.3", "--z2", "0.5", "--t-end", "20.0", "--dt", "0.001"])
        .arg("--output-dir")
        .arg(tmp.path()));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("gap3/manifest.json")).expect("manifest"),
    )
    .expect("valid json");
    let drift = manifest["measured"]["energy_drift"].as_f64().expect("drift");
    assert!(drift <= 1e-9, "gap energy should be conserved: {drift}");
}

#[test]
fn lift_prints_json_lines_and_writes_nothing() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(fluids()
        .current_dir(tmp.path())
        .args(["lift", "--modes", "3:1:0,6:0:0.5"])
        .args(["--at", "1.0,0.5", "--at", "-2.0,0.1", "--at", "0,0"]));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let lines: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is json"))
        .collect();
    assert_eq!(lines.len(), 3);
    for line in &lines {
        for key in ["x1", "x2", "omega", "u1", "u2", "psi"] {
            assert!(
                line[key].as_f64().expect("numeric field").is_finite(),
                "field {key} in {line}"
            );
        }
    }
    let origin = &lines[2];
    assert_eq!(origin["u1"].as_f64().unwrap(), 0.0);
    assert_eq!(origin["u2"].as_f64().unwrap(), 0.0);
    assert_eq!(
        dir_entries(tmp.path()),
        Vec::<String>::new(),
        "lift must not create run directories"
    );
}

#[test]
fn the_stretching_lift_needs_mean_free_data() {
    let out = run(fluids().args(["lift", "--sqg", "--modes", "0:1:0", "--at", "1,0"]));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kernel_decay_tabulates_the_requested_orders() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(fluids()
        .args(["kernel-decay", "--m", "3", "--separations", "2,10,50"])
        .arg("--output-dir")
        .arg(tmp.path()));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(tmp.path().join("kernel-decay-m3/trajectory.csv"))
        .expect("csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "separation,ratio");
    assert_eq!(rows.len(), 4);
}

#[test]
fn a_quick_boundary_preset_produces_a_fit_report() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = run(fluids()
        .args(["preset", "thm-boundary", "--n", "256", "--t-end", "2.0"])
        .args(["--dt", "0.02", "--sample-interval", "0.05"])
        .arg("--output-dir")
        .arg(tmp.path()));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let run_dir = tmp.path().join("thm-boundary");
    assert_eq!(
        dir_entries(&run_dir),
        vec!["config.toml", "fit.json", "manifest.json", "trajectory.csv"]
    );
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("fit.json")).expect("fit"))
            .expect("valid json");
    assert_eq!(fit["kind"], "exponential");
    assert!(fit["exponent_or_rate"].as_f64().expect("rate").is_finite());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(run_dir.join("manifest.json")).expect("manifest"),
    )
    .expect("valid json");
    for key in ["boundary_rate", "plateau_defect_final", "hprime0_final"] {
        assert!(manifest["measured"][key].is_number(), "missing {key}: {manifest}");
    }
}

#[test]
fn an_unknown_preset_name_exits_with_code_3() {
    let out = run(fluids().args(["preset", "thm-typo"]));
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("thm-growth"));
}

#[test]
fn sweep_runs_every_matching_config() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let configs = tmp.path().join("configs");
    std::fs::create_dir(&configs).expect("mkdir");
    write_config(&configs, "a.toml", SMOKE_EULER);
    write_config(
        &configs,
        "b.toml",
        r#"model = "sqg-approx"
initial = "modes"
modes = "2:0:0.1"
n = 64
dt = 0.01
t_end = 0.3
symmetry_m = 2
odd_axis = 0.0
run_name = "quiet"
"#,
    );
    let pattern = format!("{}/*.toml", configs.to_str().expect("utf-8"));
    let out = run(fluids()
        .args(["sweep", &pattern])
        .arg("--output-dir")
        .arg(tmp.path().join("out")));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(dir_entries(&tmp.path().join("out")), vec!["quiet", "smoke"]);
    let stdout = stdout_of(&out);
    assert!(stdout.contains("swept 2 configs: 2 ok"), "stdout: {stdout}");
}

#[test]
fn sweep_reports_invalid_configs_with_code_3() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let configs = tmp.path().join("configs");
    std::fs::create_dir(&configs).expect("mkdir");
    write_config(&configs, "a.toml", SMOKE_EULER);
    write_config(&configs, "broken.toml", "model = \"euler1d\"\n");
    let pattern = format!("{}/*.toml", configs.to_str().expect("utf-8"));
    let out = run(fluids()
        .args(["sweep", &pattern])
        .arg("--output-dir")
        .arg(tmp.path().join("out")));
    assert_eq!(out.status.code(), Some(3));
    let stdout = stdout_of(&out);
    assert!(stdout.contains("1 ok"), "stdout: {stdout}");
    assert!(stdout.contains("1 invalid"), "stdout: {stdout}");
}

#[test]
fn sweep_with_no_matches_exits_with_code_3() {
    let out = run(fluids().args(["sweep", "/nonexistent/*.toml"]));
    assert_eq!(out.status.code(), Some(3));
}
