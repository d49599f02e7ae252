//! End-to-end tests of the `mhd` binary: each subcommand is exercised
//! through a real process, checking outputs, exit codes, and the
//! machine-readable error contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mhd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mhd"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn small_run_config(extra: &str) -> String {
    format!(
        r#"
dim = 2
n_tangential = 16
n_normal = 17
epsilon = 1e-2
zeta = 0.5
dt = 2e-3
t_end = 0.1
variant = "viscous"
ic_name = "random-smooth"
{extra}
"#
    )
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Parse the single JSON error object the binary prints on failure.
fn error_payload(out: &Output) -> serde_json::Value {
    let text = stderr_of(out);
    let line = text
        .lines()
        .find(|l| l.starts_with('{'))
        .unwrap_or_else(|| panic!("no JSON error line in stderr: {text}"));
    serde_json::from_str(line).unwrap()
}

#[test]
fn run_writes_record_series_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        &small_run_config("checkpoint_times = [0.05, 0.1]"),
    );
    let out_dir = dir.path().join("out");
    let out = mhd()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("run complete"));

    let record_text = std::fs::read_to_string(out_dir.join("record.json")).unwrap();
    let record: serde_json::Value = serde_json::from_str(&record_text).unwrap();
    assert_eq!(record["config"]["n_tangential"], 16);
    let checkpoints = record["checkpoints"].as_array().unwrap();
    assert_eq!(checkpoints.len(), 2);
    for c in checkpoints {
        let name = c["path"].as_str().unwrap();
        assert!(out_dir.join(name).is_file(), "missing checkpoint {name}");
    }

    let series = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert!(series.starts_with("t,energy,"));
    assert_eq!(series.lines().count(), 1 + 51); // header + 50 steps + initial
}

#[test]
fn audit_reads_a_stored_record_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &small_run_config(""));
    let out_dir = dir.path().join("out");
    let status = mhd()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let audit_csv = dir.path().join("audit.csv");
    let out = mhd()
        .arg("audit")
        .arg(out_dir.join("record.json"))
        .arg("--out")
        .arg(&audit_csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("max_residual="), "stdout: {text}");
    let csv = std::fs::read_to_string(&audit_csv).unwrap();
    assert!(csv.starts_with("t,relative_residual\n"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn profile_pairs_checkpoints_from_two_variants() {
    let dir = tempfile::tempdir().unwrap();
    let viscous = write_config(
        dir.path(),
        "viscous.toml",
        &small_run_config("checkpoint_times = [0.1]"),
    );
    let ideal_body = small_run_config("checkpoint_times = [0.1]")
        .replace("variant = \"viscous\"", "variant = \"ideal\"")
        .replace("epsilon = 1e-2", "epsilon = 0.0");
    let ideal = write_config(dir.path(), "ideal.toml", &ideal_body);

    let vdir = dir.path().join("v");
    let idir = dir.path().join("i");
    for (cfg, out_dir) in [(&viscous, &vdir), (&ideal, &idir)] {
        let status = mhd()
            .arg("run")
            .arg(cfg)
            .arg("--out")
            .arg(out_dir)
            .status()
            .unwrap();
        assert!(status.success());
    }

    let profile_csv = dir.path().join("profile.csv");
    let out = mhd()
        .arg("profile")
        .arg(vdir.join("checkpoint_000050.snap"))
        .arg(idir.join("checkpoint_000050.snap"))
        .arg("--out")
        .arg(&profile_csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("amplitude="), "stdout: {text}");
    let csv = std::fs::read_to_string(&profile_csv).unwrap();
    assert!(csv.starts_with("epsilon,z,rms\n"));
    assert_eq!(csv.lines().count(), 1 + 17); // header + one row per z level
}

#[test]
fn norms_prints_a_json_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        &small_run_config("checkpoint_times = [0.1]"),
    );
    let out_dir = dir.path().join("out");
    let status = mhd()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let out = mhd()
        .arg("norms")
        .arg(out_dir.join("checkpoint_000050.snap"))
        .arg("--exponents")
        .arg("4,6")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    for field in ["v", "h"] {
        let table = value[field].as_object().unwrap();
        for key in ["l2", "h1", "linf", "w1p4", "w1p6"] {
            assert!(table[key].as_f64().unwrap() > 0.0, "{field}.{key}");
        }
    }
    assert!(value["regularity"]["total"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_writes_tables_and_rate_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", &small_run_config(""));
    let out_dir = dir.path().join("sweep");
    let out = mhd()
        .arg("sweep")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--epsilons")
        .arg("1e-2,3e-3,1e-3")
        .arg("--times")
        .arg("0.1")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("sweep complete"));

    let errors = std::fs::read_to_string(out_dir.join("sweep_errors.csv")).unwrap();
    assert!(errors.starts_with("epsilon,time,norm,v_error,h_error\n"));
    assert_eq!(errors.lines().count(), 1 + 3 * 4); // 3 ladder values x 4 norms

    let rates: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("rates.json")).unwrap())
            .unwrap();
    let rows = rates.as_array().unwrap();
    assert_eq!(rows.len(), 8); // 4 norms x 2 fields at one time
    for row in rows {
        assert!(row["fit"]["slope"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn config_errors_exit_2_with_category() {
    let dir = tempfile::tempdir().unwrap();
    // n_normal even: rejected by validation with a config category.
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &small_run_config("").replace("n_normal = 17", "n_normal = 16"),
    );
    let out = mhd().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let payload = error_payload(&out);
    assert_eq!(payload["category"], "config");
    assert!(payload["message"].as_str().unwrap().contains("n_normal"));
}

#[test]
fn malformed_toml_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "broken.toml", "dim = ");
    let out = mhd().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_payload(&out)["category"], "config");
}

#[test]
fn missing_file_exits_5_with_io_category() {
    let out = mhd().arg("audit").arg("/nonexistent/record.json").output().unwrap();
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(error_payload(&out)["category"], "io");
}

#[test]
fn unpaired_checkpoints_exit_3_with_usage_category() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        &small_run_config("checkpoint_times = [0.05, 0.1]"),
    );
    let out_dir = dir.path().join("out");
    let status = mhd()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());

    // Two checkpoints of the same run at different times are not a pair.
    let out = mhd()
        .arg("profile")
        .arg(out_dir.join("checkpoint_000025.snap"))
        .arg(out_dir.join("checkpoint_000050.snap"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_payload(&out)["category"], "usage");
}

#[test]
fn unstable_step_exits_4_with_numerical_category() {
    let dir = tempfile::tempdir().unwrap();
    // dt far above the diffusive stability bound for this grid.
    let cfg = write_config(
        dir.path(),
        "stiff.toml",
        &small_run_config("")
            .replace("dt = 2e-3", "dt = 5e-2")
            .replace("t_end = 0.1", "t_end = 0.5"),
    );
    let out = mhd().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_payload(&out)["category"], "numerical");
}
