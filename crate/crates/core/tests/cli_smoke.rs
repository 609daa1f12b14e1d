//! End-to-end CLI smoke test on a tiny configuration:
//! gen -> run -> report, plus the error/exit-code contract.

use std::path::Path;
use std::process::Command;

fn charm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_charm"))
}

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let cfg = r#"
[system]
n_tx = 8
n_rx = 4
n_subcarriers = 16

[scenario]
n_locations = 2
trials_per_location = 2
path_count_range = [2, 4]
master_seed = 7

[lmmse]
training_set_size = 16

[sweep]
axis = "t"
values = [2, 3]
methods = ["charm", "charm-trust", "charm-norefine", "omp3d", "lmmse-kron", "kron-omp"]
"#;
    let path = dir.join("tiny.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn gen_run_report_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let scenarios = dir.path().join("scenarios");
    let results = dir.path().join("r.csv");

    let out = charm()
        .args(["gen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&scenarios)
        .args(["--seed", "7"])
        .output()
        .unwrap();
    assert!(out.status.success(), "gen failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(scenarios.join("manifest.toml").exists());
    assert!(scenarios.join("loc_000.toml").exists());
    assert!(scenarios.join("loc_001.toml").exists());

    // rerun is byte-identical (determinism)
    let first = std::fs::read(scenarios.join("loc_000.toml")).unwrap();
    let out = charm()
        .args(["gen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&scenarios)
        .args(["--seed", "7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(scenarios.join("loc_000.toml")).unwrap());

    let out = charm()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--scenarios")
        .arg(&scenarios)
        .arg("--out")
        .arg(&results)
        .args(["--jobs", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "run failed: {}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&results).unwrap();
    // 2 T-values x 2 locations x 2 trials x 6 methods + header
    assert_eq!(body.lines().count(), 1 + 2 * 2 * 2 * 6, "records:\n{body}");

    let out = charm()
        .args(["report", "--in"])
        .arg(&results)
        .arg("--table")
        .arg("--figure")
        .arg("fig2")
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "report failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("speedup"), "table missing: {stdout}");
    let dat = std::fs::read_to_string(dir.path().join("fig2.dat")).unwrap();
    assert!(dat.starts_with("# charm-plot/1 x=T y=mean_nmse_db"), "{dat}");
    // 2 header comments + 2 sweep values
    assert_eq!(dat.lines().count(), 4, "{dat}");
    assert!(dir.path().join("plot_stub.py").exists());
}

#[test]
fn run_with_preset_and_method_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let results = dir.path().join("t1.csv");
    let out = charm()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--preset", "table1", "--methods", "charm,omp3d"])
        .arg("--out")
        .arg(&results)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&results).unwrap();
    assert_eq!(body.lines().count(), 1 + 2 * 2 * 2, "{body}");
    assert!(body.contains("charm,4,"));
}

#[test]
fn zero_locations_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = charm()
        .args(["gen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("s"))
        .args(["--locations", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_preset_exits_with_config_code() {
    let out = charm()
        .args(["run", "--preset", "fig9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig2") && err.contains("table1"), "{err}");
}

#[test]
fn method_typo_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = charm()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--methods", "charmx"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("valid methods"), "{err}");
}

#[test]
fn missing_results_file_is_io_error() {
    let out = charm()
        .args(["report", "--in", "/nonexistent/r.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn corrupted_results_file_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "method,T,snr_db,bias_std,location,trial,seed,nmse_db,runtime_ms,kappa,regularized,support_size\n\
         charm,4,20.0,zero,0,0,1,-12.0,10.0,,,3\n",
    )
    .unwrap();
    let out = charm().args(["report", "--in"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}
