use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_kdv5");

fn config(study: &str, initial: &str, flow: &str, integrator: &str, extra: &str) -> String {
    format!(
        r#"schema_version = 1
study = "{study}"

[grid]
L = 30.0
N = 64

[initial_data]
{initial}

[flow]
{flow}

[integrator]
{integrator}

{extra}
"#
    )
}

const GAUSSIAN: &str = "kind = \"gaussian\"\namplitude = 0.05\nwidth = 1.0";
const FIFTH: &str = "kind = \"fifth\"";
const SHORT: &str = "dt = 1e-3\nt_end = 0.01";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn kdv5(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match out_dir {
        Some(d) => cmd.env("KDV5_OUTPUT_DIR", d),
        None => cmd.env_remove("KDV5_OUTPUT_DIR"),
    };
    cmd.output().unwrap()
}

fn run_config(text: &str) -> (TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", text);
    let out = kdv5(&["run", cfg.to_str().unwrap()], Some(&dir.path().join("out")));
    (dir, out)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn list_studies_names_all() {
    let out = kdv5(&["list-studies"], None);
    assert!(out.status.success());
    let text = stdout(&out);
    for s in [
        "evolve",
        "conserve",
        "microscopic",
        "ls",
        "kappa-convergence",
        "identities",
        "diffeo-roundtrip",
    ] {
        assert!(text.lines().any(|l| l.starts_with(s)), "{s} missing from {text}");
    }
}

#[test]
fn zero_datum_conserve_reports_zeros() {
    let (dir, out) = run_config(&config("conserve", "kind = \"zero\"", FIFTH, SHORT, ""));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("PASS conservation"));
    let csv = fs::read_to_string(dir.path().join("out/conserved.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,quantity,kappa,value"));
    for line in lines {
        let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(value, 0.0, "{line}");
    }
    assert!(dir.path().join("out/snapshots.jsonl").exists());
}

#[test]
fn identities_on_random_seed_pass() {
    let init = "kind = \"random\"\nseed = 7\nhm1_norm = 0.3";
    let (dir, out) = run_config(&config(
        "identities",
        init,
        FIFTH,
        SHORT,
        "[diagnostics]\nkappa_list = [1.0, 3.0, 10.0]",
    ));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{text}");
    let csv = fs::read_to_string(dir.path().join("out/identities.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(csv.lines().next(), Some("kappa,residual1,residual2"));
}

#[test]
fn odd_grid_is_a_field_level_validation_error() {
    let text = config("conserve", GAUSSIAN, FIFTH, SHORT, "").replace("N = 64", "N = 63");
    let (dir, out) = run_config(&text);
    assert_eq!(out.status.code(), Some(1));
    let rec = error_record(&out);
    assert_eq!(rec["kind"], "validation");
    assert_eq!(rec["field"], "grid.N");
    assert!(rec["message"].as_str().unwrap().contains("even"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let text = config(
        "evolve",
        GAUSSIAN,
        FIFTH,
        SHORT,
        "[output]\nformats = [\"csv\"]\ncolour = \"red\"",
    );
    let (_dir, out) = run_config(&text);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_record(&out)["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn divergent_series_is_a_numerical_abort() {
    let init = "kind = \"random\"\nseed = 1\nhm1_norm = 50.0";
    let (_dir, out) = run_config(&config(
        "diffeo-roundtrip",
        init,
        FIFTH,
        SHORT,
        "[diagnostics]\nkappa_list = [1.0]",
    ));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["kind"], "numerical");
}

#[test]
fn outputs_are_deterministic() {
    let init = "kind = \"random\"\nseed = 11\nhm1_norm = 0.05\nmax_mode = 8";
    let text = config("conserve", init, "kind = \"h_kappa\"\nkappa = 4.0", SHORT, "");
    let (a, oa) = run_config(&text);
    let (b, ob) = run_config(&text);
    assert!(oa.status.success() && ob.status.success());
    for f in ["conserved.csv", "drift.csv", "snapshots.jsonl"] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn output_directory_from_config_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let text = config(
        "evolve",
        GAUSSIAN,
        FIFTH,
        SHORT,
        "[output]\ndirectory = \"from_config\"\nformats = [\"jsonl\"]",
    );
    let cfg = write(dir.path(), "exp.toml", &text);
    let env_dir = dir.path().join("from_env");
    let out = kdv5(&["run", cfg.to_str().unwrap()], Some(&env_dir));
    assert!(out.status.success());
    assert!(env_dir.join("snapshots.jsonl").exists());
    assert!(!env_dir.join("conserved.csv").exists());

    let cwd = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap()])
        .env_remove("KDV5_OUTPUT_DIR")
        .current_dir(cwd.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(cwd.path().join("from_config/snapshots.jsonl").exists());
}

#[test]
fn validate_does_not_write() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", &config("evolve", GAUSSIAN, FIFTH, SHORT, ""));
    let out_dir = dir.path().join("out");
    let out = kdv5(&["validate", cfg.to_str().unwrap()], Some(&out_dir));
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("OK "));
    assert!(!out_dir.exists());
}

#[test]
fn snapshot_file_round_trips_as_initial_data() {
    let init = "kind = \"random\"\nseed = 3\nhm1_norm = 0.05";
    let (dir, out) = run_config(&config("evolve", init, FIFTH, SHORT, ""));
    assert!(out.status.success());
    let snaps = dir.path().join("out/snapshots.jsonl");
    let init = format!("kind = \"file\"\npath = \"{}\"", snaps.display());
    let (_d2, out) = run_config(&config("identities", &init, FIFTH, SHORT, ""));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ls_and_kappa_convergence_tables() {
    let integ = "dt = 1e-3\nt_start = -0.02\nt_end = 0.02";
    let diag = "[diagnostics]\nkappa_list = [2.0, 4.0]\ncenter_spacing = 5.0\nwindow = [-0.02, 0.02]";
    let (dir, out) = run_config(&config("ls", GAUSSIAN, FIFTH, integ, diag));
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let csv = fs::read_to_string(dir.path().join("out/ls.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("z,kappa,ls_value"));
    assert_eq!(csv.lines().count(), 1 + 2 * 6);

    let diag = "[diagnostics]\nkappa_list = [4.0, 8.0, 16.0]\nvarkappa = 1.0";
    let (dir, out) = run_config(&config("kappa-convergence", GAUSSIAN, FIFTH, SHORT, diag));
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(dir.path().join("out/kappa_convergence.csv").exists());
}

#[test]
fn ls_window_must_be_covered() {
    let (_dir, out) = run_config(&config("ls", GAUSSIAN, FIFTH, SHORT, ""));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["field"], "diagnostics.window");
}

#[test]
fn microscopic_refuses_kdv_and_runs_for_fifth() {
    let diag = "[diagnostics]\nwindow = [0.0, 0.01]";
    let (_dir, out) = run_config(&config("microscopic", GAUSSIAN, "kind = \"kdv\"", SHORT, diag));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["field"], "flow.kind");

    let init = "kind = \"random\"\nseed = 3\nhm1_norm = 0.05\nmax_mode = 8";
    let (dir, out) = run_config(&config("microscopic", init, FIFTH, SHORT, diag));
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let csv = fs::read_to_string(dir.path().join("out/microscopic.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = kdv5(&["validate", path.to_str().unwrap()], None);
            assert!(
                out.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            seen += 1;
        }
    }
    assert_eq!(seen, 7);
}

#[test]
fn integrating_study_requires_integrator() {
    let text = config("evolve", GAUSSIAN, FIFTH, SHORT, "").replace("[integrator]\ndt = 1e-3\nt_end = 0.01", "");
    let (_dir, out) = run_config(&text);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["field"], "integrator");
}
