use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-meter")).args(args).current_dir(cwd).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(bin(&["--mode", "table1"], d).status.code(), Some(0));
    assert_eq!(bin(&["--mode", "protocol"], d).status.code(), Some(2));
    assert_eq!(bin(&["--mode", "optics", "--preset", "phi1"], d).status.code(), Some(2));
    assert_eq!(bin(&["--mode", "protocol", "--amps", "0,0,0,0"], d).status.code(), Some(2));
    assert_eq!(bin(&["--mode", "weak-sweep", "--preset", "phi1", "--phi-grid", "0:4:2"], d).status.code(), Some(2));
    assert_eq!(bin(&["--config", "missing.toml"], d).status.code(), Some(2));
    let impossible = bin(&["--mode", "tomography", "--amps", "1,0,0,0", "--seed", "1"], d);
    assert_eq!(impossible.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&impossible.stderr).contains("impossible post-selection"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "mode = \"optics\"\npreset = \"phi1\"\nseed = 3\nshots = 1000\n")
        .unwrap();
    let out = bin(&["--config", "run.toml", "--amps", "1, 1, 1, -1", "--shots", "50"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["config"].get("preset").is_none());
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["results"]["optics"]["coincidences"]["shots"], 50);
}

#[test]
fn weak_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        bin(&["--mode", "weak-sweep", "--preset", "phi2", "--phi-grid", "0:pi:3", "--csv", "sweep.csv"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "phi,p_meter_1,predicted");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3.141592653589793,0.5"));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--mode", "tomography", "--preset", "phi2", "--seed", "9", "--shots", "2e4", "--resamples", "100"];
    let printed = bin(&args, dir.path()).stdout;
    let mut with_out = args.to_vec();
    with_out.extend(["--out", "report.json"]);
    let quiet = bin(&with_out, dir.path());
    assert!(quiet.stdout.is_empty());
    assert_eq!(std::fs::read(dir.path().join("report.json")).unwrap(), printed);
}

#[test]
fn seeds_change_stochastic_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| bin(&["--mode", "optics", "--preset", "phi4", "--seed", seed], dir.path()).stdout;
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    assert!(json(&bin(&["--mode", "table1"], dir.path())).get("timing_ms").is_none());
    assert!(json(&bin(&["--mode", "table1", "--timing"], dir.path()))["timing_ms"].is_number());
}

#[test]
fn shipped_configs_run() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let out = bin(&["--config", path.to_str().unwrap()], dir.path());
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn ideal_report_probabilities_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&bin(&["--mode", "optics", "--amps", "0.3,0.4i,-0.5,0.7", "--seed", "4"], dir.path()));
    let total: f64 =
        v["results"]["optics"]["outcomes"].as_array().unwrap().iter().map(|o| o["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}
