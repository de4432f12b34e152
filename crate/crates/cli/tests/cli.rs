use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn stablelp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablelp"))
        .args(args)
        .current_dir(dir)
        .env_remove("STABLELP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn without_runtimes(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"runtime_s\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn cauchy_density_csv() {
    let dir = tempdir().unwrap();
    let out = stablelp(&["density", "--alpha", "1", "--s", "1", "--output-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/density.csv")).unwrap();
    let at_zero = csv
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap())
        .find(|(x, _)| x.parse::<f64>().unwrap() == 0.0)
        .map(|(_, v)| v.parse::<f64>().unwrap())
        .unwrap();
    assert!((at_zero - 1.0 / PI).abs() < 1e-6, "{at_zero}");
    let json = report(&dir.path().join("out/density.json"));
    assert_eq!(json["checks"][0]["status"], "pass");
    assert_eq!(json["metadata"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn json_keys_are_sorted() {
    let dir = tempdir().unwrap();
    stablelp(&["density", "--output-dir", "o"], dir.path());
    let text = fs::read_to_string(dir.path().join("o/density.json")).unwrap();
    let keys = ["\"checks\"", "\"name\"", "\"notes\"", "\"runtime_s\"", "\"status\"", "\"metadata\""];
    let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn empty_fixture_list_is_a_config_error() {
    let dir = tempdir().unwrap();
    let out = stablelp(&["lp", "--fixtures", "", "--output-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fixtures"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "alpha = 1.2\n\nlamda = 1.5\n").unwrap();
    let out = stablelp(&["lp", "--config", "run.cfg", "--output-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run.cfg:3") && err.contains("lamda"), "{err}");
    assert!(!dir.path().join("out").exists());

    let out = stablelp(&["density", "--set", "quick=true"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "alpha = 1.2\ns = 2\noutput_dir = a\n").unwrap();
    stablelp(&["density", "--config", "run.cfg"], dir.path());
    stablelp(&["density", "--config", "run.cfg", "--alpha", "1.8", "--output-dir", "b"], dir.path());
    let a = fs::read_to_string(dir.path().join("a/density.config")).unwrap();
    let b = fs::read_to_string(dir.path().join("b/density.config")).unwrap();
    assert!(a.contains("alpha = 1.2") && a.contains("s = 2"));
    assert!(b.contains("alpha = 1.8") && b.contains("s = 2"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stablelp"))
        .args(["extend", "--fixtures", "gauss", "--times", "1"])
        .current_dir(dir.path())
        .env("STABLELP_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from-env/extend.json").exists());
    assert!(dir.path().join("from-env/extend_gauss_t1.csv").exists());
}

#[test]
fn violated_kernel_exits_one() {
    let dir = tempdir().unwrap();
    let args = ["multiplier", "--kernels", "abs-inv", "--half-extent", "8", "--dx", "0.0625", "--output-dir", "m"];
    let out = stablelp(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let json = report(&dir.path().join("m/multiplier.json"));
    assert_eq!(json["checks"][0]["value"]["verdict"], "violated");
    assert_eq!(json["checks"][0]["status"], "fail");
}

#[test]
fn failure_flushes_partial_report() {
    let dir = tempdir().unwrap();
    let args = ["multiplier", "--kernels", "pv-inv", "--kernel-file", "missing.csv", "--output-dir", "m"];
    let out = stablelp(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let json = report(&dir.path().join("m/multiplier.json"));
    let checks = json["checks"].as_array().unwrap();
    assert_eq!(checks.last().unwrap()["name"], "error");
    assert!(checks.last().unwrap()["notes"][0].as_str().unwrap().contains("missing.csv"));
}

#[test]
fn identical_config_reproduces_json() {
    let dir = tempdir().unwrap();
    let run = |out: &str| {
        let args = ["mc", "--n-paths", "2000", "--checks", "exit_law,green", "--seed", "7", "--output-dir", out];
        assert_eq!(stablelp(&args, dir.path()).status.code(), Some(0));
        fs::read_to_string(dir.path().join(out).join("mc.json")).unwrap()
    };
    let (a, b) = (run("r1"), run("r2"));
    assert_eq!(without_runtimes(&a), without_runtimes(&b));
    let c =
        stablelp(&["mc", "--n-paths", "2000", "--checks", "green", "--seed", "8", "--output-dir", "r3"], dir.path());
    assert_eq!(c.status.code(), Some(0));
    let hash = |v: &Value| v["metadata"]["config_hash"].as_str().unwrap().to_string();
    assert_ne!(hash(&report(&dir.path().join("r1/mc.json"))), hash(&report(&dir.path().join("r3/mc.json"))));
}

#[test]
fn quick_suite_passes() {
    let dir = tempdir().unwrap();
    let out = stablelp(&["suite", "--alpha", "1.5", "--quick", "--output-dir", "s"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let json = report(&dir.path().join("s/suite.json"));
    let checks = json["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 9);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
}
