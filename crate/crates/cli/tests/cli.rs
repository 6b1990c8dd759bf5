use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paretomarch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_shows_builtin_scenarios() {
    let o = run(&["list"]);
    assert!(o.status.success());
    let names = stdout(&o);
    for n in ["convergence", "weather", "two-observers", "rcsp-check"] {
        assert!(names.lines().any(|l| l == n), "{n} missing from {names}");
    }
}

#[test]
fn run_writes_the_artifact_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rcsp");
    let o = run(&["run", "rcsp-check", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["config.toml", "u_0.csv", "u_1.pgm", "v_0_1.csv", "mfl.csv", "w_slices.csv", "front.csv", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f} not written");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["validation"].is_object());
    assert!(manifest["domain_reduction"]["points"].as_u64().unwrap() > 0);
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f == "w_slices.csv"));

    let u = fs::read_to_string(out.join("u_0.csv")).unwrap();
    assert_eq!(u.lines().next(), Some("x,y,value"));
    assert_eq!(u.lines().count(), 1 + 21 * 21);
    let pgm = fs::read(out.join("u_1.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n21 21\n255\n"));
    let front = fs::read_to_string(out.join("front.csv")).unwrap();
    assert_eq!(front.lines().next(), Some("J_0,b_1,tight,source"));
    assert!(front.lines().count() > 2, "{front}");
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let o = run(&["--workers", workers, "run", "convergence", "--h", "1/40", "--db", "1/20", "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(out);
    }
    for f in ["u_0.csv", "v_0_1.csv", "mfl.csv", "w_slices.csv", "front.csv", "trace_0.csv"] {
        let a = fs::read(outs[0].join(f)).unwrap();
        let b = fs::read(outs[1].join(f)).unwrap();
        assert!(a == b, "{f} differs between worker counts");
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
name = "small"

[grid]
n = 11

[budgets]
bound = [2.0]
count = [11]

[speed]
kind = "constant"
value = 1.0

[[cost]]
kind = "constant"
value = 1.0

[[cost]]
kind = "path-length"

[[terminal]]
targets = [{ at = [1.0, 1.0], value = 0.0 }]

[[terminal]]
targets = [{ at = [1.0, 1.0], value = 0.0 }]
"#;

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &SMALL.replace("bound = [2.0]", "bound = [-1.0]"));
    let o = run(&["run", &bad, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("budgets.bound[0]"), "{}", stderr(&o));

    let typo = write(dir.path(), "typo.toml", &SMALL.replace("[grid]\nn = 11", "[grid]\nsize = 11"));
    let o = run(&["run", &typo]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["run", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weather"), "error should list built-ins: {}", stderr(&o));
}

#[test]
fn trace_prints_a_feasible_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = run(&["trace", &cfg, "--start", "0.1,0.1", "--budget", "1.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,b_1,J_0,J_1"));
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((last[0] - 1.0).abs() < 1e-6 && (last[1] - 1.0).abs() < 1e-6, "{last:?}");
    assert!(last[4] <= 1.5 + 0.2 + 1e-9, "path length {} over budget", last[4]);

    // Too little budget to reach the target at all.
    let o = run(&["trace", &cfg, "--start", "0.1,0.1", "--budget", "0.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    // Start outside the unit square.
    let o = run(&["trace", &cfg, "--start", "1.5,0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn visibility_writes_mask() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vis");
    let o = run(&["visibility", "--observer", "0.15,0", "--n", "51", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pgm = fs::read(out.join("hidden.pgm")).unwrap();
    let header = b"P5\n51 51\n255\n";
    assert!(pgm.starts_with(header));
    let px = &pgm[header.len()..];
    assert_eq!(px.len(), 51 * 51);
    assert!(px.iter().all(|&p| p == 0 || p == 255));
    // Top-right corner, first row of the image, is hidden in the default layout.
    assert_eq!(px[50], 255);
    assert!(out.join("hidden.csv").is_file());
    assert!(out.join("detour.csv").is_file());
}

#[test]
fn compare_fronts_and_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fronts");
    let o = run(&["compare-fronts", "time-vs-length", "--h", "1/40", "--db", "1/20", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["envelope_gap"]["max_gap"].is_number());
    let fronts = fs::read_to_string(out.join("fronts.csv")).unwrap();
    assert!(fronts.contains(",augmented"));
    assert!(fronts.contains(",weighted-sum"));

    let csv = dir.path().join("table.csv");
    let o = run(&["convergence-table", "--h", "1/20,1/40", "--db", "1/10", "-o", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("1/40") || stdout(&o).contains("0.025"), "{}", stdout(&o));
    let table = fs::read_to_string(csv).unwrap();
    assert_eq!(table.lines().count(), 3, "{table}");
}
