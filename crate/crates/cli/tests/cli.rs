use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lyapspec::maps::MapModel;
use lyapspec::pressure::pressure_matrix_oracle;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lyapspec")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn pressure_csv_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "p.csv");
    assert_eq!(code(&["pressure", "--preset", "gc24", "--out", &out]), 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,P_lower,P_upper,P_extrapolated,err,depth");
    let g = MapModel::gc24();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 81);
    for r in &rows {
        let exact = pressure_matrix_oracle(&g, &g.language(), r[0]).unwrap();
        assert!((r[3] - exact).abs() < 1e-6, "d = {}", r[0]);
        assert!(r[1] <= exact && exact <= r[2]);
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{out}.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "pressure");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sched = path(dir.path(), "s.toml");
    fs::write(&sched, "seed = 5\nrepeat = 2\n[[stage]]\nq = 0.0\n[[stage]]\nq = 1.0\n").unwrap();
    let mut seen = Vec::new();
    for k in 0..2 {
        let d = dir.path().join(format!("run{k}"));
        let p = path(&d, "p.csv");
        let s = path(&d, "s.csv");
        let w = path(&d, "w.csv");
        assert_eq!(code(&["pressure", "--preset", "fibonacci", "--d-steps", "9", "--out", &p]), 0);
        assert_eq!(code(&["spectrum", "--preset", "gc24", "--alpha-steps", "9", "--out", &s]), 0);
        assert_eq!(code(&["wsample", "--preset", "gc24", "--schedule-config", &sched, "--seeds", "2", "--out", &w]), 0);
        let files: Vec<Vec<u8>> = [
            p.clone(),
            format!("{p}.manifest.json"),
            s.clone(),
            format!("{s}.side.toml"),
            w.clone(),
            format!("{w}.summary.csv"),
        ]
        .iter()
        .map(|f| fs::read(f).unwrap())
        .collect();
        seen.push(files);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.csv");
    let b = path(dir.path(), "b.csv");
    let one = Command::new(env!("CARGO_BIN_EXE_lyapspec"))
        .env("LYAPSPEC_THREADS", "1")
        .args(["spectrum", "--preset", "eq-exponent-triple", "--alpha-steps", "7", "--out", &a])
        .output()
        .unwrap();
    let three = Command::new(env!("CARGO_BIN_EXE_lyapspec"))
        .env("LYAPSPEC_THREADS", "3")
        .args(["spectrum", "--preset", "eq-exponent-triple", "--alpha-steps", "7", "--out", &b])
        .output()
        .unwrap();
    assert!(one.status.success() && three.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "x.csv");
    let cfg = path(dir.path(), "m.toml");

    assert_eq!(code(&["pressure", "--preset", "nope", "--out", &out]), 2);
    assert_eq!(code(&["pressure", "--out", &out]), 2);
    assert_eq!(code(&["no-such-command"]), 2);

    fs::write(&cfg, "family = \"linear-sft\"\nslopes = [2.0, 2.0]\nmatrix = [[1, 1], [0, 0]]\nbranch_intervals = [[0.0, 0.5], [0.5, 1.0]]\n").unwrap();
    assert_eq!(code(&["pressure", "--map-config", &cfg, "--out", &out]), 2);

    fs::write(&cfg, "family = \"preset\"\npreset = \"gc24\"\n[numerics]\ndepth = 40\n").unwrap();
    assert_eq!(code(&["pressure", "--map-config", &cfg, "--out", &out]), 3);

    assert_eq!(code(&["spectrum", "--preset", "doubling", "--out", &out]), 4);
    assert_eq!(code(&["figure-data", "--preset", "doubling", "--out-dir", &path(dir.path(), "f")]), 4);

    let sched = path(dir.path(), "s.toml");
    fs::write(&sched, "[[stage]]\nq = 0.0\n").unwrap();
    assert_eq!(code(&["wsample", "--preset", "gc24", "--schedule-config", &sched, "--out", &out]), 2);
    assert_eq!(code(&["selftest", "--suite", "bogus"]), 2);
}

#[test]
fn measure_and_entropy_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let m = path(dir.path(), "m.csv");
    assert_eq!(code(&["measure", "--preset", "gc24", "--q", "1", "--depth", "4", "--out", &m]), 0);
    let text = fs::read_to_string(&m).unwrap();
    assert_eq!(text.lines().count(), 1 + 16);
    let total: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);

    let e = path(dir.path(), "e.csv");
    let args = ["entropy", "--preset", "gc24", "--epsilon", "0.1", "--depth-min", "4", "--depth-max", "8", "--out", &e];
    assert_eq!(code(&args), 0);
    let text = fs::read_to_string(&e).unwrap();
    assert_eq!(text.lines().next().unwrap(), "epsilon,n,count,bound");
    assert_eq!(text.lines().count(), 1 + 5);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
}

#[test]
fn selftest_single_suite() {
    let o = run(&["selftest", "--suite", "maps"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS [maps]")));
}
