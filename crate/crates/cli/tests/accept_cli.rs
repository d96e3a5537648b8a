//! End-to-end behaviour of the `bubble-forge` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bubble-forge"))
}

fn run(cmd: &str, dir: &Path, config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    bin()
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let main = text.split("\n\n").next().unwrap();
    let mut r = csv::Reader::from_reader(main.as_bytes());
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn malformed_line_exits_one() {
    let d = TempDir::new().unwrap();
    let o = run("constants", d.path(), "N=5\nthis line has no equals sign\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config line 2"), "{}", stderr(&o));
}

#[test]
fn bad_values_exit_one() {
    for cfg in ["sweep.k=\n", "sweep.k=8,4\n", "N=4\n", "bogus=1\n", "N=5\nN=6\n", "solver.sigma_hat=0.2\n"] {
        let d = TempDir::new().unwrap();
        let o = run("sums", d.path(), cfg);
        assert_eq!(o.status.code(), Some(1), "{cfg:?}: {}", stderr(&o));
    }
}

#[test]
fn unwritable_output_exits_one() {
    let d = TempDir::new().unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "N=5\n").unwrap();
    let o = bin().args(["constants", "--config"]).arg(&cfg).arg("--out").arg(blocker.join("sub")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not writable"));
}

#[test]
fn bad_thread_count_exits_one() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "N=5\n").unwrap();
    let o = bin().env("BUBBLE_FORGE_THREADS", "zero").args(["constants", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn constants_n6_matches_zeta_value() {
    let d = TempDir::new().unwrap();
    let o = run("constants", d.path(), "N=6\nconstants.normalization=paper\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&d.path().join("out/constants.csv"));
    let b1: f64 = rows.iter().find(|r| r[0] == "B1").unwrap()[1].parse().unwrap();
    assert!((b1 - 1.0 / 720.0).abs() < 1e-12);
    assert!(rows.iter().any(|r| r[3] == "bubble"));
    let j: Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/constants.json")).unwrap()).unwrap();
    assert!(j["constants"]["Lambda0"]["value"].as_f64().unwrap() > 0.0);
    assert!(j["constants"]["Bprime"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(j["alternate"]["normalization"], "bubble");
}

#[test]
fn solve_rows_lie_in_box() {
    let d = TempDir::new().unwrap();
    let o = run("solve", d.path(), "N=5\nsweep.k=16,32,64,128,256\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&d.path().join("out/solve.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(r[6], "true");
        assert_eq!(r[7], "true");
        assert_eq!(r[12], "ok");
    }
}

#[test]
fn ring_ratio_tends_to_one() {
    let d = TempDir::new().unwrap();
    let o = run("sums", d.path(), "N=6\nsweep.k=32,64,128,256,512\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dev: Vec<f64> = csv_rows(&d.path().join("out/sums.csv"))
        .iter()
        .filter(|r| r[0] == "ring")
        .map(|r| (r[6].parse::<f64>().unwrap() - 1.0).abs())
        .collect();
    assert_eq!(dev.len(), 5);
    assert!(dev.windows(2).all(|w| w[1] < w[0]));
    assert!(dev[4] < 1e-4);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cfg = "N=5\nsweep.k=8,16,32,64,128\nquad.samples=20000\n";
    for cmd in ["sums", "solve", "errnorm", "energy"] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert_eq!(run(cmd, a.path(), cfg).status.code(), Some(0), "{cmd}");
        let o = bin()
            .env("BUBBLE_FORGE_THREADS", "1")
            .args([cmd, "--config"])
            .arg(a.path().join("run.cfg"))
            .arg("--out")
            .arg(b.path().join("out"))
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        for ext in ["csv", "json"] {
            let f = format!("out/{cmd}.{ext}");
            assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn list_flags() {
    let o = bin().args(["validate", "--list"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().count(), 11);
    assert!(s.starts_with("C1 "));
    let o = bin().args(["sums", "--list"]).output().unwrap();
    assert!(String::from_utf8(o.stdout).unwrap().lines().any(|l| l == "sweep.k"));
}

#[test]
fn injected_fault_is_reported() {
    let d = TempDir::new().unwrap();
    let o = run("validate", d.path(), "N=5\nvalidate.criteria=C1,C4\nvalidate.fault=B0:1.1\n");
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(out.lines().any(|l| l.starts_with("C1 FAIL")), "{out}");
    assert!(out.lines().any(|l| l.starts_with("C4 FAIL")), "{out}");
    assert!(stderr(&o).contains("failed: C1, C4"));
    let j: Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/validate.json")).unwrap()).unwrap();
    assert_eq!(j["all_passed"], false);
}

#[test]
fn clean_run_passes_selected_criteria() {
    let d = TempDir::new().unwrap();
    let o = run("validate", d.path(), "N=5\nvalidate.criteria=C1,C4\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
