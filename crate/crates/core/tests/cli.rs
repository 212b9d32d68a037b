use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "crystal_length = 1 cm\nwp_mm = 0.65\ng = 1.5\ngrid_n = 32\nbin = 2\npower_jitter = 0\n\
                      model = diagonal\ntemporal_modes = 4\nframes = 3\nccd_cols = 64\nccd_rows = 64\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdc-speckle")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, CONFIG).unwrap();
    let frames = dir.path().join("frames");

    let out = run(&["simulate", "--config", path(&cfg), "--out", path(&frames), "--frames", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let echo = String::from_utf8(out.stdout).unwrap();
    assert!(echo.contains("config_hash = ") && echo.contains("temporal_modes = 4"));
    assert!(frames.join("frame_00001.pgm").exists() && frames.join("frame_00001.meta").exists());
    assert!(!frames.join("frame_00002.pgm").exists());

    let csv = dir.path().join("metrics.csv");
    let out = run(&["analyze", "--frames", path(&frames), "--out", path(&csv), "--max-lag", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("frames = 2") && summary.contains("sigma2_norm = "));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn fit_reads_points_and_writes_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("points.csv");
    let mut text = String::from("x,y\n");
    for x in [0.5f64, 1.0, 1.5, 2.0, 2.5] {
        text += &format!("{x},{}\n", 3.0 * (1.2 * x).sinh().powi(2));
    }
    std::fs::write(&input, text).unwrap();
    let output = dir.path().join("fit.csv");
    let out = run(&["fit", "--model", "sinh2", "--in", path(&input), "--out", path(&output)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = std::fs::read_to_string(&output).unwrap();
    assert!(table.starts_with("model,param,value,stderr,residual_rms"), "{table}");
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn sweep_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, format!("{CONFIG}sweep = power\nsweep_power = 0.2, 0.4, 0.6 MW\n")).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", "--config", path(&cfg), "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["sweep.csv", "fit.csv", "config.resolved"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
}

#[test]
fn failures_report_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "crystal_length = 1 cm\nwp_mm = 0.65\ng = 1\nfoo = 1\n").unwrap();
    let out = run(&["simulate", "--config", path(&bad), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[config]: config line 4"), "{}", stderr(&out));

    let good = dir.path().join("good.cfg");
    std::fs::write(&good, CONFIG).unwrap();
    let frames = dir.path().join("frames");
    assert!(run(&["simulate", "--config", path(&good), "--out", path(&frames), "--frames", "1"]).status.success());
    std::fs::write(frames.join("frame_00000.pgm"), b"P5\n1 1\n65535\n\0\0").unwrap();
    let csv = dir.path().join("m.csv");
    let out = run(&["analyze", "--frames", path(&frames), "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(7));
    assert!(stderr(&out).starts_with("error[integrity]"), "{}", stderr(&out));

    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "x,y\n1,1\n").unwrap();
    let out = run(&["fit", "--model", "powerlaw", "--in", path(&pts), "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr(&out).starts_with("error[fit]"), "{}", stderr(&out));
}
