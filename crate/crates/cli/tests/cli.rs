mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use refdiff_cli::config::{ModelConfig, RunConfig, Theta0Config};
use refdiff_cli::csv::{parse_curve, write_curve};
use refdiff_cli::simulate;
use refdiff_core::curve::RockingCurve;

use common::{canonical, config, full_grid};

fn refdiff(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refdiff")).args(args).current_dir(dir).output().unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) {
    fs::write(dir.join(name), cfg.to_json()).unwrap();
}

fn small() -> RunConfig {
    canonical("sp4", 0.1, Theta0Config::List(vec![0.5, 1.0, 2.0]))
}

#[test]
fn zero_potential_writes_zero_cells() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "zero.json", &config(ModelConfig::Zero, -3.0, "conventional", 0.1, full_grid()));
    let out = refdiff(&["simulate", "--config", "zero.json", "--out", "zero.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("zero.csv")).unwrap();
    assert_eq!(text.lines().count(), 70);
    for line in text.lines().skip(1) {
        assert!(line.split(',').skip(2).all(|c| c == "0.00000000000000E+00"), "{line}");
    }
}

#[test]
fn simulate_output_round_trips() {
    let cfg = small();
    let curve = simulate(&cfg).unwrap();
    let text = write_curve(&curve);
    let back = parse_curve(&text).unwrap();
    assert_eq!(back.rods, curve.rods);
    for (a, b) in back.rows.iter().zip(&curve.rows) {
        assert_eq!(a.theta0, b.theta0);
        for (x, y) in a.eta.iter().zip(&b.eta) {
            assert!((x - y).abs() <= 1e-14 * y.abs(), "{x} vs {y}");
        }
    }
}

#[test]
fn compare_examples() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", &small());
    assert!(refdiff(&["simulate", "--config", "c.json", "--out", "a.csv"], dir.path()).status.success());
    let out = refdiff(&["compare", "a.csv", "a.csv"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.00000000000000E+00");

    let curve = parse_curve(&fs::read_to_string(dir.path().join("a.csv")).unwrap()).unwrap();
    let mut zero = curve.clone();
    zero.rows.iter_mut().for_each(|r| r.eta.iter_mut().for_each(|e| *e = 0.0));
    fs::write(dir.path().join("zero.csv"), write_curve(&zero)).unwrap();
    let out = refdiff(&["compare", "zero.csv", "a.csv"], dir.path());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1.00000000000000E+00");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    write_config(dir.path(), "c.json", &cfg);
    assert!(refdiff(&["simulate", "--config", "c.json", "--out", "a.csv"], dir.path()).status.success());

    let mut bad = cfg.clone();
    bad.method = "euler".into();
    write_config(dir.path(), "bad.json", &bad);
    assert_eq!(refdiff(&["simulate", "--config", "bad.json", "--out", "x.csv"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("broken.json"), "{").unwrap();
    assert_eq!(refdiff(&["simulate", "--config", "broken.json", "--out", "x.csv"], dir.path()).status.code(), Some(2));
    assert_eq!(refdiff(&["simulate", "--config", "missing.json", "--out", "x.csv"], dir.path()).status.code(), Some(5));

    let mut deep = config(ModelConfig::GaussianLayers { layers: common::layers(-50.0) }, -50.0, "sp6", 0.05, Theta0Config::List(vec![1.0]));
    deep.rhst_threshold = refdiff_cli::config::Threshold(f64::INFINITY);
    write_config(dir.path(), "deep.json", &deep);
    assert_eq!(refdiff(&["simulate", "--config", "deep.json", "--out", "x.csv"], dir.path()).status.code(), Some(3));

    let mut other = cfg.clone();
    other.angles.theta0 = Theta0Config::List(vec![0.5, 1.0]);
    write_config(dir.path(), "other.json", &other);
    assert!(refdiff(&["simulate", "--config", "other.json", "--out", "b.csv"], dir.path()).status.success());
    assert_eq!(refdiff(&["compare", "a.csv", "b.csv"], dir.path()).status.code(), Some(4));

    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    fs::write(dir.path().join("cut.csv"), &text[..text.len() - 7]).unwrap();
    assert_eq!(refdiff(&["compare", "cut.csv", "a.csv"], dir.path()).status.code(), Some(5));
    assert_eq!(refdiff(&["bench", "--config", "c.json", "--repeats", "2", "--out", "b.csv"], dir.path()).status.code(), Some(2));
    assert_eq!(refdiff(&["--threads", "0", "simulate", "--config", "c.json", "--out", "a.csv"], dir.path()).status.code(), Some(2));
}

#[test]
fn bench_rows_and_self_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.bench = Some(refdiff_cli::config::BenchConfig {
        reference: refdiff_cli::config::MethodStep { method: "sp6".into(), dz: 0.33 },
        baseline: Some(refdiff_cli::config::MethodStep { method: "conventional".into(), dz: 0.1 }),
    });
    write_config(dir.path(), "c.json", &cfg);
    let out = refdiff(
        &["--threads", "2", "bench", "--config", "c.json", "--dz", "0.33,0.1", "--methods", "sp6,conventional", "--repeats", "3", "--out", "b.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = refdiff_cli::bench::parse_bench(&fs::read_to_string(dir.path().join("b.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.ok() && r.repeats == 3 && r.wall_seconds.unwrap() > 0.0));
    assert_eq!(records[0].eacc, Some(0.0));
    let conventional_fine = records.iter().find(|r| r.method.name() == "conventional" && r.dz == 0.1).unwrap();
    assert_eq!(conventional_fine.eorig, Some(0.0));
}

#[test]
fn rows_follow_grid_order() {
    let mut cfg = small();
    cfg.angles.theta1 = vec![0.0, 15.0];
    let curve: RockingCurve = simulate(&cfg).unwrap();
    let angles: Vec<(f64, f64)> = curve.rows.iter().map(|r| (r.theta0, r.theta1)).collect();
    assert_eq!(angles, vec![(0.5, 0.0), (1.0, 0.0), (2.0, 0.0), (0.5, 15.0), (1.0, 15.0), (2.0, 15.0)]);
}
