//! Command behaviour, driven in-process through the same entry point as the
//! binary.

use std::fs;
use std::path::Path;

use clap::Parser;
use fopfdd::models::{model_freq_response, ModelParams};
use fopfdd::signal::logspace;
use serde_json::Value;

use crate::{run, Cli};

/// Exit code the binary would return for these arguments.
fn exit_code(args: &[&str]) -> (u8, String) {
    let argv = std::iter::once("fopfdd").chain(args.iter().copied());
    match Cli::try_parse_from(argv) {
        Err(e) => (e.exit_code() as u8, e.to_string()),
        Ok(cli) => match run(cli) {
            Ok(()) => (0, String::new()),
            Err(f) => (f.code(), f.to_string()),
        },
    }
}

fn ok(args: &[&str]) {
    let (code, msg) = exit_code(args);
    assert_eq!(code, 0, "{args:?}: {msg}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn impulse_half_order_has_unit_area_and_known_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["impulse", "--L", "1", "--alpha", "0.5", "--out", out]);
    let summary = read_json(&dir.path().join("impulse_summary.json"));
    assert!((summary["area"].as_f64().unwrap() - 1.0).abs() < 1e-3, "{summary}");
    assert!((summary["energy"].as_f64().unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-3);

    ok(&["impulse", "--L", "1", "--alpha", "0.5", "--t-max", "20", "--out", out]);
    let t = column(&dir.path().join("impulse.csv"), "t");
    let f = column(&dir.path().join("impulse.csv"), "f");
    let k = t.iter().position(|&x| (x - 1.0).abs() < 1e-9).unwrap();
    assert!((f[k] - 0.21970).abs() < 1e-5, "f(1) = {}", f[k]);
}

#[test]
fn impulse_csv_reads_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["impulse", "--L", "2", "--alpha", "0.7", "--out", dir.path().to_str().unwrap()]);
    let p = fopfdd::FddParams::new(2.0, 0.7).unwrap();
    let f = fopfdd::fdd::fdd_impulse_response(p, p.default_grid(), &Default::default()).unwrap();
    assert_eq!(column(&dir.path().join("impulse.csv"), "f"), f.values());
}

#[test]
fn impulse_rejects_out_of_range_order() {
    let dir = tempfile::tempdir().unwrap();
    let (code, msg) = exit_code(&["impulse", "--alpha", "1.2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(msg.contains("--alpha") && msg.contains("(0, 1)"), "{msg}");
}

#[test]
fn impulse_before_the_response_starts_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (code, msg) = exit_code(&[
        "impulse", "--alpha", "0.5", "--t-s", "1e-4", "--t-max", "1e-2", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{msg}");
}

#[test]
fn bad_grid_flag_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let (code, msg) = exit_code(&["impulse", "--alpha", "0.5", "--t-s=-1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(msg.contains("--t-s"), "{msg}");
}

#[test]
fn freqresp_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bode = |args: &[&str]| {
        let mut all = vec!["freqresp", "--omega-min", "1", "--omega-max", "10", "--points", "2", "--out", out];
        all.extend_from_slice(args);
        ok(&all);
        column(&dir.path().join("freqresp.csv"), "mag_db")[0]
    };
    assert!((bode(&["--ladder", "1"]) + 3.0103).abs() < 1e-4);
    let db = bode(&["--model", "fopfdd", "--K", "1", "--tau", "1", "--L", "1", "--alpha", "0.5"]);
    assert!((10f64.powf(db / 20.0) - 0.34866).abs() < 1e-5, "{db}");

    let (code, msg) = exit_code(&["freqresp", "--ladder", "2", "--omega-min", "5", "--omega-max", "5", "--out", out]);
    assert_eq!(code, 2);
    assert!(msg.contains("--omega-max"), "{msg}");
}

#[test]
fn freqresp_needs_exactly_one_system() {
    let (code, _) = exit_code(&["freqresp"]);
    assert_eq!(code, 2);
    let (code, _) = exit_code(&["freqresp", "--ladder", "2", "--model", "fopdt"]);
    assert_eq!(code, 2);
    let (code, msg) = exit_code(&["freqresp", "--model", "fopfdd", "--out", "unused"]);
    assert_eq!(code, 2);
    assert!(msg.contains("--alpha"), "{msg}");
}

#[test]
fn json_format_writes_columns() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "stepresp", "--ladder", "2", "--t-max", "5", "--format", "json", "--out", dir.path().to_str().unwrap(),
    ]);
    let v = read_json(&dir.path().join("step.json"));
    assert_eq!(v["t"].as_array().unwrap().len(), 2000);
    assert_eq!(v["y"].as_array().unwrap().len(), 2000);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "stepresp");
    assert_eq!(manifest["outputs"][0], "step.json");
}

#[test]
fn ladder_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["ladder", "--ladder", "2", "--out", dir.path().to_str().unwrap()]);
    let v = read_json(&dir.path().join("ladder.json"));
    let den: Vec<f64> = v["denominator"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(den, [1.0, 3.0, 1.0]);
    assert!((v["break_frequency"].as_f64().unwrap() - 0.374239).abs() < 1e-6);
}

#[test]
fn fit_rejects_unknown_family() {
    let (code, msg) = exit_code(&["fit", "--ladder", "3", "--family", "h7", "--out", "unused"]);
    assert_eq!(code, 2);
    assert!(msg.contains("--family"), "{msg}");
}

#[test]
fn fit_recovers_in_family_target_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = ModelParams::fopfdd(1.0, 2.0, 0.6, 0.7).unwrap();
    let fr = model_freq_response(&m, &logspace(0.02, 20.0, 120)).unwrap();
    let mut w = csv::Writer::from_path(dir.path().join("target.csv")).unwrap();
    w.write_record(["omega", "re", "im"]).unwrap();
    for (o, z) in fr.omegas().iter().zip(fr.values()) {
        w.write_record([o.to_string(), z.re.to_string(), z.im.to_string()]).unwrap();
    }
    w.flush().unwrap();
    let target = dir.path().join("target.csv");
    ok(&[
        "fit",
        "--target",
        target.to_str().unwrap(),
        "--family",
        "fopfdd",
        "--weights",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let sel = read_json(&dir.path().join("selected.json"));
    assert!(sel["point"]["e_mag"].as_f64().unwrap() < 1e-8, "{sel}");
    assert!(sel["point"]["e_phase"].as_f64().unwrap() < 1e-8, "{sel}");
}

#[test]
fn fit_six_stage_ladder() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["fit", "--ladder", "6", "--family", "h3", "--out", dir.path().to_str().unwrap()]);
    let alpha = read_json(&dir.path().join("selected.json"))["point"]["params"]["alpha"]
        .as_f64()
        .unwrap();
    assert!((0.68..=0.78).contains(&alpha), "alpha = {alpha}");
    let (header, rows) = read_csv(&dir.path().join("front.csv"));
    assert_eq!(&header[..3], ["q1", "e_mag", "e_phase"]);
    assert!(!rows.is_empty());
}

#[test]
fn tables_shape_and_empty_sizes() {
    let (code, _) = exit_code(&["tables", "--ns", "", "--out", "unused"]);
    assert_eq!(code, 2);

    let dir = tempfile::tempdir().unwrap();
    ok(&["tables", "--ns", "4,5,6,7,8", "--out", dir.path().to_str().unwrap()]);
    let (_, t1) = read_csv(&dir.path().join("table1.csv"));
    let (_, t2) = read_csv(&dir.path().join("table2.csv"));
    assert_eq!(t1.len(), 15);
    assert_eq!(t2.len(), 15);
    assert!(t1.iter().all(|r| r.last().unwrap() == "ok"));
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.ends_with('\n') && !manifest.contains('\r'));
    let csv = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(!csv.contains('\r'));
}
