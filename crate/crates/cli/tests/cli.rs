use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use qdsim_cli::{main_with, Cli};
use serde_json::Value;

const SINGLE_DOT: &str = r#"{"n_dots": 1, "zeeman_hz": [18.33e9], "drive_amplitude_hz": 5e6, "modes": {"off": []}}"#;

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["qdsim", "run"];
    argv.extend_from_slice(args);
    let out = out.to_str().unwrap();
    argv.extend_from_slice(&["--out", out]);
    main_with(Cli::parse_from(argv))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn single_dot_rabi_flips_at_100_ns() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("one.json");
    fs::write(&profile, SINGLE_DOT).unwrap();
    let out = dir.path().join("rabi");
    assert_eq!(run(&["rabi", "--profile", profile.to_str().unwrap()], &out), 0);

    let mut reader = csv::Reader::from_path(out.join("rabi.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["drive_dot", "drive_frequency_hz", "t_ns", "p_up_1"]);
    let at_100 = reader
        .records()
        .map(|r| r.unwrap())
        .find(|r| (r[2].parse::<f64>().unwrap() - 100.0).abs() < 1e-6)
        .expect("sample at 100 ns");
    assert!(at_100[3].parse::<f64>().unwrap() >= 0.9999);

    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["tool"], "qdsim");
    assert_eq!(summary["config"]["experiment"], "rabi");
    assert_eq!(summary["config"]["frame"], "rwa");
    assert!((summary["results"]["dots"][0]["pi_time_ns"].as_f64().unwrap() - 100.0).abs() < 0.05);
}

#[test]
fn teleport_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["teleport", "--theta", "1.5707963"], dir.path()), 0);
    let s = read_json(&dir.path().join("summary.json"));
    let total = s["results"]["total_duration_ns"].as_f64().unwrap();
    assert!((total - 729.6).abs() < 4.0, "{total}");
    assert!(s["results"]["min_branch_fidelity"].as_f64().unwrap() >= 0.999);
    let t = read_json(&dir.path().join("teleport.json"));
    let branches = t["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 4);
    let p: f64 = branches.iter().map(|b| b["probability"].as_f64().unwrap()).sum();
    assert!((p - 1.0).abs() < 1e-9);
    // Complex entries are [re, im] pairs.
    assert_eq!(branches[0]["pre_correction"]["matrix"][0][1].as_array().unwrap().len(), 2);
    assert_eq!(t["corrections"]["uu"], "XZ");
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["bell"],
        &["swap", "--seed", "11", "--shots", "500"],
        &["--experiment", "noise-sweep", "--scope", "teleport", "--delta-j-grid", "0.3,0"],
    ];
    for (k, args) in cases.iter().enumerate() {
        let a = dir.path().join(format!("{k}a"));
        let b = dir.path().join(format!("{k}b"));
        assert_eq!(run(args, &a), 0);
        assert_eq!(run(args, &b), 0);
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.len() >= 2);
        for name in names {
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
        }
    }
}

#[test]
fn noise_sweep_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["noise-sweep", "--scope", "swap", "--delta-j-grid", "0,0.1"], dir.path()), 0);
    let mut reader = csv::Reader::from_path(dir.path().join("noise_sweep.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..6], ["scope", "sign", "delta_j", "avg_fidelity", "avg_concurrence", "branches"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!((&rows[0][1], &rows[0][2]), ("+", "0"));
    assert_eq!(&rows[0][5], "dd;du;ud;uu");
    assert!(rows[0][3].parse::<f64>().unwrap() >= 0.999);
}

#[test]
fn failures_write_an_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("one.json");
    fs::write(&profile, SINGLE_DOT).unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["bell", "--profile", profile.to_str().unwrap()], "invalid_argument"),
        (&["noise-sweep", "--delta-j-grid", "0.1,x"], "config"),
        (&["swap", "--experiment", "bell"], "config"),
        (&["teleport", "--frame", "rotating"], "invalid_argument"),
    ];
    for (k, (args, kind)) in cases.iter().enumerate() {
        let out = dir.path().join(format!("e{k}"));
        assert_eq!(run(args, &out), 1, "{args:?}");
        let e = read_json(&out.join("error.json"));
        assert_eq!(e["error"]["kind"], *kind, "{args:?}");
        assert!(!out.join("summary.json").exists());
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_qdsim");
    let status = Command::new(bin).args(["run", "nonsense"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let out = dir.path().join("x");
    let status = Command::new(bin)
        .args(["run", "teleport", "--dt", "-1", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(out.join("error.json").exists());
}
