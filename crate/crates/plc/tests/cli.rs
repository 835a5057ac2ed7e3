use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn plc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plc")).current_dir(dir).env("PLC_WORKERS", "2").args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn synthesize_then_run_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = plc(d, &["synthesize", "--out", "data", "--blobs", "10,3,2,10", "--r", "1", "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cands = fs::read_to_string(d.join("data/candidates.csv")).unwrap();
    assert_eq!(cands.lines().count(), 30);
    assert!(cands.lines().all(|l| l.split(';').count() == 2));

    let out = plc(
        d,
        &[
            "run", "--name", "toy", "--features", "data/features.csv", "--labels", "data/labels.csv", "--candidates",
            "data/candidates.csv", "--rho", "0.3", "--trials", "2", "--methods", "PLC-LD,KMEANS", "--output", "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["PLC-LD/records.json", "KMEANS/records.json", "tables/summary.csv", "tables/test_only.csv", "series/acc_KMEANS.dat", "timings.csv"] {
        assert!(d.join("o/toy").join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(d.join("o/toy/tables/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    // given candidates, r is not part of the record
    let json = fs::read_to_string(d.join("o/toy/KMEANS/records.json")).unwrap();
    assert!(json.contains("\"r\": null"));
}

#[test]
fn config_file_with_overrides_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.toml"),
        "methods = [\"SC\"]\noutput = \"res\"\n[dataset]\nname = \"b\"\n\
         blobs = { per_class = 10, classes = 2, dim = 2, separation = 10.0 }\n\
         [protocol]\nr = 1\nrho = [0.2, 0.4]\ntrials = 2\n",
    )
    .unwrap();
    let out = plc(d, &["run", "--config", "exp.toml", "--trials", "3", "--formats", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let records = fs::read_to_string(d.join("res/b/SC/records.json")).unwrap();
    let parsed: Vec<serde_json::Value> = serde_json::from_str(&records).unwrap();
    assert_eq!(parsed.len(), 6);
    assert!(!d.join("res/b/tables").exists());

    let out = plc(d, &["report", "res/b"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_to_string(d.join("res/b/tables/summary.csv")).unwrap().lines().count(), 3);
    assert_eq!(fs::read_to_string(d.join("res/b/SC/records.json")).unwrap(), records);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["run", "--name", "b", "--blobs", "12,3,2,10", "--r", "1", "--rho", "0.2", "--trials", "2", "--methods", "PLC", "--base-seed", "9"];
    let read = || fs::read(d.join("out/b/PLC/records.json")).unwrap();
    assert_eq!(code(&plc(d, &args)), 0);
    let first = read();
    assert_eq!(code(&plc(d, &args)), 0);
    assert_eq!(read(), first);
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = plc(
        d,
        &[
            "sweep", "--name", "b", "--blobs", "8,3,2,10", "--r", "1", "--rho", "0.3", "--trials", "1", "--methods", "PLC-LD",
            "--grid-alpha", "0.01,0.1,1", "--grid-beta", "0.01,0.1,1",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(d.join("out/b/sweep/tables/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 10);
    assert!(table.starts_with("k,alpha,beta,method,rho,"));
}

#[test]
fn failed_cells_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = plc(dir.path(), &["run", "--name", "b", "--blobs", "5,3,2,10", "--r", "3", "--rho", "0.3", "--trials", "1"]);
    assert_eq!(code(&out), 1);
    let json = fs::read_to_string(dir.path().join("out/b/PLC/records.json")).unwrap();
    assert!(json.contains("\"error\": \""));
}

#[test]
fn fatal_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.toml"), "[dataset\n").unwrap();
    fs::write(d.join("f.csv"), "1,2\nx,3\n").unwrap();
    fs::write(d.join("l.csv"), "1\n2\n").unwrap();
    let cases: [&[&str]; 6] = [
        &["run", "--config", "missing.toml"],
        &["run", "--config", "bad.toml"],
        &["run", "--name", "b", "--features", "f.csv", "--labels", "l.csv", "--r", "1", "--rho", "0.5"],
        &["run", "--name", "b", "--blobs", "5,3,2,10", "--r", "1", "--rho", "1.5"],
        &["run", "--name", "b", "--blobs", "5,3,2", "--r", "1", "--rho", "0.5"],
        &["report", "nothing-here"],
    ];
    for args in cases {
        let out = plc(d, args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("error: "), "{args:?}: {}", stderr(&out));
    }
    let out = plc(d, &["run", "--name", "b", "--blobs", "5,3,2,10", "--r", "1", "--rho", "0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let bad_workers = Command::new(env!("CARGO_BIN_EXE_plc"))
        .current_dir(d)
        .env("PLC_WORKERS", "many")
        .args(["run", "--name", "b", "--blobs", "5,3,2,10", "--r", "1", "--rho", "0.5"])
        .output()
        .unwrap();
    assert_eq!(code(&bad_workers), 2);
    assert!(stderr(&bad_workers).contains("PLC_WORKERS"));
}
