use std::path::Path;
use std::process::{Command, Output};

fn bucketpull(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bucketpull")).args(args).output().expect("spawn bucketpull")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--build-size", "4096", "--rounds", "4", "--deletes-after", "2", "--node-size", "8"];

#[test]
fn run_prints_header_and_one_row_per_phase() {
    let o = bucketpull(&[&["run", "--verify", "--probe", "both"], SMALL].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("verify: PASS"));
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), bucketpull::bench::CSV_COLUMNS.join(","));
    // build + 4 rounds of (update, hit, miss)
    assert_eq!(lines.count(), 1 + 4 * 3);
}

#[test]
fn exit_codes() {
    assert_eq!(bucketpull(&["run", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(bucketpull(&["run", "--build-size", "64", "--x", "0"]).status.code(), Some(2));
    assert_eq!(bucketpull(&["run", "--build-size", "64", "--node-size", "1"]).status.code(), Some(2));
    assert_eq!(bucketpull(&["run", "--build-size", "64", "--threads", "0"]).status.code(), Some(2));
    let o = bucketpull(&["run", "--build-size", "1000", "--alloc-factor", "0", "--growth", "300", "--probe", "none"]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    let o = bucketpull(&["replay", "--build-file", "/nonexistent/build.bin"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# small run\nbuild_size = 2048\nrounds = 2\nprobe = hit\nverify = true\nseed = 5\n").unwrap();
    let out = dir.path().join("out");
    let o = bucketpull(&["run", "--config", cfg.to_str().unwrap(), "--rounds", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("verify: PASS"));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    // The command-line --rounds wins: build + 3 x (insert, probe-hit).
    assert_eq!(csv.lines().count(), 1 + 1 + 3 * 2);
    let jsonl = std::fs::read_to_string(out.join("metrics.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 7);
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["phase"], "build");
    assert_eq!(first["live_pairs"], 2048);

    std::fs::write(&cfg, "build_size 2048\n").unwrap();
    assert_eq!(bucketpull(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

fn logical_rows(path: &Path) -> Vec<String> {
    let timing: Vec<usize> = bucketpull::bench::CSV_COLUMNS
        .iter()
        .enumerate()
        .filter(|(_, c)| bucketpull::bench::TIMING_COLUMNS.contains(c))
        .map(|(i, _)| i)
        .collect();
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').enumerate().filter(|(i, _)| !timing.contains(i)).map(|(_, f)| f).collect::<Vec<_>>().join(","))
        .collect()
}

#[test]
fn gen_dump_and_replay_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let workload = [SMALL, &["--x", "6", "--probe", "both", "--restructure-after-deletes", "--seed", "11"]].concat();

    let o = bucketpull(&[&["run", "--out", &p("run"), "--dump-batches", &p("dump")], workload.as_slice()].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bucketpull(&[&["gen", "--out", &p("gen")], workload.as_slice()].concat());
    assert!(o.status.success(), "{}", stderr(&o));

    let mut names: Vec<String> = std::fs::read_dir(p("dump")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    for n in &names {
        assert_eq!(std::fs::read(dir.path().join("dump").join(n)).unwrap(), std::fs::read(dir.path().join("gen").join(n)).unwrap(), "{n}");
    }
    assert!(names.contains(&"r004-restructure.bin".to_string()));

    let mut args = vec!["replay".to_string(), "--node-size".into(), "8".into(), "--verify".into(), "--out".into(), p("replay")];
    args.extend(["--build-file".to_string(), p("dump/build.bin")]);
    for n in names.iter().filter(|n| n.starts_with('r')) {
        args.extend(["--batch-file".to_string(), p(&format!("dump/{n}"))]);
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = bucketpull(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("restructure:"));
    assert_eq!(logical_rows(&dir.path().join("run/metrics.csv")), logical_rows(&dir.path().join("replay/metrics.csv")));
}

#[test]
fn validate_reads_csv_batches() {
    let dir = tempfile::tempdir().unwrap();
    let build = dir.path().join("build.csv");
    let batch = dir.path().join("more.csv");
    std::fs::write(&build, "key,row_id\n10,1\n20,2\n30,3\n40,4\n").unwrap();
    std::fs::write(&batch, "15,9\n35,9\n").unwrap();
    let o = bucketpull(&[
        "validate",
        "--node-size",
        "4",
        "--build-file",
        build.to_str().unwrap(),
        "--batch-file",
        batch.to_str().unwrap(),
        "--op",
        "insert",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let status: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(status["status"], "ok");
    assert_eq!(status["live_pairs"], 6);

    let o = bucketpull(&["validate", "--build-file", build.to_str().unwrap(), "--batch-file", batch.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "an unnamed batch file needs --op: {}", stderr(&o));
}
