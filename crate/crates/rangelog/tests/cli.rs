//! End-to-end checks of the installed binary: exit codes, JSON round-trips,
//! and rerun stability of everything it writes.

use rangelog::report::{RunReport, SelectReport, SuiteReport};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rangelog");
const MOTIVATING: &str = "testdata/motivating.dl";

fn rangelog(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).expect("stdout is UTF-8")
}

#[test]
fn exit_codes_reflect_failure_class() {
    assert_eq!(rangelog(&["--help"]).status.code(), Some(0));
    assert_eq!(rangelog(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rangelog(&["run", "--bogus-flag", MOTIVATING]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dl");
    std::fs::write(&bad, ".decl A(x)\nA(x) :- B(x).\n").unwrap();
    let out = rangelog(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown relation"));

    let missing = dir.path().join("missing.dl");
    assert_eq!(
        rangelog(&["run", missing.to_str().unwrap()]).status.code(),
        Some(3)
    );

    // Parseable program whose fact file does not exist.
    let orphan = dir.path().join("orphan.dl");
    std::fs::write(&orphan, ".decl A(x)\n.input A \"nowhere.tsv\"\n").unwrap();
    assert_eq!(
        rangelog(&["run", orphan.to_str().unwrap()]).status.code(),
        Some(3)
    );
}

#[test]
fn select_json_round_trips() {
    let out = rangelog(&["select", MOTIVATING, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: SelectReport = serde_json::from_str(stdout_of(&out)).unwrap();
    let a = &report.relations[0];
    assert_eq!(a.relation, "A");
    assert_eq!(a.indexes, vec!["x ≺ y ≺ z", "x ≺ z"]);
    assert_eq!(serde_json::from_str::<SelectReport>(
        &serde_json::to_string(&report).unwrap()
    ).unwrap(), report);
}

#[test]
fn run_is_stable_across_reruns_and_modes() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports: Vec<RunReport> = Vec::new();
    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for (i, (mode, threads)) in [("auto", "1"), ("auto", "1"), ("auto", "4")]
        .iter()
        .enumerate()
    {
        let out_dir = dir.path().join(format!("r{i}"));
        let out = rangelog(&[
            "run", MOTIVATING,
            "--mode", mode,
            "--threads", threads,
            "--out-dir", out_dir.to_str().unwrap(),
            "--format", "json",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(serde_json::from_str(stdout_of(&out)).unwrap());
        outputs.push(std::fs::read(out_dir.join("B.tsv")).unwrap());
    }
    assert_eq!(reports[0].fingerprint, reports[1].fingerprint);
    assert_eq!(reports[0].fingerprint, reports[2].fingerprint);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    assert_eq!(reports[0].totals.tuples_derived, 2);

    // Scan mode derives the same rows without any extra containers.
    let scan_dir = dir.path().join("scan");
    let out = rangelog(&[
        "run", MOTIVATING,
        "--mode", "scan",
        "--out-dir", scan_dir.to_str().unwrap(),
        "--format", "json",
    ]);
    let scan: RunReport = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(scan.totals.tuples_derived, 2);
    assert_eq!(std::fs::read(scan_dir.join("B.tsv")).unwrap(), outputs[0]);
    assert_ne!(scan.fingerprint, reports[0].fingerprint);
}

#[test]
fn verify_subcommand_reports_clean_suites() {
    let out = rangelog(&["verify", "--trials", "40", "--seed", "5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let suites: Vec<SuiteReport> = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(suites.len(), 4);
    assert!(suites.iter().all(|s| s.failures == 0));
}

#[test]
fn bench_compares_all_strategies() {
    let out = rangelog(&["bench", MOTIVATING]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    for needle in ["auto", "naive", "scan", "index-insert ratio"] {
        assert!(text.contains(needle), "missing {needle:?} in:\n{text}");
    }
}
