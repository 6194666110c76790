use std::io::Write as _;
use std::path::Path;
use std::process::Command;

use condma::aberration::k_sequence_direct;
use condma::cli::{run_cli, CheckReport, EvaluateReport, FixtureVerdict, PriorReport, EXIT_INVALID, EXIT_OK};
use condma::counts::CountVectors;
use condma::design::{expand, RegularSpec};
use condma::search::SearchResult;
use tempfile::NamedTempFile;

fn file_with(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("condma").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(f: &NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

#[test]
fn evaluate_json_round_trips_to_the_direct_sequence() {
    let f = file_with("16 6\nlabels: 1 2 4 8 15 7\n");
    let (code, out, _) = call(&["evaluate", path(&f), "--json"]);
    assert_eq!(code, EXIT_OK);
    let report: EvaluateReport = serde_json::from_str(&out).unwrap();
    let spec = RegularSpec::new(4, vec![1, 2, 4, 8, 15, 7]).unwrap();
    assert_eq!(report.to_k(), k_sequence_direct(&expand(&spec)).unwrap());
    assert_eq!(report.order.len(), 6 * (6 - 3));
    let raw: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(raw["N"], 16);
}

#[test]
fn evaluate_accepts_matrix_designs() {
    let mut text = String::from("8 5\nmatrix:\n");
    for u in 0..8u32 {
        let row: Vec<&str> =
            [1u32, 2, 4, 3, 5].iter().map(|b| if (u & b).count_ones() % 2 == 0 { "1" } else { "-1" }).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    let f = file_with(&text);
    let (code, out, _) = call(&["evaluate", path(&f)]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("N = 8, n = 5"));
}

#[test]
fn check_exit_code_follows_the_conditions() {
    let good = file_with("16 5\nlabels: 1 2 4 8 15\n");
    let (code, out, _) = call(&["check", path(&good), "--json"]);
    assert_eq!(code, EXIT_OK);
    let report: CheckReport = serde_json::from_str(&out).unwrap();
    assert!(report.conditions.passed() && report.optimal);

    // b4 = b1 + b2 + b3 breaks (iv)
    let bad = file_with("16 5\nlabels: 1 2 4 7 8\n");
    let (code, out, _) = call(&["check", path(&bad), "--json"]);
    assert_eq!(code, EXIT_INVALID);
    let report: CheckReport = serde_json::from_str(&out).unwrap();
    assert!(!report.conditions.cond_iv);
}

#[test]
fn counts_json_round_trips() {
    let f = file_with("32 8\nlabels: 1 2 4 8 16 7 11 29\n");
    let (code, out, _) = call(&["counts", path(&f), "--json"]);
    assert_eq!(code, EXIT_OK);
    let counts: CountVectors = serde_json::from_str(&out).unwrap();
    assert_eq!(counts.n, 8);
    let matrix = file_with("4 5\nmatrix:\n1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n");
    let (code, _, _) = call(&["counts", path(&matrix)]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn prior_reports_a_decreasing_hierarchy() {
    let (code, out, _) = call(&["prior", "--n", "6", "--rho", "0.5", "--json"]);
    assert_eq!(code, EXIT_OK);
    let report: PriorReport = serde_json::from_str(&out).unwrap();
    assert!(report.strictly_decreasing && report.max_abs_deviation <= 1e-9);
    let (code, _, err) = call(&["prior", "--n", "6", "--rho", "1.5"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.starts_with("error:"));
}

#[test]
fn search_json_matches_the_library() {
    let (code, out, _) = call(&["search", "--runs", "16", "--factors", "6", "--json", "--all-minima"]);
    assert_eq!(code, EXIT_OK);
    let result: SearchResult = serde_json::from_str(&out).unwrap();
    let lib = condma::search::search_ma(&condma::search::SearchTask::exhaustive(16, 6)).unwrap();
    assert_eq!(result, lib);
    let (code, out, _) = call(&["search", "--runs", "16", "--factors", "6", "--json"]);
    assert_eq!(code, EXIT_OK);
    let first: SearchResult = serde_json::from_str(&out).unwrap();
    assert_eq!(first.minimizers.len(), 1);
}

#[test]
fn search_refuses_infeasible_requests() {
    let (code, _, err) = call(&["search", "--runs", "32", "--factors", "8"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("16 runs"), "{err}");
    let (code, _, _) = call(&["search", "--runs", "64", "--factors", "8", "--mode", "catalog"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = call(&["search", "--runs", "16", "--factors", "16"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn search_reads_a_catalog_file() {
    let cat = file_with("runs: 16\n5: 1 2 4 8 15\n5: 1 2 4 8 7\n5: 1 2 4 8 3\n");
    let (code, out, _) =
        call(&["search", "--runs", "16", "--factors", "5", "--mode", "catalog", "--catalog", path(&cat), "--json"]);
    assert_eq!(code, EXIT_OK);
    let via_catalog: SearchResult = serde_json::from_str(&out).unwrap();
    let lib = condma::search::search_ma(&condma::search::SearchTask::exhaustive(16, 5)).unwrap();
    assert_eq!(via_catalog.best_k, lib.best_k);

    let broken = file_with("runs: 16\n5: 1 2 4 8\n");
    let (code, _, err) =
        call(&["search", "--runs", "16", "--factors", "5", "--mode", "catalog", "--catalog", path(&broken)]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn malformed_design_files_report_the_line() {
    let f = file_with("16 5\n# comment\nlabels: 1 2 4 x 15\n");
    let (code, _, err) = call(&["evaluate", path(&f)]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("line 3"), "{err}");
    let (code, _, _) = call(&["evaluate", "/nonexistent/design.txt"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = call(&["frobnicate"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn fixtures_verify_on_16_runs() {
    let (code, out, _) = call(&["fixtures", "--verify", "--runs", "16", "--json"]);
    let verdicts: Vec<FixtureVerdict> = serde_json::from_str(&out).unwrap();
    assert_eq!(verdicts.len(), 8);
    let beaten: Vec<usize> = verdicts.iter().filter(|v| v.outcome != "minimal").map(|v| v.n).collect();
    // the 9-factor row is beaten under the direct trace
    assert_eq!(beaten, vec![9]);
    assert_eq!(code, EXIT_INVALID);
    let (code, out, _) = call(&["fixtures"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().count() >= 19);
}

#[test]
fn binary_exit_codes() {
    let bin = Path::new(env!("CARGO_BIN_EXE_condma"));
    let ok = Command::new(bin).args(["prior", "--n", "5", "--rho", "0.3"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["search", "--runs", "16"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("search"));
}
