//! CLI contract tests: exit codes, pinned schema headers, byte-stable
//! reruns, cache behavior, flag parsing.

use std::path::Path;
use std::process::{Command, Output};

fn gaplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = gaplab(args);
    assert!(out.status.success(), "{args:?}: {out:?}");
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    gaplab(args).status.code().unwrap()
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(exit_code(&["frobnicate"]), 64);
    assert_eq!(exit_code(&["sieve", "--bogus-flag"]), 64);
    // malformed numerics are parse errors, not preconditions
    assert_eq!(exit_code(&["sieve", "--x", "abc"]), 64);
    assert_eq!(exit_code(&["sieve", "--x", "1.23e1"]), 64);
    assert_eq!(exit_code(&["sieve"]), 64); // missing required flag
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(exit_code(&["--help"]), 0);
    assert_eq!(exit_code(&["--version"]), 0);
    assert_eq!(exit_code(&["moments", "--help"]), 0);
}

#[test]
fn precondition_violations_exit_2() {
    // l >= k
    assert_eq!(
        exit_code(&["moments", "--N", "1000", "--tuple", "0,2", "--l", "2", "--R", "10"]),
        2
    );
    // inadmissible tuple
    assert_eq!(
        exit_code(&["moments", "--N", "1000", "--tuple", "0,1", "--l", "0", "--R", "10"]),
        2
    );
    // h1 = h2
    assert_eq!(exit_code(&["pairs", "--N", "1000", "--h1", "2", "--h2", "2"]), 2);
    // eta outside (0, 0.2]
    assert_eq!(exit_code(&["params-uncond", "--eta", "0.3"]), 2);
    // theta at the closed endpoint 1/2
    assert_eq!(exit_code(&["params-cond", "--theta", "0.5"]), 2);
    // duplicate offsets
    assert_eq!(
        exit_code(&["singular", "--tuple", "0,0"]),
        2
    );
}

#[test]
fn budget_violations_exit_3() {
    assert_eq!(exit_code(&["gallagher", "--k", "4", "--h", "10"]), 3);
    assert_eq!(
        exit_code(&["fourth", "--N", "2e5", "--h", "4", "--k", "1", "--R", "10"]),
        3
    );
    assert_eq!(
        exit_code(&["stilde", "--N", "1e5", "--h", "60", "--k", "3", "--l", "1", "--R", "1000", "--delta", "0.2"]),
        3
    );
}

#[test]
fn schema_headers_pinned() {
    let cases: Vec<(&str, Vec<&str>)> = vec![
        (
            "# gaplab csv sieve v1\nx,prime_count,theta",
            vec!["sieve", "--x", "1000"],
        ),
        (
            "# gaplab csv explaw v1\nx,eta,count,fraction,conjectured,diff",
            vec!["explaw", "--x", "1e4", "--eta", "1"],
        ),
        (
            "# gaplab csv moments v1\nN,k,l,R,delta,restricted,empirical,main_term,ratio,method",
            vec!["moments", "--N", "1000", "--tuple", "0,2", "--l", "1", "--R", "10"],
        ),
        (
            "# gaplab csv gallagher v1\nk,h,P,sum,ratio",
            vec!["gallagher", "--k", "1", "--h", "10"],
        ),
        (
            "# gaplab csv qcount v1\nN,h,Q,inside_gaps,boundary,check34",
            vec!["qcount", "--N", "1000", "--h", "10"],
        ),
        (
            "# gaplab csv pairs v1\nN,h1,h2,count,singular,hl_ratio",
            vec!["pairs", "--N", "1000", "--h1", "0", "--h2", "2"],
        ),
        (
            "# gaplab csv bv v1\nx,Q,bv_sum,norm_a1,norm_a2",
            vec!["bv", "--x", "1e4", "--Q", "3"],
        ),
        (
            "# gaplab csv singular v1\noffsets,P,value,tail_log_bound,exact_zero",
            vec!["singular", "--tuple", "0,2"],
        ),
        (
            "# gaplab csv fourth v1\nN,h,k,l,R,sum,ratio,tuples",
            vec!["fourth", "--N", "1e3", "--h", "4", "--k", "1", "--R", "10"],
        ),
    ];
    for (expect, args) in cases {
        let out = stdout_of(&args);
        assert!(
            out.starts_with(&format!("{expect}\n")),
            "{args:?} produced header {:?}",
            out.lines().take(2).collect::<Vec<_>>()
        );
    }
}

#[test]
fn scientific_notation_is_exact() {
    let a = stdout_of(&["sieve", "--x", "1e3"]);
    let b = stdout_of(&["sieve", "--x", "1000"]);
    assert_eq!(a, b);
    // 1.5e1 = 15 exactly is accepted
    assert_eq!(exit_code(&["qcount", "--N", "1000", "--h", "1.5e1"]), 0);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["explaw", "--x", "5e4", "--eta", "0.5,1"];
    assert_eq!(stdout_of(&args), stdout_of(&args));
    let args = ["params-xi", "--xi", "0.1"];
    assert_eq!(stdout_of(&args), stdout_of(&args));
}

#[test]
fn params_json_contents() {
    let uncond: serde_json::Value =
        serde_json::from_str(&stdout_of(&["params-uncond", "--eta", "0.1"])).unwrap();
    assert_eq!(uncond["extras"]["c3"], 184544.0);
    assert_eq!(uncond["k"], 6642);
    assert_eq!(uncond["l"], 40);

    let cond: serde_json::Value =
        serde_json::from_str(&stdout_of(&["params-cond", "--theta", "0.96"])).unwrap();
    assert_eq!(cond["k"], 7);
    assert_eq!(cond["l"], 1);

    let xi: serde_json::Value =
        serde_json::from_str(&stdout_of(&["params-xi", "--xi", "0.1"])).unwrap();
    assert_eq!(xi["extras"]["exponent"], 551.0);

    let eh: serde_json::Value =
        serde_json::from_str(&stdout_of(&["params-eh", "--eta", "1"])).unwrap();
    assert_eq!(eh["k"], 145);
    assert_eq!(eh["l"], 6);
}

#[test]
fn identity_grid_all_equal() {
    let out = stdout_of(&["identity", "--k-max", "8", "--l-max", "4"]);
    for line in out.lines().skip(2) {
        assert!(line.ends_with(",true"), "non-exact row: {line}");
    }
    let out = stdout_of(&["identity", "--expansion", "--k-max", "6", "--l-max", "3"]);
    assert!(out.lines().count() > 10);
}

#[test]
fn dkr_oracle_matches() {
    let out = stdout_of(&["dkr", "--k", "2", "--oracle"]);
    for line in out.lines().skip(2) {
        assert!(
            line.ends_with("OrderedWithRepeats"),
            "convention mismatch: {line}"
        );
    }
    // formula-only mode runs for larger k
    let out = stdout_of(&["dkr", "--k", "6"]);
    assert_eq!(out.lines().count(), 2 + 9); // header + r = 0..=8
}

#[test]
fn cache_roundtrip_and_byte_identity() {
    let dir = tempfile::tempdir().unwrap();
    let dir_s = dir.path().to_str().unwrap();

    // clear on an empty dir succeeds with zero removals
    let out = stdout_of(&["cache", "clear", "--dir", dir_s]);
    assert!(out.contains("removed 0"));

    let cold = stdout_of(&["sieve", "--x", "3e5,4e5", "--cache-dir", dir_s]);
    let status = stdout_of(&["cache", "status", "--dir", dir_s]);
    assert!(!status.starts_with("cached files: 0"), "{status}");

    let warm = stdout_of(&["sieve", "--x", "3e5,4e5", "--cache-dir", dir_s]);
    let bare = stdout_of(&["sieve", "--x", "3e5,4e5"]);
    assert_eq!(cold, warm, "cache must not change results");
    assert_eq!(cold, bare, "cache must not change results");

    let out = stdout_of(&["cache", "prewarm", "--dir", dir_s, "--lo", "1", "--hi", "1e6"]);
    assert!(out.contains("prewarmed"));
    let status = stdout_of(&["cache", "status", "--dir", dir_s]);
    assert!(status.contains("[1, "), "{status}");

    let cleared = stdout_of(&["cache", "clear", "--dir", dir_s]);
    assert!(!cleared.contains("removed 0"));
    let status = stdout_of(&["cache", "status", "--dir", dir_s]);
    assert!(status.starts_with("cached files: 0"));

    // no dir anywhere: precondition
    let code = Command::new(env!("CARGO_BIN_EXE_gaplab"))
        .args(["cache", "status"])
        .env_remove("GAPLAB_CACHE_DIR")
        .output()
        .unwrap()
        .status
        .code()
        .unwrap();
    assert_eq!(code, 2);

    // env fallback works
    let out = Command::new(env!("CARGO_BIN_EXE_gaplab"))
        .args(["cache", "status"])
        .env("GAPLAB_CACHE_DIR", dir_s)
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn out_file_and_log_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("rows.csv");
    let log_path = dir.path().join("run.log");
    let output = gaplab(&[
        "gallagher",
        "--k",
        "1",
        "--h",
        "5",
        "--out",
        out_path.to_str().unwrap(),
        "--log",
        log_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(output.stdout.is_empty(), "data went to the file");
    let content = std::fs::read_to_string(&out_path).unwrap();
    assert!(content.starts_with("# gaplab csv gallagher v1\n"));
    assert!(content.contains("1,5,1000000,5,1"));
    let log = std::fs::read_to_string(&log_path).unwrap();
    assert!(log.contains("unix_time="));
    assert!(!content.contains("unix_time="), "no timestamps in data");
    assert!(Path::new(&out_path).exists());
}

#[test]
fn stilde_and_gaps_histogram_run() {
    let out = stdout_of(&[
        "stilde", "--N", "1e4", "--h", "6", "--k", "2", "--l", "1", "--R", "10", "--delta", "0.2",
    ]);
    assert!(out.starts_with("# gaplab csv stilde v1\n"));
    assert_eq!(out.lines().count(), 3);

    let out = stdout_of(&["gaps", "--x", "1e4", "--edge-step", "0.5", "--edge-max", "2"]);
    // 4 edges -> 5 bins
    assert_eq!(out.lines().count(), 2 + 5);
    let last = out.lines().last().unwrap();
    assert!(last.contains(",inf,"));
}
