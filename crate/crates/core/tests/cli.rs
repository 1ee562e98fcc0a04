use std::process::{Command, Output};

use censored_bell::cli::{self, main_with};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_censored-bell"))
        .args(args)
        .env_remove("CENSORED_BELL_SEED")
        .env_remove("CENSORED_BELL_OUTPUT")
        .output()
        .unwrap()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("censored-bell").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn same_fraction(report: &str) -> f64 {
    let line = report.lines().find(|l| l.starts_with("same-color fraction")).unwrap();
    line.split_whitespace().nth(2).unwrap().parse().unwrap()
}

fn assert_single_json_line(stderr: &str, kind: &str) -> serde_json::Value {
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(v["error"], kind, "{stderr}");
    v
}

#[test]
fn negotiation_run_respects_floor() {
    let (code, out, err) = call(&["run", "--strategy", "negotiation", "--n", "100000", "--seed", "7"]);
    assert_eq!(code, 0, "{err}");
    assert!(same_fraction(&out) >= 0.551, "{out}");
    let order: Vec<usize> = ["feature (i)", "feature (ii)", "classical bound", "verdict"]
        .iter()
        .map(|k| out.find(k).unwrap())
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{out}");
}

#[test]
fn cheat_with_censor_on_reports_violation() {
    let (code, out, err) = call(&["run", "--strategy", "cheat", "--censor", "on", "--n", "10"]);
    assert_eq!(code, cli::EXIT_CENSOR_VIOLATION);
    assert!(out.is_empty());
    let v = assert_single_json_line(&err, "censor_violation");
    assert_eq!(v["round"], 1);
    assert_eq!(v["run"], 0);
    assert_ne!(v["payload_a"], v["payload_b"]);
    assert_eq!(v["partial"]["n_runs"], 0);
}

#[test]
fn cheat_with_censor_off_looks_quantum() {
    let (code, out, _) = call(&["run", "--strategy", "cheat", "--censor", "off", "--n", "100000"]);
    assert_eq!(code, 0);
    assert!((same_fraction(&out) - 0.5).abs() <= 0.01, "{out}");
    assert!(out.contains("feature (ii)         holds"));
}

#[test]
fn prove_bound_table() {
    let (code, out, _) = call(&["prove-bound"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| l.ends_with(" 5/9")).count(), 7); // six sets + minimum
    assert!(out.lines().any(|l| l == "minimum          5/9"));
    assert!(out.contains("RRR              1\n") && out.contains("GGG              1\n"));

    let (_, csv, _) = call(&["prove-bound", "--format", "csv"]);
    assert_eq!(csv.lines().next(), Some("instruction_set,same_fraction"));
    assert_eq!(csv.lines().nth(1), Some("RRG,5/9"));
}

#[test]
fn gap_verdicts() {
    let (code, out, err) = call(&["gap", "--n", "100000"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("verdict    disjoint"), "{out}");
    assert!(err.is_empty());

    let (code, out, err) = call(&["gap", "--n", "10"]);
    assert_eq!(code, 0);
    assert!(err.contains("insufficient_power"), "{err}");
    assert!(out.contains("no gap"));

    let (code, out, _) = call(&["gap", "--strategy", "quantum-oracle", "--n", "20000"]);
    assert_eq!(code, 0);
    assert!(out.contains("no gap"), "{out}");
}

#[test]
fn error_paths_emit_one_line_and_distinct_codes() {
    let (code, _, err) = call(&["run", "--strategy", "bogus"]);
    assert_eq!(code, cli::EXIT_UNKNOWN_STRATEGY);
    let v = assert_single_json_line(&err, "unknown_strategy");
    assert!(v["message"].as_str().unwrap().contains("negotiation"));

    let (code, _, err) = call(&["run", "--n", "0"]);
    assert_eq!(code, cli::EXIT_CONFIG);
    assert_single_json_line(&err, "config");

    let (code, _, err) = call(&["run", "--rounds", "0", "--n", "5"]);
    assert_eq!(code, cli::EXIT_CONFIG);
    assert_single_json_line(&err, "config");

    let (code, _, err) = call(&["run", "--censor", "maybe"]);
    assert_eq!(code, cli::EXIT_CONFIG);
    assert_single_json_line(&err, "usage");

    let (code, _, err) = call(&["frobnicate"]);
    assert_eq!(code, cli::EXIT_CONFIG);
    assert_single_json_line(&err, "usage");

    let (code, _, err) = call(&["run", "--n", "5", "--output", "/nonexistent/dir/x"]);
    assert_eq!(code, cli::EXIT_IO);
    assert_single_json_line(&err, "io");
}

#[test]
fn verify_censor_catches_cheat_only() {
    let (code, out, err) = call(&["verify-censor", "--strategy", "near-leak", "--n", "500"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("noninterference  holds"));

    let (code, _, err) = call(&["verify-censor", "--strategy", "cheat", "--n", "5"]);
    assert_eq!(code, cli::EXIT_CENSOR_VIOLATION);
    assert_single_json_line(&err, "censor_violation");
}

#[test]
fn list_strategies_includes_every_id() {
    let (code, out, _) = call(&["list-strategies", "--format", "jsonl"]);
    assert_eq!(code, 0);
    let ids: Vec<String> = out
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    for id in ["negotiation", "fixed-RRG", "clock-keyed", "tape-mixer", "randomness-hog", "near-leak", "cheat", "quantum-oracle"] {
        assert!(ids.iter().any(|i| i == id), "{id}");
    }
}

#[test]
fn jsonl_stream_has_header_records_summary() {
    let (code, out, _) = call(&["run", "--n", "50", "--seed", "3", "--format", "jsonl"]);
    assert_eq!(code, 0);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 52);
    assert_eq!(lines[0]["header"]["master_seed"], "3");
    assert_eq!(lines[0]["header"]["strategy"], "negotiation");
    assert!(lines[0]["header"]["code_version"].is_string());
    for (i, record) in lines[1..51].iter().enumerate() {
        assert_eq!(record["run"], i as u64);
        assert_eq!(record["transcript"].as_array().unwrap().len(), 8);
        let parsed = censored_bell::RunRecord::from_json_line(&record.to_string()).unwrap();
        let strategy = censored_bell::strategies::negotiation_strategy();
        censored_bell::protocol::replay(&censored_bell::RunConfig::default(), &*strategy, &parsed).unwrap();
    }
    assert_eq!(lines[51]["summary"]["stats"]["n_runs"], 50);
}

#[test]
fn csv_is_plot_ready() {
    let (code, out, _) = call(&["run", "--n", "900", "--format", "csv"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "left,right,runs,same,same_fraction,radius");
    assert_eq!(rows.len(), 10);
    let total: u64 = rows[1..].iter().map(|r| r.split(',').nth(2).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 900);
}

#[test]
fn environment_overrides_seed_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.jsonl");
    let status = Command::new(env!("CARGO_BIN_EXE_censored-bell"))
        .args(["run", "--n", "20", "--format", "jsonl"])
        .env("CENSORED_BELL_SEED", "1234")
        .env("CENSORED_BELL_OUTPUT", &path)
        .status()
        .unwrap();
    assert!(status.success());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with(r#"{"header":"#));
    assert!(written.lines().next().unwrap().contains(r#""master_seed":"1234""#));

    let explicit = bin(&["run", "--n", "20", "--format", "jsonl", "--seed", "1234"]);
    assert_eq!(explicit.stdout, written.as_bytes());
}

#[test]
fn help_documents_exit_codes() {
    let out = bin(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Exit codes:"));
    for sub in ["run", "prove-bound", "gap", "verify-censor", "list-strategies"] {
        assert!(text.contains(sub), "{sub}");
    }
}
