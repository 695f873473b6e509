//! Exercises the binary end to end: stage commands, exit codes, artifact
//! round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(format!("{name}.skel"))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pairnf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pairnf_cli_{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn parse_reports_ok_and_diagnostics() {
    let out = run(&["parse", &path_str(&corpus("mutex2"))]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 process(es)"));

    // A dead-end state is a validation error: exit 2, located diagnostic.
    let dir = tmp("parse_bad");
    let bad = dir.join("bad.skel");
    std::fs::write(
        &bad,
        "program bad\nprocess P1 { props a; state s { }; state t { a }; arc s -> t; }\ninit (s);\n",
    )
    .unwrap();
    let out = run(&["parse", &path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[DeadEndState]"), "{err}");
    assert!(err.contains("bad.skel:2:"), "{err}");
}

#[test]
fn parse_emit_prints_canonical_form() {
    let out = run(&["parse", &path_str(&corpus("toggle1")), "--emit"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("program toggle1"));
    assert!(text.contains("arc off -> lit_on;"));
}

#[test]
fn gstd_builds_structures_and_dot() {
    let dir = tmp("gstd");
    let kstruct = dir.join("toggle.kstruct");
    let dot = dir.join("toggle.dot");
    let out = run(&[
        "gstd",
        &path_str(&corpus("toggle1")),
        "-o",
        &path_str(&kstruct),
        "--dot",
        &path_str(&dot),
        "--check-unique-incoming",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&kstruct).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("state ")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.starts_with("trans ")).count(), 2);
    let dot_text = std::fs::read_to_string(&dot).unwrap();
    assert_eq!(dot_text.matches(" -> ").count(), 2);
}

#[test]
fn gstd_budget_exceeded_is_exit_3() {
    let out = run(&["gstd", &path_str(&corpus("mutex2")), "--state-budget", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn transform_then_unique_incoming_check_passes() {
    let dir = tmp("transform");
    let marked = dir.join("marked.kstruct");
    let out = run(&[
        "transform",
        &path_str(&corpus("toggles3")),
        "-o",
        &path_str(&marked),
    ]);
    assert!(out.status.success());
    let out = run(&["stats", &path_str(&marked), "--check-unique-incoming"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"unique_incoming\": true"));

    // The untransformed diagram has join states, so the same check fails.
    let out = run(&[
        "gstd",
        &path_str(&corpus("toggles3")),
        "-o",
        &path_str(&dir.join("plain.kstruct")),
        "--check-unique-incoming",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pipeline_verifies_and_verify_audits_certificates() {
    let dir = tmp("pipe");
    let out = run(&[
        "pipeline",
        &path_str(&corpus("mutex2")),
        "-o",
        &path_str(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("verified"));

    // Independent re-audit of an emitted certificate.
    let out = run(&[
        "verify",
        &path_str(&dir.join("mq.kstruct")),
        &path_str(&dir.join("mq_marked.kstruct")),
        "--relation",
        &path_str(&dir.join("cert_mq_marked.txt")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Fresh bisimilarity check between stored structures.
    let out = run(&[
        "verify",
        &path_str(&dir.join("mq.kstruct")),
        &path_str(&dir.join("mpp.kstruct")),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("bisimilar"));
}

#[test]
fn verify_rejects_inequivalent_programs() {
    // Same proposition universe, different behavior: the second program
    // deadlocks after one step.
    let dir = tmp("verify_neq");
    let stuck = dir.join("stuck.skel");
    std::fs::write(
        &stuck,
        "program toggle1\nprocess P1 { props lit; state off { }; state lit_on { lit };\n\
         arc off -> lit_on; arc lit_on -> off when lit & !lit; }\ninit (off);\n",
    )
    .unwrap();
    let out = run(&["verify", &path_str(&corpus("toggle1")), &path_str(&stuck)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not bisimilar"));

    // Different proposition universes are a precondition error, not a
    // verification verdict.
    let out = run(&[
        "verify",
        &path_str(&corpus("toggle1")),
        &path_str(&corpus("cycle3")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compile_then_extract_pair_system() {
    let dir = tmp("extract");
    let out = run(&[
        "compile",
        &path_str(&corpus("tokenring3")),
        "-o",
        &path_str(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let compiled = dir.join("compiled.skel");
    assert!(compiled.exists());
    assert!(dir.join("stats.json").exists());

    let pair = dir.join("pair12.skel");
    let out = run(&[
        "extract",
        &path_str(&compiled),
        "--pair",
        "1",
        "2",
        "-o",
        &path_str(&pair),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(&["parse", &path_str(&pair)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 process(es)"));

    let triple = dir.join("triple.skel");
    let out = run(&[
        "extract",
        &path_str(&compiled),
        "--triple",
        "1",
        "2",
        "3",
        "-o",
        &path_str(&triple),
    ]);
    assert!(out.status.success());
    let out = run(&["parse", &path_str(&triple)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("3 process(es)"));
}

#[test]
fn three_process_pipeline_reports_dnf_width_bound() {
    let dir = tmp("ring");
    let out = run(&[
        "pipeline",
        &path_str(&corpus("tokenring3")),
        "-o",
        &path_str(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stats = std::fs::read_to_string(dir.join("stats.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&stats).unwrap();
    let width = json["compile"]["dnf_width_max"].as_u64().unwrap();
    assert!(width <= 9, "width {width}");
    assert_eq!(json["compile"]["dnf_width_bound"].as_u64(), Some(9));
    assert!(json["bounds"]
        .as_array()
        .unwrap()
        .iter()
        .all(|b| b["pass"].as_bool() == Some(true)));
}

#[test]
fn export_dot_handles_programs_and_structures() {
    let dir = tmp("dot");
    let out = run(&["export-dot", &path_str(&corpus("toggle1"))]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("digraph"));

    let kstruct = dir.join("m.kstruct");
    assert!(run(&[
        "gstd",
        &path_str(&corpus("toggle1")),
        "-o",
        &path_str(&kstruct)
    ])
    .status
    .success());
    let out = run(&["export-dot", &path_str(&kstruct)]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("digraph"));
    assert_eq!(text.matches(" -> ").count(), 2);
}

#[test]
fn env_var_overrides_budgets() {
    let out = bin()
        .args(["gstd", &path_str(&corpus("mutex2"))])
        .env("PAIRNF_STATE_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
