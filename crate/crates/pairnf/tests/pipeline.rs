//! End-to-end integration: every corpus program goes through the full
//! pipeline; artifacts round-trip; subsystem extraction yields valid
//! pairwise programs.

mod common;

use common::{load_corpus, CORPUS};
use pairnf::bisim::{check_relation, compute_bisim, ApInterner, StateGraph};
use pairnf::compile::jsystem::extract_j_system;
use pairnf::compile::validate::validate_pairwise;
use pairnf::compile::{compile, CompileOptions};
use pairnf::frontend::{parse_program, print_program, SourceUnit};
use pairnf::gstd::{build_gstd, BuildOptions};
use pairnf::pipeline::{run_pipeline, PipelineConfig};
use pairnf::transform::transform;

#[test]
fn corpus_parses_and_roundtrips() {
    for name in CORPUS {
        let p = load_corpus(name);
        let printed = print_program(&p);
        let reparsed = parse_program(&SourceUnit::new(&printed, "<printed>"))
            .unwrap_or_else(|d| panic!("{name}: {}", d[0]));
        assert_eq!(p, reparsed, "{name}: print/parse fixpoint");
        assert_eq!(printed, print_program(&reparsed), "{name}: stable print");
    }
}

#[test]
fn full_pipeline_on_every_corpus_program() {
    for name in CORPUS {
        let dir = std::env::temp_dir().join(format!("pairnf_pipeline_{name}"));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = PipelineConfig::new(common::corpus_dir().join(format!("{name}.skel")), &dir);
        let outcome = run_pipeline(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(
            outcome.ok(),
            "{name}: pipeline failures: {:?}",
            outcome.failures
        );
        for artifact in [
            "compiled.skel",
            "stats.json",
            "mq.kstruct",
            "mq_marked.kstruct",
            "mp.kstruct",
            "mpp.kstruct",
            "cert_mq_marked.txt",
            "cert_marked_mp.txt",
            "cert_mp_mpp.txt",
            "cert_mq_mpp.txt",
        ] {
            assert!(dir.join(artifact).exists(), "{name}: missing {artifact}");
        }
        let _ = std::fs::remove_dir_all(&dir);
    }
}

#[test]
fn compiled_programs_reparse_and_validate() {
    for name in ["toggle1", "mutex2", "tokenring3"] {
        let p = load_corpus(name);
        let mq = build_gstd(&p, &BuildOptions::default()).unwrap();
        let marked = transform(&mq);
        let compiled = compile(&p, &marked, &CompileOptions::default()).unwrap();

        let text = print_program(&compiled.program);
        let reparsed = parse_program(&SourceUnit::new(&text, "<compiled>"))
            .unwrap_or_else(|d| panic!("{name}: compiled output rejected: {}", d[0]));
        assert_eq!(reparsed, compiled.program, "{name}");

        let (ok, diags) = validate_pairwise(&compiled.program);
        assert!(ok, "{name}: {:?}", diags.first().map(|d| &d.message));

        // The pruned program generates the same structure.
        let mpp2 = build_gstd(&compiled.program, &BuildOptions::default()).unwrap();
        assert_eq!(mpp2.n_states(), compiled.mpp.n_states(), "{name}");
        assert_eq!(mpp2.n_transitions(), compiled.mpp.n_transitions(), "{name}");
        let mut intern = ApInterner::default();
        let a = StateGraph::of_structure(&compiled.mpp, &mut intern);
        let b = StateGraph::of_structure(&mpp2, &mut intern);
        assert!(compute_bisim(&a, &b).unwrap().unwrap().certified, "{name}");
    }
}

#[test]
fn extraction_produces_valid_subsystems() {
    let p = load_corpus("tokenring3");
    let mq = build_gstd(&p, &BuildOptions::default()).unwrap();
    let marked = transform(&mq);
    let compiled = compile(&p, &marked, &CompileOptions::default()).unwrap();

    // Full restriction is the identity.
    let full = extract_j_system(&compiled.program, &[(1, 2), (1, 3), (2, 3)]).unwrap();
    assert_eq!(full, compiled.program);

    // Pair systems: two processes, pass the validator, explorable. The
    // 2-3 pair drops the first process, so every id table is remapped.
    for pair_of in [(1, 2), (2, 3), (1, 3)] {
        let pair = extract_j_system(&compiled.program, &[pair_of]).unwrap();
        assert_eq!(pair.k(), 2);
        let (ok, diags) = validate_pairwise(&pair);
        assert!(ok, "{pair_of:?}: {:?}", diags.first().map(|d| &d.message));
        build_gstd(&pair, &BuildOptions::default()).unwrap();
        // Round-trips through the surface syntax.
        let text = print_program(&pair);
        let reparsed = parse_program(&SourceUnit::new(&text, "<pair>"))
            .unwrap_or_else(|d| panic!("{pair_of:?}: {}", d[0]));
        assert_eq!(reparsed, pair);
    }

    // Triple system: P1 keeps only neighbor 2; P2 keeps 1 and 3.
    let triple = extract_j_system(&compiled.program, &[(1, 2), (2, 3)]).unwrap();
    assert_eq!(triple.k(), 3);
    let (ok, _) = validate_pairwise(&triple);
    assert!(ok);
    use pairnf::model::{ArcCommand, Pid};
    for arc in &triple.processes[0].arcs {
        let ArcCommand::Sync(blocks) = &arc.cmd else {
            panic!()
        };
        assert!(blocks.iter().all(|b| b.neighbor == Pid(1)));
    }
    for arc in &triple.processes[1].arcs {
        let ArcCommand::Sync(blocks) = &arc.cmd else {
            panic!()
        };
        let neighbors: Vec<Pid> = blocks.iter().map(|b| b.neighbor).collect();
        assert_eq!(neighbors, vec![Pid(0), Pid(2)]);
    }

    let err = extract_j_system(&compiled.program, &[]).unwrap_err();
    assert_eq!(err, pairnf::compile::jsystem::JSystemError::EmptyRange);
}

#[test]
fn pipeline_outputs_are_byte_identical_across_runs() {
    let name = "mutex2";
    let dirs = [
        std::env::temp_dir().join("pairnf_det_a"),
        std::env::temp_dir().join("pairnf_det_b"),
    ];
    for dir in &dirs {
        let _ = std::fs::remove_dir_all(dir);
        let cfg = PipelineConfig::new(common::corpus_dir().join(format!("{name}.skel")), dir);
        assert!(run_pipeline(&cfg).unwrap().ok());
    }
    let mut entries: Vec<String> = std::fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    entries.sort();
    assert!(!entries.is_empty());
    for file in entries {
        let a = std::fs::read(dirs[0].join(&file)).unwrap();
        let b = std::fs::read(dirs[1].join(&file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    for dir in &dirs {
        let _ = std::fs::remove_dir_all(dir);
    }
}

#[test]
fn join_relation_certifies_on_corpus() {
    for name in ["mutex2", "startup2", "tokenring3"] {
        let p = load_corpus(name);
        let mq = build_gstd(&p, &BuildOptions::default()).unwrap();
        let marked = transform(&mq);
        let compiled = compile(&p, &marked, &CompileOptions::default()).unwrap();
        let join = compiled.phase2.build_join(&marked);
        assert!(
            join.len() >= marked.structure().n_states(),
            "{name}: every marked state needs an emulating partner"
        );
        let mut intern = ApInterner::default();
        let g1 = StateGraph::of_structure(marked.structure(), &mut intern);
        let g2 = StateGraph::of_structure(&compiled.phase2.mp, &mut intern);
        check_relation(&g1, &g2, &join).unwrap_or_else(|v| panic!("{name}: {}", v[0].detail));
    }
}
