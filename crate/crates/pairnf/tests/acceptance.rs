//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{closed_form_transform, load_corpus, naive_bisim, CORPUS};
use pairnf::bisim::{check_relation, compose_relations, compute_bisim, ApInterner, StateGraph};
use pairnf::compile::dnf::split_disjunct;
use pairnf::compile::phase2::{family_enabled, family_fire};
use pairnf::compile::validate::validate_pairwise;
use pairnf::compile::vars::diagonal_partner;
use pairnf::compile::{compile, CompileOptions, Compiled};
use pairnf::frontend::{parse_program, print_program, Code, SourceUnit};
use pairnf::gstd::{build_gstd, BuildOptions, KripkeStructure};
use pairnf::model::{GlobalState, Program};
use pairnf::pipeline::{run_pipeline, PipelineConfig};
use pairnf::timestamps::{gt_o, lt_o, step, TS_VALUES};
use pairnf::transform::{transform, MarkedStructure};

fn pass(criterion: u32, detail: &str) {
    println!("[criterion {criterion}] PASS: {detail}");
}

fn build(p: &Program) -> KripkeStructure {
    build_gstd(p, &BuildOptions::default()).unwrap()
}

fn compile_corpus(name: &str) -> (Program, KripkeStructure, MarkedStructure, Compiled) {
    let p = load_corpus(name);
    let mq = build(&p);
    let marked = transform(&mq);
    let compiled =
        compile(&p, &marked, &CompileOptions::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
    (p, mq, marked, compiled)
}

/// Criterion 1: the cyclic ordering matches its table on all 9 pairs; the
/// advance procedure matches its six defined cases, errors on the three
/// equal pairs, and always exceeds its second argument.
#[test]
fn criterion_1_timestamp_tables() {
    let started = Instant::now();
    let lt_table = [
        ((0u8, 0u8), false),
        ((0, 1), true),
        ((0, 2), false),
        ((1, 0), false),
        ((1, 1), false),
        ((1, 2), true),
        ((2, 0), true),
        ((2, 1), false),
        ((2, 2), false),
    ];
    for ((t, u), expected) in lt_table {
        assert_eq!(lt_o(t, u), expected, "lt_o({t},{u})");
    }
    let step_table = [
        ((0u8, 1u8), 2u8),
        ((1, 2), 0),
        ((2, 0), 1),
        ((1, 0), 1),
        ((2, 1), 2),
        ((0, 2), 0),
    ];
    for ((t, u), expected) in step_table {
        assert_eq!(step(t, u), Ok(expected), "step({t},{u})");
    }
    for t in TS_VALUES {
        assert!(step(t, t).is_err(), "step({t},{t}) must be undefined");
    }
    for t in TS_VALUES {
        for u in TS_VALUES {
            if t != u {
                assert!(gt_o(step(t, u).unwrap(), u));
            }
        }
    }
    let took = started.elapsed();
    assert!(took < Duration::from_millis(1), "took {took:?}");
    pass(1, &format!("18 table entries exhaustive in {took:?}"));
}

/// Criterion 2: on the whole corpus the transformation terminates, every
/// output state has at most one incoming index, the (AP, SH, mark) key is
/// injective, the structure matches the closed-form split, and the source
/// and transformed structures certify as bisimilar. Under 10 s each.
#[test]
fn criterion_2_transform_correctness() {
    assert!(CORPUS.len() >= 6);
    for name in CORPUS {
        let started = Instant::now();
        let p = load_corpus(name);
        let mq = build(&p);
        let marked = transform(&mq);
        let out = marked.structure();

        assert!(out.unique_incoming(), "{name}");
        let keys: BTreeSet<&String> = out.keys.iter().collect();
        assert_eq!(keys.len(), out.n_states(), "{name}: key injectivity");

        // Independent closed-form execution of the split.
        let oracle = closed_form_transform(&mq);
        let got_states: BTreeSet<GlobalState> = out.states.iter().cloned().collect();
        assert_eq!(got_states, oracle.states, "{name}: state sets");
        let got_inits: BTreeSet<GlobalState> =
            out.initials.iter().map(|&i| out.state(i).clone()).collect();
        assert_eq!(got_inits, oracle.initials, "{name}: initial sets");
        let got_trans: BTreeSet<(GlobalState, pairnf::model::Pid, GlobalState)> = out
            .transitions
            .iter()
            .map(|&(a, pid, b)| (out.state(a).clone(), pid, out.state(b).clone()))
            .collect();
        assert_eq!(got_trans, oracle.transitions, "{name}: transition sets");

        let mut interner = ApInterner::default();
        let g1 = StateGraph::of_structure(&mq, &mut interner);
        let g2 = StateGraph::of_structure(out, &mut interner);
        let rel = compute_bisim(&g1, &g2)
            .unwrap()
            .unwrap_or_else(|w| panic!("{name}: transformed structure not bisimilar: {w:?}"));
        assert!(rel.certified, "{name}");

        let took = started.elapsed();
        assert!(took < Duration::from_secs(10), "{name} took {took:?}");
    }
    pass(
        2,
        &format!(
            "{} programs: unique incoming, injective keys, oracle match, certified",
            CORPUS.len()
        ),
    );
}

/// Criterion 3: the emulation relation passes the clause checker with
/// initial coverage on every corpus program; the three state invariants
/// hold at every reachable intermediate state; firing any arc family at a
/// related state reproduces the target's propositions and shared values.
/// Under 60 s each.
#[test]
fn criterion_3_emulation_correctness() {
    for name in CORPUS {
        let started = Instant::now();
        let (_, _, marked, compiled) = compile_corpus(name);
        let ph2 = &compiled.phase2;

        ph2.check_invariants(&marked)
            .unwrap_or_else(|e| panic!("{name}: {e}"));

        let join = ph2.build_join(&marked);
        assert!(join.len() >= marked.structure().n_states(), "{name}");
        let mut interner = ApInterner::default();
        let g1 = StateGraph::of_structure(marked.structure(), &mut interner);
        let g2 = StateGraph::of_structure(&ph2.mp, &mut interner);
        check_relation(&g1, &g2, &join)
            .unwrap_or_else(|v| panic!("{name}: clause {}: {}", v[0].clause, v[0].detail));

        // Initial coverage pairs its synthesized initial with each source
        // initial.
        let m = marked.structure();
        for (pos, &u0) in m.initials.iter().enumerate() {
            let r0 = &pairnf::compile::phase2::synth_initial_states(&marked, &ph2.vars)[pos];
            let r0_idx = ph2.mp.states.iter().position(|s| s == r0).unwrap();
            assert!(
                join.contains(&(u0.0 as usize, r0_idx)),
                "{name}: initial pair missing from the relation"
            );
        }

        // One-step emulation: at every related state, every family out of
        // the related source state is enabled and lands on the target's
        // propositions and shared values.
        let join_set: BTreeSet<(usize, usize)> = join.iter().copied().collect();
        for f in &ph2.families {
            for &(ui, ri) in &join_set {
                if ui != f.u.0 as usize {
                    continue;
                }
                let r = &ph2.mp.states[ri];
                assert!(
                    family_enabled(&marked, &ph2.vars, f, r, Some(ph2.last[ri])),
                    "{name}: family from a related state must be enabled"
                );
                let s = family_fire(&marked, &ph2.vars, f, r).unwrap();
                let v = m.state(f.v);
                assert_eq!(s.locals, v.locals, "{name}: propositions after firing");
                for (x, &val) in v.shared.iter().enumerate() {
                    for j in 0..ph2.vars.k {
                        assert_eq!(
                            s.shared[ph2.vars.copy(x, f.pid.0, j)],
                            val,
                            "{name}: copies after firing"
                        );
                    }
                }
            }
        }

        let took = started.elapsed();
        assert!(took < Duration::from_secs(60), "{name} took {took:?}");
    }
    pass(
        3,
        "emulation relation, invariants and one-step emulation hold on the corpus",
    );
}

/// Criterion 4: for every arc family, the disjunction of the split guards
/// is equivalent to the ghost guard and the per-neighbor conjunction is
/// equivalent to each disjunct, at every reachable intermediate state;
/// the intermediate and compiled diagrams have equal transition sets
/// under the state correspondence; the composed source/compiled
/// certificate verifies. Under 5 minutes per three-process program.
#[test]
fn criterion_4_expansion_correctness() {
    for name in CORPUS {
        let started = Instant::now();
        let (_, mq, marked, compiled) = compile_corpus(name);
        let ph2 = &compiled.phase2;
        let m = marked.structure();
        let k = ph2.vars.k;

        for f in &ph2.families {
            let u = m.state(f.u);
            let i = f.pid.0;
            let c = f.c.0;
            let partner = diagonal_partner(i);
            let dnf = &compiled.dnf_table[&(c, i)];
            let copy_owner = if c != i { c } else { partner };
            let bundles_per_disjunct: Vec<_> = dnf
                .disjuncts
                .iter()
                .map(|d| split_disjunct(d, i, partner))
                .collect();

            for (ri, r) in ph2.mp.states.iter().enumerate() {
                let lookup = |tv: pairnf::compile::dnf::TvRef| {
                    r.shared[ph2.vars.tv(tv.writer, tv.other, tv.comp)] as u8
                };
                let others_agree = (0..k)
                    .filter(|&j| j != i)
                    .all(|j| r.locals[j] == u.locals[j]);
                let copies_agree = u
                    .shared
                    .iter()
                    .enumerate()
                    .all(|(x, &val)| r.shared[ph2.vars.copy(x, c, i)] == val);

                // The ghost guard, minus the arc-start component.
                let ghost = ph2.last[ri].0 == c && others_agree && copies_agree;
                // Union of the per-disjunct guards.
                let split_union = dnf
                    .disjuncts
                    .iter()
                    .any(|d| d.eval(&lookup) && others_agree && copies_agree);
                assert_eq!(split_union, ghost, "{name}: guard disjunction");

                // Each disjunct equals the conjunction of its neighbor
                // bundles.
                for (d, bundles) in dnf.disjuncts.iter().zip(&bundles_per_disjunct) {
                    let whole = d.eval(&lookup) && others_agree && copies_agree;
                    let conj = (0..k).filter(|&j| j != i).all(|j| {
                        let lits_ok = bundles
                            .get(&j)
                            .map(|lits| lits.iter().all(|l| lookup(l.tv) == l.value))
                            .unwrap_or(true);
                        let stof_ok = r.locals[j] == u.locals[j];
                        let copies_ok = j != copy_owner || copies_agree;
                        lits_ok && stof_ok && copies_ok
                    });
                    assert_eq!(conj, whole, "{name}: per-neighbor split");
                }
            }
        }

        // Equal transition sets under the correspondence.
        compiled
            .phase3
            .check_identical(&ph2.vars, &ph2.mp, &compiled.mpp)
            .unwrap_or_else(|e| panic!("{name}: {e}"));

        // Composed certificate: source ~ compiled.
        let mut interner = ApInterner::default();
        let g_mq = StateGraph::of_structure(&mq, &mut interner);
        let g_marked = StateGraph::of_structure(m, &mut interner);
        let g_mpp = StateGraph::of_structure(&compiled.mpp, &mut interner);
        let r1 = compute_bisim(&g_mq, &g_marked).unwrap().unwrap().pairs;
        let r2 = ph2.build_join(&marked);
        let r3 = compiled.mp_mpp_pairs.clone();
        let composed = compose_relations(&compose_relations(&r1, &r2), &r3);
        check_relation(&g_mq, &g_mpp, &composed)
            .unwrap_or_else(|v| panic!("{name}: composed certificate: {}", v[0].detail));

        let took = started.elapsed();
        assert!(took < Duration::from_secs(300), "{name} took {took:?}");
    }
    pass(
        4,
        "guard splits exact, diagrams identical, composed certificates verified",
    );
}

/// Criterion 5: the validator accepts every compiled output and rejects
/// hand-built violations of the arc-shape, guard-reference and
/// action-reference conditions.
#[test]
fn criterion_5_pairwise_validation() {
    for name in CORPUS {
        let (_, _, _, compiled) = compile_corpus(name);
        let (ok, diags) = validate_pairwise(&compiled.program);
        assert!(ok, "{name}: {:?}", diags.first().map(|d| d.message.clone()));
    }

    // Arc shape: a plain source program fails condition 1; for two
    // processes the single shared variable still satisfies condition 2.
    let mutex = load_corpus("mutex2");
    let (ok, diags) = validate_pairwise(&mutex);
    assert!(!ok);
    assert!(diags.iter().any(|d| d.code == Code::PairwiseClause1));
    assert!(diags.iter().all(|d| d.code != Code::PairwiseClause2));

    // Guard reads another neighbor's proposition: condition 3.
    let clause3 = parse_program(&SourceUnit::inline(
        "program clause3bad\n\
         process A { props pa; state a0 { }; state a1 { pa };\n\
           arc a0 -> a1 sync with B { alt pc; } sync with C { alt; };\n\
           arc a1 -> a0 sync with B { alt; } sync with C { alt; }; }\n\
         process B { props pb; state b0 { }; state b1 { pb };\n\
           arc b0 -> b1 sync with A { alt; } sync with C { alt; };\n\
           arc b1 -> b0 sync with A { alt; } sync with C { alt; }; }\n\
         process C { props pc; state c0 { }; state c1 { pc };\n\
           arc c0 -> c1 sync with A { alt; } sync with B { alt; };\n\
           arc c1 -> c0 sync with A { alt; } sync with B { alt; }; }\n\
         init (a0 b0 c0);",
    ))
    .unwrap();
    let (ok, diags) = validate_pairwise(&clause3);
    assert!(!ok);
    assert!(diags.iter().any(|d| d.code == Code::PairwiseClause3));

    // Action updates a variable pinned to a different pair: condition 4.
    let clause4 = parse_program(&SourceUnit::inline(
        "program clause4bad\n\
         shared v : {0, 1} init 0;\n\
         process A { props pa; state a0 { }; state a1 { pa };\n\
           arc a0 -> a1 sync with B { alt v = 0; } sync with C { alt do v := 1; };\n\
           arc a1 -> a0 sync with B { alt; } sync with C { alt; }; }\n\
         process B { props pb; state b0 { }; state b1 { pb };\n\
           arc b0 -> b1 sync with A { alt; } sync with C { alt; };\n\
           arc b1 -> b0 sync with A { alt; } sync with C { alt; }; }\n\
         process C { props pc; state c0 { }; state c1 { pc };\n\
           arc c0 -> c1 sync with A { alt; } sync with B { alt; };\n\
           arc c1 -> c0 sync with A { alt; } sync with B { alt; }; }\n\
         init (a0 b0 c0);",
    ))
    .unwrap();
    let (ok, diags) = validate_pairwise(&clause4);
    assert!(!ok);
    assert!(diags.iter().any(|d| d.code == Code::PairwiseClause4));

    pass(
        5,
        "compiled outputs accepted; shape, guard and action violations rejected",
    );
}

/// Criterion 6: measured size accounting. The marked structure is at most
/// K times the source structure; the disjunct width is at most 3^(K-1);
/// each pre-expansion local state yields exactly 3^K expanded states.
#[test]
fn criterion_6_size_accounting() {
    for name in CORPUS {
        let (p, mq, marked, compiled) = compile_corpus(name);
        let k = p.k();
        let m = marked.structure();

        assert!(m.size() <= k * mq.size(), "{name}: size bound");
        assert!(m.n_states() <= k * mq.n_states(), "{name}: state bound");
        assert!(
            m.n_transitions() <= k * mq.n_transitions(),
            "{name}: transition bound"
        );
        assert!(
            compiled.stats.dnf_width_max <= 3usize.pow(k as u32 - 1),
            "{name}: width bound"
        );
        let pow3k = 3usize.pow(k as u32);
        for (i, (&base, &expanded)) in compiled
            .stats
            .base_locals
            .iter()
            .zip(&compiled.stats.expanded_locals)
            .enumerate()
        {
            assert_eq!(
                expanded,
                pow3k * base,
                "{name}: process {} expansion factor",
                i + 1
            );
        }

        // The same facts are reported and asserted in the stats report.
        let report = pairnf::stats::StatsReport {
            program: pairnf::stats::ProgramStats::of(&p),
            source_diagram: pairnf::stats::StructureStats::of(&mq),
            marked_diagram: pairnf::stats::StructureStats::of(m),
            intermediate_diagram: pairnf::stats::StructureStats::of(&compiled.phase2.mp),
            compiled_diagram: pairnf::stats::StructureStats::of(&compiled.mpp),
            compile: compiled.stats.clone(),
            bounds: pairnf::stats::bound_checks(
                k,
                &pairnf::stats::StructureStats::of(&mq),
                &pairnf::stats::StructureStats::of(m),
                &compiled.stats,
            ),
        };
        assert!(report.bounds_pass(), "{name}");
        assert!(report.to_json().contains("\"pass\": true"), "{name}");
    }
    pass(6, "size bounds hold and are asserted in the report");
}

/// Criterion 7: the explorer and the bisimulation checker match their
/// independent brute-force oracles on every corpus instance.
#[test]
fn criterion_7_oracle_equivalence() {
    for name in CORPUS {
        let p = load_corpus(name);
        let mq = build(&p);
        assert!(mq.n_states() <= 2000, "{name}: oracle scale");
        common::assert_gstd_matches_oracle(&p, &mq);

        let marked = transform(&mq);
        let mut interner = ApInterner::default();
        let g1 = StateGraph::of_structure(&mq, &mut interner);
        let g2 = StateGraph::of_structure(marked.structure(), &mut interner);
        let fast = compute_bisim(&g1, &g2).unwrap().unwrap();
        let (naive, covered) = naive_bisim(&g1, &g2);
        let fast_pairs: BTreeSet<(usize, usize)> = fast.pairs.iter().copied().collect();
        assert_eq!(fast_pairs, naive, "{name}: relation equality");
        assert_eq!(fast.certified, covered, "{name}: verdict equality");
    }

    // Also across the whole rewrite, where the right side is larger.
    for name in ["mutex2", "tokenring3"] {
        let (_, mq, _, compiled) = compile_corpus(name);
        let mut interner = ApInterner::default();
        let g1 = StateGraph::of_structure(&mq, &mut interner);
        let g2 = StateGraph::of_structure(&compiled.mpp, &mut interner);
        let fast = compute_bisim(&g1, &g2).unwrap().unwrap();
        let (naive, covered) = naive_bisim(&g1, &g2);
        let fast_pairs: BTreeSet<(usize, usize)> = fast.pairs.iter().copied().collect();
        assert_eq!(fast_pairs, naive, "{name}: relation equality");
        assert_eq!(fast.certified, covered, "{name}: verdict equality");
    }
    pass(7, "explorer and checker match the brute-force oracles");
}

/// Criterion 8: two pipeline runs produce byte-identical artifacts, and
/// print/parse is the identity on the corpus and on compiled outputs.
#[test]
fn criterion_8_determinism_and_roundtrips() {
    for name in ["toggle1", "mutex2", "tokenring3"] {
        let dirs = [
            std::env::temp_dir().join(format!("pairnf_acc8_{name}_a")),
            std::env::temp_dir().join(format!("pairnf_acc8_{name}_b")),
        ];
        for dir in &dirs {
            let _ = std::fs::remove_dir_all(dir);
            let cfg = PipelineConfig::new(common::corpus_dir().join(format!("{name}.skel")), dir);
            assert!(run_pipeline(&cfg).unwrap().ok(), "{name}");
        }
        let mut files: Vec<String> = std::fs::read_dir(&dirs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        files.sort();
        assert_eq!(files.len(), 10, "{name}: artifact count");
        for file in files {
            let a = std::fs::read(dirs[0].join(&file)).unwrap();
            let b = std::fs::read(dirs[1].join(&file)).unwrap();
            assert_eq!(a, b, "{name}: {file} differs between runs");
        }
        for dir in &dirs {
            let _ = std::fs::remove_dir_all(dir);
        }
    }

    for name in CORPUS {
        let p = load_corpus(name);
        let printed = print_program(&p);
        let again = parse_program(&SourceUnit::new(&printed, "<print>")).unwrap();
        assert_eq!(p, again, "{name}: source round-trip");

        let (_, _, _, compiled) = compile_corpus(name);
        let printed = print_program(&compiled.program);
        let again = parse_program(&SourceUnit::new(&printed, "<compiled>"))
            .unwrap_or_else(|d| panic!("{name}: {}", d[0]));
        assert_eq!(compiled.program, again, "{name}: compiled round-trip");
        assert_eq!(printed, print_program(&again), "{name}: stable print");
    }
    pass(
        8,
        "byte-identical artifacts; print/parse identity everywhere",
    );
}
