//! Shared helpers for the integration and acceptance suites: corpus
//! loading plus independent oracles (naive product exploration, the
//! closed form of the unique-incoming split, and a greatest-fixpoint
//! bisimulation) that the main implementations are checked against.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use pairnf::bisim::StateGraph;
use pairnf::frontend::{parse_program, SourceUnit};
use pairnf::gstd::KripkeStructure;
use pairnf::model::{apply_action, enabled_branches, GlobalState, Pid, Program};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("corpus")
}

pub const CORPUS: [&str; 8] = [
    "toggle1",
    "cycle3",
    "mutex2",
    "startup2",
    "prodcons2",
    "tokenring3",
    "toggles3",
    "mix3",
];

pub fn load_corpus(name: &str) -> Program {
    let path = corpus_dir().join(format!("{name}.skel"));
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    parse_program(&SourceUnit::new(text, path.display().to_string()))
        .unwrap_or_else(|diags| panic!("{name} failed to parse: {}", diags[0]))
}

/// Naive product exploration by depth-first recursion over raw states.
/// No canonical keys, no worklist ordering, no budget: an independent
/// route to the same reachable set and relation.
pub struct NaiveGstd {
    pub states: HashSet<GlobalState>,
    pub transitions: HashSet<(GlobalState, Pid, GlobalState)>,
}

pub fn naive_gstd(prog: &Program) -> NaiveGstd {
    let mut out = NaiveGstd {
        states: HashSet::new(),
        transitions: HashSet::new(),
    };
    let mut stack: Vec<GlobalState> = Vec::new();
    for init in &prog.initials {
        if out.states.insert(init.clone()) {
            stack.push(init.clone());
        }
    }
    while let Some(s) = stack.pop() {
        for (pid, proc) in prog.processes.iter().enumerate() {
            for arc in &proc.arcs {
                if arc.from != s.locals[pid] {
                    continue;
                }
                for sel in enabled_branches(prog, &s, &arc.cmd.to_ggc()).unwrap() {
                    let shared = apply_action(prog, &s, &sel.action).unwrap();
                    let mut next = s.clone();
                    next.locals[pid] = arc.to;
                    next.shared = shared;
                    out.transitions.insert((s.clone(), Pid(pid), next.clone()));
                    if out.states.insert(next.clone()) {
                        stack.push(next);
                    }
                }
            }
        }
    }
    out
}

/// Predecessor labels per state, from the naive exploration.
pub fn naive_in_procs(n: &NaiveGstd) -> HashMap<GlobalState, BTreeSet<Pid>> {
    let mut map: HashMap<GlobalState, BTreeSet<Pid>> = HashMap::new();
    for s in &n.states {
        map.entry(s.clone()).or_default();
    }
    for (_, pid, to) in &n.transitions {
        map.entry(to.clone()).or_default().insert(*pid);
    }
    map
}

/// The unique-incoming split in closed form: state s with incoming label
/// set L, |L| > 1, becomes one copy per label; incoming transitions are
/// redirected by label, outgoing ones are replicated to every copy. The
/// iterative procedure must produce exactly this, because splitting one
/// state never changes any other state's incoming label set.
pub struct ClosedFormSplit {
    /// (ap/sh content carrier, mark) pairs for expected states.
    pub states: BTreeSet<GlobalState>,
    pub initials: BTreeSet<GlobalState>,
    pub transitions: BTreeSet<(GlobalState, Pid, GlobalState)>,
}

pub fn closed_form_transform(m: &KripkeStructure) -> ClosedFormSplit {
    use pairnf::gstd::StateId;
    let in_labels = |id: StateId| -> BTreeSet<Pid> { m.in_procs(id).unwrap() };
    // Copies of each state: per incoming label when splitting, otherwise
    // the unique label, or process 1 for sources.
    let copies = |id: StateId| -> Vec<(Pid, GlobalState)> {
        let labels = in_labels(id);
        let marks: Vec<Pid> = match labels.len() {
            0 => vec![Pid(0)],
            _ => labels.into_iter().collect(),
        };
        marks
            .into_iter()
            .map(|mark| {
                let mut s = m.state(id).clone();
                s.mark = Some(mark);
                (mark, s)
            })
            .collect()
    };

    let mut states = BTreeSet::new();
    let mut initials = BTreeSet::new();
    for id in m.state_ids() {
        for (_, s) in copies(id) {
            if m.initials.contains(&id) {
                initials.insert(s.clone());
            }
            states.insert(s);
        }
    }
    let mut transitions = BTreeSet::new();
    for &(from, pid, to) in &m.transitions {
        // Target: the copy whose mark matches the label. Source: every copy.
        let target = copies(to)
            .into_iter()
            .find(|(mark, _)| *mark == pid)
            .map(|(_, s)| s)
            .expect("incoming label has a copy");
        for (_, src) in copies(from) {
            transitions.insert((src.clone(), pid, target.clone()));
        }
    }
    ClosedFormSplit {
        states,
        initials,
        transitions,
    }
}

/// Greatest-fixpoint strong bisimulation: start from all AP-equal pairs
/// and delete violating pairs until stable. Returns the relation and the
/// certification verdict.
pub fn naive_bisim(g1: &StateGraph, g2: &StateGraph) -> (BTreeSet<(usize, usize)>, bool) {
    let mut rel: BTreeSet<(usize, usize)> = BTreeSet::new();
    for s in 0..g1.n() {
        for t in 0..g2.n() {
            if g1.ap[s] == g2.ap[t] {
                rel.insert((s, t));
            }
        }
    }
    loop {
        let keep: BTreeSet<(usize, usize)> = rel
            .iter()
            .copied()
            .filter(|&(s, t)| {
                let fwd = g1.succs[s].iter().all(|&(pid, u)| {
                    g2.succs[t]
                        .iter()
                        .any(|&(pid2, u2)| pid2 == pid && rel.contains(&(u, u2)))
                });
                let bwd = g2.succs[t].iter().all(|&(pid, u2)| {
                    g1.succs[s]
                        .iter()
                        .any(|&(pid1, u)| pid1 == pid && rel.contains(&(u, u2)))
                });
                fwd && bwd
            })
            .collect();
        if keep == rel {
            break;
        }
        rel = keep;
    }
    let covered = g1
        .initials
        .iter()
        .all(|&s| g2.initials.iter().any(|&t| rel.contains(&(s, t))))
        && g2
            .initials
            .iter()
            .all(|&t| g1.initials.iter().any(|&s| rel.contains(&(s, t))));
    (rel, covered)
}

/// Key-level comparison of the main explorer against the naive oracle.
pub fn assert_gstd_matches_oracle(prog: &Program, m: &KripkeStructure) {
    let oracle = naive_gstd(prog);
    assert_eq!(m.n_states(), oracle.states.len(), "state count");
    assert_eq!(m.n_transitions(), oracle.transitions.len(), "transitions");
    let index: BTreeMap<&GlobalState, usize> =
        m.states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    for s in &oracle.states {
        assert!(index.contains_key(s), "oracle state missing from builder");
    }
    for (from, pid, to) in &oracle.transitions {
        let f = pairnf::gstd::StateId(index[from] as u32);
        let t = pairnf::gstd::StateId(index[to] as u32);
        assert!(
            m.transitions.contains(&(f, *pid, t)),
            "oracle transition missing from builder"
        );
    }
}
