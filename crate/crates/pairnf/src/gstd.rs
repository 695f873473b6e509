//! Global state transition diagrams: forward-reachable Kripke structures
//! under interleaving semantics, with canonical state keys.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::model::{
    apply_action, enabled_selections, GlobalState, LocalId, ModelError, Pid, Program, PropId,
};

/// Index of a state within one structure. States are stored sorted by
/// canonical key, so ids are stable across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

/// Name tables needed to render states of a structure: proposition names
/// and owners, shared-variable names, and per-process local-state info.
/// Structures built from different vocabularies are never mixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub prop_names: Vec<String>,
    pub prop_owner: Vec<Pid>,
    pub var_names: Vec<String>,
    /// Per process, per local state: (name, valuation).
    pub locals: Vec<Vec<(String, BTreeSet<PropId>)>>,
    pub proc_names: Vec<String>,
}

impl Vocab {
    pub fn of_program(p: &Program) -> Vocab {
        Vocab {
            prop_names: p.props.iter().map(|d| d.name.clone()).collect(),
            prop_owner: p.props.iter().map(|d| d.owner).collect(),
            var_names: p.shared.iter().map(|v| v.name.clone()).collect(),
            locals: p
                .processes
                .iter()
                .map(|proc| {
                    proc.states
                        .iter()
                        .map(|s| (s.name.clone(), s.props.clone()))
                        .collect()
                })
                .collect(),
            proc_names: p.processes.iter().map(|p| p.name.clone()).collect(),
        }
    }

    pub fn n_procs(&self) -> usize {
        self.locals.len()
    }

    /// The set of true proposition names in `s`, sorted.
    pub fn ap_projection(&self, s: &GlobalState) -> Vec<&str> {
        let mut names: Vec<&str> = s
            .locals
            .iter()
            .enumerate()
            .flat_map(|(pid, local)| {
                self.locals[pid][local.0 as usize]
                    .1
                    .iter()
                    .map(|p| self.prop_names[p.0 as usize].as_str())
            })
            .collect();
        names.sort_unstable();
        names
    }

    /// Canonical key: AP projection, shared valuation and mark, rendered
    /// as `ap{..} sh{..} mark=<i|->`. Injective on the states of one
    /// structure.
    pub fn key(&self, s: &GlobalState) -> String {
        let ap = self.ap_projection(s).join(" ");
        let mut sh: Vec<(String, i64)> = self
            .var_names
            .iter()
            .cloned()
            .zip(s.shared.iter().copied())
            .collect();
        sh.sort();
        let sh = sh
            .iter()
            .map(|(n, v)| format!("{}={}", n, v))
            .collect::<Vec<_>>()
            .join(" ");
        let mark = match s.mark {
            None => "-".to_string(),
            Some(pid) => pid.to_string(),
        };
        format!("ap{{{}}} sh{{{}}} mark={}", ap, sh, mark)
    }
}

/// A Kripke structure: reachable global states, initial states, and the
/// process-indexed transition relation. States are sorted by canonical
/// key; no state has a self-transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeStructure {
    pub vocab: Arc<Vocab>,
    pub states: Vec<GlobalState>,
    pub keys: Vec<String>,
    pub initials: Vec<StateId>,
    pub transitions: BTreeSet<(StateId, Pid, StateId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("state budget exceeded: more than {budget} reachable states")]
    StateSpaceBudgetExceeded { budget: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("distinct states share canonical key `{key}`")]
    StateKeyCollision { key: String },
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub state_budget: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            state_budget: 1_000_000,
        }
    }
}

impl KripkeStructure {
    /// Assembles a structure from explicit parts, sorting states by key
    /// and checking key injectivity.
    pub fn assemble(
        vocab: Arc<Vocab>,
        states: Vec<GlobalState>,
        initials: Vec<GlobalState>,
        transitions: impl IntoIterator<Item = (GlobalState, Pid, GlobalState)>,
    ) -> Result<KripkeStructure, BuildError> {
        let mut keyed: Vec<(String, GlobalState)> =
            states.into_iter().map(|s| (vocab.key(&s), s)).collect();
        keyed.sort();
        for w in keyed.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(BuildError::StateKeyCollision {
                    key: w[0].0.clone(),
                });
            }
        }
        let index: HashMap<GlobalState, StateId> = keyed
            .iter()
            .enumerate()
            .map(|(i, (_, s))| (s.clone(), StateId(i as u32)))
            .collect();
        let lookup = |s: &GlobalState| -> StateId {
            *index.get(s).expect("transition endpoint not in state set")
        };
        let mut initial_ids: Vec<StateId> = initials.iter().map(&lookup).collect();
        initial_ids.sort_unstable();
        initial_ids.dedup();
        let transitions = transitions
            .into_iter()
            .map(|(a, pid, b)| (lookup(&a), pid, lookup(&b)))
            .collect();
        let (keys, states) = keyed.into_iter().unzip();
        Ok(KripkeStructure {
            vocab,
            states,
            keys,
            initials: initial_ids,
            transitions,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    /// States plus transitions, the usual size measure.
    pub fn size(&self) -> usize {
        self.n_states() + self.n_transitions()
    }

    pub fn state(&self, id: StateId) -> &GlobalState {
        &self.states[id.0 as usize]
    }

    pub fn key(&self, id: StateId) -> &str {
        &self.keys[id.0 as usize]
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn successors(&self, id: StateId) -> impl Iterator<Item = (Pid, StateId)> + '_ {
        self.transitions
            .range((id, Pid(0), StateId(0))..=(id, Pid(usize::MAX), StateId(u32::MAX)))
            .map(|&(_, pid, to)| (pid, to))
    }

    /// Process indices labeling the incoming transitions of `id`.
    pub fn in_procs(&self, id: StateId) -> Result<BTreeSet<Pid>, UnknownState> {
        if id.0 as usize >= self.states.len() {
            return Err(UnknownState(id.0));
        }
        Ok(self
            .transitions
            .iter()
            .filter(|&&(_, _, to)| to == id)
            .map(|&(_, pid, _)| pid)
            .collect())
    }

    /// True iff every state has at most one incoming process index.
    pub fn unique_incoming(&self) -> bool {
        let mut seen: HashMap<StateId, Pid> = HashMap::new();
        for &(_, pid, to) in &self.transitions {
            if let Some(prev) = seen.insert(to, pid) {
                if prev != pid {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_out_degree(&self) -> usize {
        let mut deg: HashMap<StateId, usize> = HashMap::new();
        for &(from, _, _) in &self.transitions {
            *deg.entry(from).or_default() += 1;
        }
        deg.values().copied().max().unwrap_or(0)
    }

    /// Every state is reachable from the initial states.
    pub fn is_reachability_closed(&self) -> bool {
        let mut seen = vec![false; self.states.len()];
        let mut queue: VecDeque<StateId> = self.initials.iter().copied().collect();
        for &i in &self.initials {
            seen[i.0 as usize] = true;
        }
        while let Some(s) = queue.pop_front() {
            for (_, t) in self.successors(s) {
                if !seen[t.0 as usize] {
                    seen[t.0 as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unknown state id {0}")]
pub struct UnknownState(pub u32);

/// Builds the GSTD of `prog` by forward reachability: the smallest set of
/// states containing the initials and closed under the next-state
/// relation, with transitions labeled by the executing process.
pub fn build_gstd(prog: &Program, opts: &BuildOptions) -> Result<KripkeStructure, BuildError> {
    let vocab = Arc::new(Vocab::of_program(prog));
    let mut index: HashMap<GlobalState, u32> = HashMap::new();
    let mut states: Vec<GlobalState> = Vec::new();
    let mut transitions: Vec<(u32, Pid, u32)> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();

    for init in &prog.initials {
        if !index.contains_key(init) {
            let id = states.len() as u32;
            index.insert(init.clone(), id);
            states.push(init.clone());
            queue.push_back(id);
        }
    }

    // Arcs indexed by source local state, per process.
    let arcs_from: Vec<Vec<Vec<usize>>> = prog
        .processes
        .iter()
        .map(|proc| {
            let mut by_from = vec![Vec::new(); proc.states.len()];
            for (idx, arc) in proc.arcs.iter().enumerate() {
                by_from[arc.from.0 as usize].push(idx);
            }
            by_from
        })
        .collect();

    while let Some(id) = queue.pop_front() {
        let current = states[id as usize].clone();
        for (pid, proc) in prog.processes.iter().enumerate() {
            let pid = Pid(pid);
            let here: LocalId = current.locals[pid.0];
            for &arc_idx in &arcs_from[pid.0][here.0 as usize] {
                let arc = &proc.arcs[arc_idx];
                for sel in enabled_selections(prog, &current, &arc.cmd)? {
                    let shared = apply_action(prog, &current, &sel.action)?;
                    let mut next = current.clone();
                    next.locals[pid.0] = arc.to;
                    next.shared = shared;
                    let next_id = match index.get(&next) {
                        Some(&i) => i,
                        None => {
                            let i = states.len() as u32;
                            if states.len() >= opts.state_budget {
                                return Err(BuildError::StateSpaceBudgetExceeded {
                                    budget: opts.state_budget,
                                });
                            }
                            index.insert(next.clone(), i);
                            states.push(next);
                            queue.push_back(i);
                            i
                        }
                    };
                    debug_assert_ne!(id, next_id, "no global state has a self loop");
                    transitions.push((id, pid, next_id));
                }
            }
        }
    }

    let transitions = transitions
        .into_iter()
        .map(|(a, pid, b)| (states[a as usize].clone(), pid, states[b as usize].clone()))
        .collect::<Vec<_>>();
    KripkeStructure::assemble(vocab, states, prog.initials.clone(), transitions)
}

/// Emits the structure as a Graphviz digraph: nodes labeled with their
/// canonical key, edges with the executing process index, initial states
/// double-framed. Output is deterministic.
pub fn export_dot(m: &KripkeStructure) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("digraph gstd {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    for id in m.state_ids() {
        let key = m.key(id);
        let label = key
            .replacen(" sh{", "\\nsh{", 1)
            .replacen(" mark=", "\\nmark=", 1);
        let style = if m.initials.contains(&id) {
            ", peripheries=2"
        } else {
            ""
        };
        let _ = writeln!(out, "  s{} [label=\"{}\"{}];", id.0, label, style);
    }
    for &(from, pid, to) in &m.transitions {
        let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", from.0, to.0, pid);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, SourceUnit};

    fn toggle() -> Program {
        parse_program(&SourceUnit::inline(
            "program t\nprocess P1 { props on; state off { }; state lit { on }; \
             arc off -> lit; arc lit -> off; }\ninit (off);",
        ))
        .unwrap()
    }

    #[test]
    fn toggle_has_two_states_two_transitions() {
        let m = build_gstd(&toggle(), &BuildOptions::default()).unwrap();
        assert_eq!(m.n_states(), 2);
        assert_eq!(m.n_transitions(), 2);
        assert!(m.is_reachability_closed());
        assert!(m.unique_incoming());
    }

    #[test]
    fn blocked_program_stays_at_initials() {
        let p = parse_program(&SourceUnit::inline(
            "program stuck\nprocess P1 { props on; state off { }; state lit { on }; \
             arc off -> lit when on & !on; arc lit -> off; }\ninit (off);",
        ))
        .unwrap();
        let m = build_gstd(&p, &BuildOptions::default()).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.n_transitions(), 0);
        let init = m.initials[0];
        assert!(m.in_procs(init).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let err = build_gstd(&toggle(), &BuildOptions { state_budget: 1 }).unwrap_err();
        assert_eq!(err, BuildError::StateSpaceBudgetExceeded { budget: 1 });
    }

    #[test]
    fn single_process_predecessors_are_labeled_one() {
        let m = build_gstd(&toggle(), &BuildOptions::default()).unwrap();
        for id in m.state_ids() {
            let inc = m.in_procs(id).unwrap();
            assert!(inc.len() == 1 && inc.contains(&Pid(0)));
        }
    }

    #[test]
    fn dot_export_lists_every_state_and_edge() {
        let m = build_gstd(&toggle(), &BuildOptions::default()).unwrap();
        let dot = export_dot(&m);
        assert_eq!(dot.matches("label=\"ap{").count(), m.n_states());
        assert_eq!(dot.matches(" -> ").count(), m.n_transitions());
        assert_eq!(dot.matches("label=\"1\"").count(), 2);

        let empty = build_gstd(
            &parse_program(&SourceUnit::inline(
                "program stuck\nprocess P1 { props on; state off { }; state lit { on }; \
                 arc off -> lit when on & !on; arc lit -> off; }\ninit (off);",
            ))
            .unwrap(),
            &BuildOptions::default(),
        )
        .unwrap();
        assert!(!export_dot(&empty).contains("->"));
    }

    #[test]
    fn determinism_two_runs_identical() {
        let a = build_gstd(&toggle(), &BuildOptions::default()).unwrap();
        let b = build_gstd(&toggle(), &BuildOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(export_dot(&a), export_dot(&b));
    }
}
