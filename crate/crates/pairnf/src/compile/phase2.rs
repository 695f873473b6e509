//! Extraction of the emulating program from the marked structure: one arc
//! family per transition, synthesized initial states, and the explicit
//! construction of its global state transition diagram. The `last` ghost
//! is never materialized as a variable; it is derived from the timestamps
//! wherever needed.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::gstd::{BuildError, KripkeStructure, StateId, Vocab};
use crate::model::{GlobalState, Pid};
use crate::timestamps::{gt_o, step, Ts};
use crate::transform::MarkedStructure;

use super::vars::VarTable;
use super::CompileError;

/// One arc family, generated from transition (u, i, v) of the marked
/// structure. Its guard requires: process i sits in u's local state, the
/// whole state agrees with u on atomic propositions, the last process to
/// execute is c = mark(u), and c's copies hold u's shared values. Its
/// action steps i's timestamps past everyone else's, republishes i's
/// timestamp vectors, and writes v's shared values into i's copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcFamily {
    pub pid: Pid,
    pub u: StateId,
    pub v: StateId,
    pub c: Pid,
}

/// Phase-two output: the arc families, the synthesized initial states,
/// and the fully built intermediate structure.
#[derive(Debug)]
pub struct Phase2 {
    pub vars: VarTable,
    pub families: Vec<ArcFamily>,
    pub mp: KripkeStructure,
    /// For each mp state, the ghost `last` derived from its timestamps.
    pub last: Vec<Pid>,
}

/// The ghost `last`: the unique process more recent than every other one
/// under the cyclic timestamp order, if any.
pub fn last_of(vars: &VarTable, shared: &[i64]) -> Option<Pid> {
    let k = vars.k;
    let mut found = None;
    for i in 0..k {
        let wins = (0..k)
            .filter(|&j| j != i)
            .all(|j| gt_o(shared[vars.t(i, j)] as Ts, shared[vars.t(j, i)] as Ts));
        if wins {
            if found.is_some() {
                return None;
            }
            found = Some(Pid(i));
        }
    }
    found
}

/// Initial timestamps for a state whose (possibly conventional) incoming
/// index is `c`: c's entries read 1 against everyone, everyone reads 0
/// against c. The remaining entries are free; they are fixed so that
/// every compared pair (t_i^j, t_j^i) is unequal, keeping the timestamp
/// advance defined on all reachable states.
fn initial_t(i: usize, j: usize, c: usize) -> Ts {
    if i == j {
        0
    } else if i == c {
        1
    } else if j == c {
        0
    } else if i < j {
        1
    } else {
        0
    }
}

/// One initial state of the emulating program per marked initial state:
/// matching propositions, all copies holding the source values, the
/// timestamp table for c = mark, and vectors equal to the timestamps.
pub fn synth_initial_states(marked: &MarkedStructure, vars: &VarTable) -> Vec<GlobalState> {
    let m = marked.structure();
    m.initials
        .iter()
        .map(|&u0| {
            let u = m.state(u0);
            let c = marked.mark(u0).0;
            let mut shared = vec![0i64; vars.len()];
            for (x, &val) in u.shared.iter().enumerate() {
                for i in 0..vars.k {
                    for j in 0..vars.k {
                        shared[vars.copy(x, i, j)] = val;
                    }
                }
            }
            for i in 0..vars.k {
                for j in 0..vars.k {
                    shared[vars.t(i, j)] = initial_t(i, j, c) as i64;
                }
            }
            for i in 0..vars.k {
                for j in 0..vars.k {
                    for comp in 0..vars.k {
                        shared[vars.tv(i, j, comp)] = shared[vars.t(i, comp)];
                    }
                }
            }
            GlobalState {
                locals: u.locals.clone(),
                shared,
                mark: None,
            }
        })
        .collect()
}

/// The symbolic form of one family's guard and action. The `last_is`
/// conjunct stands for the ghost comparison, never a real variable; the
/// other fields spell out the proposition conjuncts, the copy checks
/// against the last writer, and the three action groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcSpec {
    pub pid: Pid,
    pub from: crate::model::LocalId,
    pub to: crate::model::LocalId,
    /// Ghost conjunct: the last process to execute must be this one.
    pub last_is: Pid,
    /// Proposition conjuncts: the local state required of every other
    /// process.
    pub neighbor_locals: Vec<(Pid, crate::model::LocalId)>,
    /// For every source variable, the value the last writer's copy
    /// readable by `pid` must hold.
    pub copy_checks: Vec<i64>,
    /// The executor advances its timestamp against each of these.
    pub stepped_against: Vec<Pid>,
    /// For every source variable, the value written into all of the
    /// executor's copies (vectors are republished alongside).
    pub copy_writes: Vec<i64>,
}

/// Spells out the guard and action synthesized for one transition.
pub fn synth_arc(marked: &MarkedStructure, f: &ArcFamily) -> ArcSpec {
    let m = marked.structure();
    let u = m.state(f.u);
    let v = m.state(f.v);
    let k = u.locals.len();
    let i = f.pid.0;
    ArcSpec {
        pid: f.pid,
        from: u.locals[i],
        to: v.locals[i],
        last_is: f.c,
        neighbor_locals: (0..k)
            .filter(|&j| j != i)
            .map(|j| (Pid(j), u.locals[j]))
            .collect(),
        copy_checks: u.shared.clone(),
        stepped_against: (0..k).filter(|&j| j != i).map(Pid).collect(),
        copy_writes: v.shared.clone(),
    }
}

/// Whether family `f` is enabled in state `r`, per its synthesized guard.
pub fn family_enabled(
    marked: &MarkedStructure,
    vars: &VarTable,
    f: &ArcFamily,
    r: &GlobalState,
    r_last: Option<Pid>,
) -> bool {
    let u = marked.structure().state(f.u);
    // Local agreement on u covers both the arc's start state and the
    // proposition conjunct over the other processes (local states are
    // determined by their valuations).
    if r.locals != u.locals {
        return false;
    }
    if r_last != Some(f.c) {
        return false;
    }
    let c = f.c.0;
    let i = f.pid.0;
    u.shared
        .iter()
        .enumerate()
        .all(|(x, &val)| r.shared[vars.copy(x, c, i)] == val)
}

/// Executes family `f` in state `r`. Errors only if two compared
/// timestamps are equal, which the initial tables make unreachable.
pub fn family_fire(
    marked: &MarkedStructure,
    vars: &VarTable,
    f: &ArcFamily,
    r: &GlobalState,
) -> Result<GlobalState, CompileError> {
    let v = marked.structure().state(f.v);
    let i = f.pid.0;
    let mut shared = r.shared.clone();
    for j in 0..vars.k {
        if j == i {
            continue;
        }
        let t_ij = r.shared[vars.t(i, j)] as Ts;
        let read = r.shared[vars.tv(j, i, i)] as Ts;
        let stepped = step(t_ij, read).map_err(|e| {
            CompileError::Internal(format!(
                "timestamp advance between P{} and P{}: {e}",
                i + 1,
                j + 1
            ))
        })?;
        shared[vars.t(i, j)] = stepped as i64;
    }
    for j in 0..vars.k {
        for comp in 0..vars.k {
            shared[vars.tv(i, j, comp)] = shared[vars.t(i, comp)];
        }
    }
    for (x, &val) in v.shared.iter().enumerate() {
        for j in 0..vars.k {
            shared[vars.copy(x, i, j)] = val;
        }
    }
    let mut locals = r.locals.clone();
    locals[i] = v.locals[i];
    Ok(GlobalState {
        locals,
        shared,
        mark: None,
    })
}

/// Builds the arc families and the intermediate structure by forward
/// reachability from the synthesized initial states.
pub fn build_phase2(
    source_vocab: &Vocab,
    marked: &MarkedStructure,
    state_budget: usize,
) -> Result<Phase2, CompileError> {
    let m = marked.structure();
    let k = source_vocab.n_procs();
    let vars = VarTable::new(k, source_vocab.var_names.len());

    let families: Vec<ArcFamily> = m
        .transitions
        .iter()
        .map(|&(u, pid, v)| ArcFamily {
            pid,
            u,
            v,
            c: marked.mark(u),
        })
        .collect();

    let vocab = Arc::new(Vocab {
        prop_names: source_vocab.prop_names.clone(),
        prop_owner: source_vocab.prop_owner.clone(),
        var_names: vars.names(&source_vocab.var_names),
        locals: source_vocab.locals.clone(),
        proc_names: source_vocab.proc_names.clone(),
    });

    let initials = synth_initial_states(marked, &vars);
    let mut index: HashMap<GlobalState, u32> = HashMap::new();
    let mut states: Vec<GlobalState> = Vec::new();
    let mut transitions: Vec<(u32, Pid, u32)> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();
    for init in &initials {
        if !index.contains_key(init) {
            let id = states.len() as u32;
            index.insert(init.clone(), id);
            states.push(init.clone());
            queue.push_back(id);
        }
    }
    while let Some(id) = queue.pop_front() {
        let current = states[id as usize].clone();
        let current_last = last_of(&vars, &current.shared);
        for f in &families {
            if !family_enabled(marked, &vars, f, &current, current_last) {
                continue;
            }
            let next = family_fire(marked, &vars, f, &current)?;
            let next_id = match index.get(&next) {
                Some(&i) => i,
                None => {
                    let i = states.len() as u32;
                    if states.len() >= state_budget {
                        return Err(CompileError::Build(BuildError::StateSpaceBudgetExceeded {
                            budget: state_budget,
                        }));
                    }
                    index.insert(next.clone(), i);
                    states.push(next);
                    queue.push_back(i);
                    i
                }
            };
            transitions.push((id, f.pid, next_id));
        }
    }

    let transitions: Vec<(GlobalState, Pid, GlobalState)> = transitions
        .into_iter()
        .map(|(a, pid, b)| (states[a as usize].clone(), pid, states[b as usize].clone()))
        .collect();
    let mp = KripkeStructure::assemble(vocab, states, initials, transitions)
        .map_err(CompileError::Build)?;

    let last = mp
        .states
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            last_of(&vars, &s.shared).ok_or_else(|| {
                CompileError::Internal(format!("no unique last process at state {}", mp.keys[idx]))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Phase2 {
        vars,
        families,
        mp,
        last,
    })
}

impl Phase2 {
    /// Checks the three state invariants at every reachable state, and
    /// the consistency of the timestamp-derived `last` with the
    /// operational one (incoming transition labels, and the mark of the
    /// originating initial state).
    pub fn check_invariants(&self, marked: &MarkedStructure) -> Result<(), String> {
        let k = self.vars.k;
        for (idx, s) in self.mp.states.iter().enumerate() {
            // (1) Vector components mirror the writer's timestamps.
            for i in 0..k {
                for j in 0..k {
                    for comp in 0..k {
                        if comp == i {
                            continue;
                        }
                        if s.shared[self.vars.tv(i, j, comp)] != s.shared[self.vars.t(i, comp)] {
                            return Err(format!(
                                "tv mirror broken at {} (i={i}, j={j}, k={comp})",
                                self.mp.keys[idx]
                            ));
                        }
                    }
                }
            }
            // (2) Exactly one process is more recent than all others.
            let l = self.last[idx];
            for i in 0..k {
                let wins = (0..k).filter(|&j| j != i).all(|j| {
                    gt_o(
                        s.shared[self.vars.t(i, j)] as Ts,
                        s.shared[self.vars.t(j, i)] as Ts,
                    )
                });
                if wins != (Pid(i) == l) {
                    return Err(format!(
                        "last-characterization broken at {} for P{}",
                        self.mp.keys[idx],
                        i + 1
                    ));
                }
            }
            // (3) All copies written by one process agree.
            for x in 0..self.vars.n_source {
                for i in 0..k {
                    let v0 = s.shared[self.vars.copy(x, i, 0)];
                    for j in 1..k {
                        if s.shared[self.vars.copy(x, i, j)] != v0 {
                            return Err(format!(
                                "copy agreement broken at {} (x={x}, writer={i})",
                                self.mp.keys[idx]
                            ));
                        }
                    }
                }
            }
        }
        // Operational consistency of the ghost.
        for &(_, pid, to) in &self.mp.transitions {
            if self.last[to.0 as usize] != pid {
                return Err(format!(
                    "executing P{} did not become last at {}",
                    pid,
                    self.mp.key(to)
                ));
            }
        }
        let inits = synth_initial_states(marked, &self.vars);
        for (u0, r0) in marked.structure().initials.iter().zip(&inits) {
            let idx = self
                .mp
                .states
                .iter()
                .position(|s| s == r0)
                .expect("initial state present");
            if self.last[idx] != marked.mark(*u0) {
                return Err(format!(
                    "initial-state last does not match the mark of {}",
                    marked.structure().key(*u0)
                ));
            }
        }
        Ok(())
    }

    /// The emulation relation: all pairs (u, r) with matching atomic
    /// propositions, in(u) equal to r's ghost `last`, and the last
    /// writer's copies holding u's shared values.
    pub fn build_join(&self, marked: &MarkedStructure) -> Vec<(usize, usize)> {
        let m = marked.structure();
        let mut pairs = Vec::new();
        for (ui, u) in m.states.iter().enumerate() {
            let mark = marked.mark(StateId(ui as u32));
            for (ri, r) in self.mp.states.iter().enumerate() {
                // Equal AP projections: local states are determined by
                // their valuations, so compare the local tuples.
                if r.locals != u.locals {
                    continue;
                }
                if self.last[ri] != mark {
                    continue;
                }
                let c = mark.0;
                let agree = u.shared.iter().enumerate().all(|(x, &val)| {
                    (0..self.vars.k).all(|i| r.shared[self.vars.copy(x, c, i)] == val)
                });
                if agree {
                    pairs.push((ui, ri));
                }
            }
        }
        pairs
    }
}
