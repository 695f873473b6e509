//! Synthesis of a pairwise-normal-form program from a marked structure,
//! in two steps: first an emulating program whose guards still consult
//! the timestamp-derived `last` ghost (its state diagram is built
//! explicitly), then the local-state expansion that relocates timestamps
//! into the local states and splits every guard into per-neighbor
//! conjuncts. The two diagrams are checked to be identical under the
//! evident correspondence.

pub mod dnf;
pub mod jsystem;
pub mod phase2;
pub mod phase3;
pub mod validate;
pub mod vars;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::gstd::{BuildError, KripkeStructure, Vocab};
use crate::model::{LocalId, Program};
use crate::transform::MarkedStructure;

use dnf::{expand_dnf, DnfGuard};
use phase2::{build_phase2, Phase2};
use phase3::{build_mpp, expand_local_states, Phase3};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(
        "a single-process program with shared variables has no pairwise \
         form (there is no second process to share them with)"
    )]
    SingleProcessWithVariables,
    #[error("at most 9 processes are supported by the compiled naming scheme")]
    TooManyProcesses,
    #[error(
        "local state `{state}` of process {process} occurs in the marked \
         structure but the process never moves from it; the compiled \
         skeleton would contain a dead end"
    )]
    DeadEndInCompiled { process: String, state: String },
    #[error("arc budget exceeded: expansion needs {arcs} arcs, budget is {budget}")]
    ArcBudgetExceeded { arcs: usize, budget: usize },
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy)]
pub struct CompileOptions {
    pub state_budget: usize,
    pub arc_budget: usize,
    pub prune_unreachable: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            state_budget: 1_000_000,
            arc_budget: 1_000_000,
            prune_unreachable: true,
        }
    }
}

/// Size accounting of one compilation, including the bound checks.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CompileStats {
    pub k: usize,
    pub families: usize,
    pub dnf_width_max: usize,
    /// 3^(K-1), the per-family disjunct bound.
    pub dnf_width_bound: usize,
    /// Per process: local states occurring in the marked structure.
    pub base_locals: Vec<usize>,
    /// Per process: expanded local states before pruning (3^K per base).
    pub expanded_locals: Vec<usize>,
    /// Per process: local states in the emitted program.
    pub emitted_locals: Vec<usize>,
    pub arcs_full: usize,
    pub arcs_emitted: usize,
}

/// Everything the compiler produces for one program.
#[derive(Debug)]
pub struct Compiled {
    pub phase2: Phase2,
    pub phase3: Phase3,
    /// The emitted program (pruned unless pruning is disabled).
    pub program: Program,
    pub mpp: KripkeStructure,
    /// State correspondence (intermediate index, compiled index).
    pub mp_mpp_pairs: Vec<(usize, usize)>,
    pub dnf_table: BTreeMap<(usize, usize), DnfGuard>,
    pub stats: CompileStats,
}

/// Compiles `source`, already marked, into pairwise normal form.
pub fn compile(
    source: &Program,
    marked: &MarkedStructure,
    opts: &CompileOptions,
) -> Result<Compiled, CompileError> {
    let k = source.k();
    if k > 9 {
        return Err(CompileError::TooManyProcesses);
    }
    if k == 1 && !source.shared.is_empty() {
        return Err(CompileError::SingleProcessWithVariables);
    }

    // Every local state occurring in the marked structure must have an
    // outgoing move somewhere, or the compiled skeleton would violate the
    // no-dead-end constraint.
    let m = marked.structure();
    let mut moving: Vec<BTreeSet<LocalId>> = vec![BTreeSet::new(); k];
    for &(u, pid, _) in &m.transitions {
        moving[pid.0].insert(m.state(u).locals[pid.0]);
    }
    for s in &m.states {
        for (i, &l) in s.locals.iter().enumerate() {
            if !moving[i].contains(&l) {
                return Err(CompileError::DeadEndInCompiled {
                    process: source.processes[i].name.clone(),
                    state: source.processes[i].states[l.0 as usize].name.clone(),
                });
            }
        }
    }

    let source_vocab = Vocab::of_program(source);
    let ph2 = build_phase2(&source_vocab, marked, opts.state_budget)?;
    ph2.check_invariants(marked)
        .map_err(CompileError::Internal)?;

    let mut dnf_table: BTreeMap<(usize, usize), DnfGuard> = BTreeMap::new();
    for f in &ph2.families {
        dnf_table
            .entry((f.c.0, f.pid.0))
            .or_insert_with(|| expand_dnf(f.c.0, f.pid.0, k));
    }

    let ph3 = expand_local_states(source, marked, &ph2, &dnf_table, opts.arc_budget)?;
    let mpp = build_mpp(&ph3.program, opts.state_budget)?;
    let mp_mpp_pairs = ph3.check_identical(&ph2.vars, &ph2.mp, &mpp)?;

    let pruned = ph3.prune_unreachable(&mpp);
    let program = if opts.prune_unreachable {
        pruned
    } else {
        ph3.program.clone()
    };

    let stats = CompileStats {
        k,
        families: ph2.families.len(),
        dnf_width_max: ph3.dnf_width_max,
        dnf_width_bound: 3usize.pow(k.saturating_sub(1) as u32),
        base_locals: ph3.bases.iter().map(|b| b.len()).collect(),
        expanded_locals: ph3
            .program
            .processes
            .iter()
            .map(|p| p.states.len())
            .collect(),
        emitted_locals: program.processes.iter().map(|p| p.states.len()).collect(),
        arcs_full: ph3.arc_count,
        arcs_emitted: program.processes.iter().map(|p| p.arcs.len()).sum(),
    };

    Ok(Compiled {
        phase2: ph2,
        phase3: ph3,
        program,
        mpp,
        mp_mpp_pairs,
        dnf_table,
        stats,
    })
}
