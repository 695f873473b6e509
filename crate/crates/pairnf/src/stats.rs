//! Machine-readable reports: per-stage structure sizes and the size
//! accounting bound checks. Reports are deterministic; wall-clock timings
//! are returned separately so serialized artifacts stay byte-identical
//! across runs.

use serde::Serialize;

use crate::compile::CompileStats;
use crate::gstd::KripkeStructure;
use crate::model::Program;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProgramStats {
    pub name: String,
    pub processes: usize,
    pub propositions: usize,
    pub shared_variables: usize,
    pub local_states: Vec<usize>,
    pub arcs: Vec<usize>,
    /// Maximum branching in the local state transition relation.
    pub max_branching: usize,
}

impl ProgramStats {
    pub fn of(p: &Program) -> ProgramStats {
        ProgramStats {
            name: p.name.clone(),
            processes: p.k(),
            propositions: p.props.len(),
            shared_variables: p.shared.len(),
            local_states: p.processes.iter().map(|x| x.states.len()).collect(),
            arcs: p.processes.iter().map(|x| x.arcs.len()).collect(),
            max_branching: p.max_branching(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureStats {
    pub states: usize,
    pub transitions: usize,
    /// states + transitions.
    pub size: usize,
    pub max_out_degree: usize,
    pub initials: usize,
}

impl StructureStats {
    pub fn of(m: &KripkeStructure) -> StructureStats {
        StructureStats {
            states: m.n_states(),
            transitions: m.n_transitions(),
            size: m.size(),
            max_out_degree: m.max_out_degree(),
            initials: m.initials.len(),
        }
    }
}

/// A measured quantity against its bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundCheck {
    pub description: String,
    pub measured: usize,
    pub bound: usize,
    /// Whether the bound is an equality rather than an upper bound.
    pub exact: bool,
    pub pass: bool,
}

impl BoundCheck {
    pub fn at_most(description: impl Into<String>, measured: usize, bound: usize) -> BoundCheck {
        BoundCheck {
            description: description.into(),
            measured,
            bound,
            exact: false,
            pass: measured <= bound,
        }
    }

    pub fn exactly(description: impl Into<String>, measured: usize, bound: usize) -> BoundCheck {
        BoundCheck {
            description: description.into(),
            measured,
            bound,
            exact: true,
            pass: measured == bound,
        }
    }
}

/// The full pipeline report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsReport {
    pub program: ProgramStats,
    pub source_diagram: StructureStats,
    pub marked_diagram: StructureStats,
    pub intermediate_diagram: StructureStats,
    pub compiled_diagram: StructureStats,
    pub compile: CompileStats,
    pub bounds: Vec<BoundCheck>,
}

impl StatsReport {
    pub fn bounds_pass(&self) -> bool {
        self.bounds.iter().all(|b| b.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Assembles the bound checks: marked size at most K times the source
/// size, disjunct width at most 3^(K-1), and exactly 3^K expanded local
/// states per pre-expansion local state.
pub fn bound_checks(
    k: usize,
    mq: &StructureStats,
    marked: &StructureStats,
    compile: &CompileStats,
) -> Vec<BoundCheck> {
    let mut out = vec![
        BoundCheck::at_most(
            "marked structure size at most K times the source structure size",
            marked.size,
            k * mq.size,
        ),
        BoundCheck::at_most(
            "DNF width per arc family at most 3^(K-1)",
            compile.dnf_width_max,
            compile.dnf_width_bound,
        ),
    ];
    let pow3k = 3usize.pow(k as u32);
    for (i, (&base, &expanded)) in compile
        .base_locals
        .iter()
        .zip(&compile.expanded_locals)
        .enumerate()
    {
        out.push(BoundCheck::exactly(
            format!(
                "process {} expanded local states equal 3^K per pre-expansion state",
                i + 1
            ),
            expanded,
            pow3k * base,
        ));
    }
    out
}
