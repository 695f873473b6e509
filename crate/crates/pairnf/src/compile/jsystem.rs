//! Subsystem extraction: restricting a pairwise program to a sub-relation
//! of its interconnection relation. A pair-system keeps one pair, a
//! triple-system two adjacent pairs; each kept process retains only the
//! synchronization code for its kept neighbors.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{
    Action, ArcCommand, Expr, GlobalState, Guard, GuardedCommand, Operand, Pid, Process, Program,
    PropDef, PropId, SkeletonArc, SyncBlock, VarId,
};

use super::validate::attribute_vars;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JSystemError {
    #[error("the pair set is empty")]
    EmptyRange,
    #[error("invalid pair ({0}, {1}): indices are one-based, distinct, and at most K")]
    BadPair(usize, usize),
    #[error("processes {0} and {1} are not neighbors in this program")]
    NotNeighbors(usize, usize),
    #[error("the program is not in pairwise normal form: {0}")]
    NotPairwise(String),
}

/// Restricts `p` to the processes touched by `pairs` (one-based index
/// pairs). Every kept arc keeps exactly the sync blocks for kept
/// neighbors; variables belonging to dropped pairs disappear, and initial
/// states are projected accordingly (duplicates collapse). `p` must pass
/// the pairwise validator; restricting to the full relation returns a
/// program equal to `p`.
pub fn extract_j_system(p: &Program, pairs: &[(usize, usize)]) -> Result<Program, JSystemError> {
    let (ok, diags) = super::validate::validate_pairwise(p);
    if !ok {
        return Err(JSystemError::NotPairwise(
            diags
                .first()
                .map(|d| d.message.clone())
                .unwrap_or_else(|| "validation failed".to_string()),
        ));
    }
    let k = p.k();
    let mut j_rel: BTreeSet<(Pid, Pid)> = BTreeSet::new();
    for &(a, b) in pairs {
        if a == b || a == 0 || b == 0 || a > k || b > k {
            return Err(JSystemError::BadPair(a, b));
        }
        let (a, b) = (Pid(a - 1), Pid(b - 1));
        j_rel.insert((a.min(b), a.max(b)));
    }
    if j_rel.is_empty() {
        return Err(JSystemError::EmptyRange);
    }

    // The program's own interconnection relation, from its sync blocks.
    let mut i_rel: BTreeSet<(Pid, Pid)> = BTreeSet::new();
    for (i, proc) in p.processes.iter().enumerate() {
        for arc in &proc.arcs {
            let ArcCommand::Sync(blocks) = &arc.cmd else {
                unreachable!("plain arcs rejected by the validator")
            };
            for b in blocks {
                let (x, y) = (Pid(i).min(b.neighbor), Pid(i).max(b.neighbor));
                i_rel.insert((x, y));
            }
        }
    }
    for &(a, b) in &j_rel {
        if !i_rel.contains(&(a, b)) {
            return Err(JSystemError::NotNeighbors(a.number(), b.number()));
        }
    }

    let range: Vec<Pid> = (0..k)
        .map(Pid)
        .filter(|&i| j_rel.iter().any(|&(a, b)| a == i || b == i))
        .collect();
    let pid_map: BTreeMap<Pid, Pid> = range
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, Pid(new)))
        .collect();
    let neighbors_of = |i: Pid| -> BTreeSet<Pid> {
        j_rel
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    };

    // Kept propositions: those of kept processes.
    let mut prop_map: BTreeMap<PropId, PropId> = BTreeMap::new();
    let mut props: Vec<PropDef> = Vec::new();
    for (idx, def) in p.props.iter().enumerate() {
        if let Some(&new_owner) = pid_map.get(&def.owner) {
            prop_map.insert(PropId(idx as u32), PropId(props.len() as u32));
            props.push(PropDef {
                name: def.name.clone(),
                owner: new_owner,
            });
        }
    }

    // Kept variables: those attributed to a kept pair.
    let attribution = attribute_vars(p);
    let mut var_map: BTreeMap<VarId, VarId> = BTreeMap::new();
    let mut shared = Vec::new();
    for (idx, decl) in p.shared.iter().enumerate() {
        let var = VarId(idx as u32);
        if let Some(&(a, b)) = attribution.get(&var) {
            if j_rel.contains(&(a, b)) {
                var_map.insert(var, VarId(shared.len() as u32));
                shared.push(decl.clone());
            }
        }
    }

    let processes: Vec<Process> = range
        .iter()
        .map(|&old| {
            let proc = &p.processes[old.0];
            let keep = neighbors_of(old);
            let arcs = proc
                .arcs
                .iter()
                .map(|arc| {
                    let ArcCommand::Sync(blocks) = &arc.cmd else {
                        unreachable!("plain arcs rejected above")
                    };
                    let blocks = blocks
                        .iter()
                        .filter(|b| keep.contains(&b.neighbor))
                        .map(|b| SyncBlock {
                            neighbor: pid_map[&b.neighbor],
                            alts: b
                                .alts
                                .iter()
                                .map(|alt| GuardedCommand {
                                    guard: remap_guard(&alt.guard, &prop_map, &var_map),
                                    action: remap_action(&alt.action, &var_map),
                                })
                                .collect(),
                        })
                        .collect();
                    SkeletonArc {
                        from: arc.from,
                        to: arc.to,
                        cmd: ArcCommand::Sync(blocks),
                    }
                })
                .collect();
            // State valuations carry proposition ids and must be remapped
            // along with the declaration list.
            let states = proc
                .states
                .iter()
                .map(|st| crate::model::LocalState {
                    name: st.name.clone(),
                    props: st.props.iter().map(|pr| prop_map[pr]).collect(),
                    ts: st.ts.clone(),
                })
                .collect();
            Process {
                name: proc.name.clone(),
                props: proc.props.iter().map(|pr| prop_map[pr]).collect(),
                states,
                arcs,
            }
        })
        .collect();

    let mut initials: Vec<GlobalState> = Vec::new();
    for init in &p.initials {
        let projected = GlobalState {
            locals: range.iter().map(|&old| init.locals[old.0]).collect(),
            shared: (0..p.shared.len() as u32)
                .map(VarId)
                .filter(|v| var_map.contains_key(v))
                .map(|v| init.shared[v.0 as usize])
                .collect(),
            mark: None,
        };
        if !initials.contains(&projected) {
            initials.push(projected);
        }
    }

    Ok(Program {
        name: p.name.clone(),
        props,
        shared,
        processes,
        initials,
    })
}

fn remap_guard(
    g: &Guard,
    prop_map: &BTreeMap<PropId, PropId>,
    var_map: &BTreeMap<VarId, VarId>,
) -> Guard {
    match g {
        Guard::True => Guard::True,
        Guard::Prop(p) => Guard::Prop(prop_map[p]),
        Guard::Not(inner) => Guard::not(remap_guard(inner, prop_map, var_map)),
        Guard::And(a, b) => Guard::And(
            Box::new(remap_guard(a, prop_map, var_map)),
            Box::new(remap_guard(b, prop_map, var_map)),
        ),
        Guard::Or(a, b) => Guard::Or(
            Box::new(remap_guard(a, prop_map, var_map)),
            Box::new(remap_guard(b, prop_map, var_map)),
        ),
        Guard::Cmp(v, op, rhs) => Guard::Cmp(
            var_map[v],
            *op,
            match rhs {
                Operand::Const(c) => Operand::Const(*c),
                Operand::Var(w) => Operand::Var(var_map[w]),
            },
        ),
    }
}

fn remap_action(a: &Action, var_map: &BTreeMap<VarId, VarId>) -> Action {
    Action {
        assigns: a
            .assigns
            .iter()
            .map(|(v, e)| (var_map[v], remap_expr(e, var_map)))
            .collect(),
    }
}

fn remap_expr(e: &Expr, var_map: &BTreeMap<VarId, VarId>) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(*c),
        Expr::Var(v) => Expr::Var(var_map[v]),
        Expr::Add(a, b) => Expr::Add(
            Box::new(remap_expr(a, var_map)),
            Box::new(remap_expr(b, var_map)),
        ),
        Expr::Sub(a, b) => Expr::Sub(
            Box::new(remap_expr(a, var_map)),
            Box::new(remap_expr(b, var_map)),
        ),
    }
}
