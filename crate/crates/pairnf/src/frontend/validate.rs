//! Name resolution plus enforcement of the model constraints: disjoint
//! proposition sets, distinct local-state valuations, no self-loops, no
//! dead ends, conflict-free actions, well-formed initial states.

use std::collections::{BTreeMap, BTreeSet};

use super::parser::{
    RawArcCommand, RawExpr, RawGuard, RawGuardedCommand, RawInit, RawOperand, RawProgram,
};
use super::{Code, Diagnostic, Loc, SourceUnit};
use crate::model::{
    Action, ArcCommand, Expr, GlobalState, Guard, GuardedCommand, LocalState, Operand, Pid,
    Process, Program, PropDef, PropId, SharedVar, SkeletonArc, SyncBlock, VarId,
};

struct Cx<'a> {
    origin: &'a str,
    diags: Vec<Diagnostic>,
    prop_ids: BTreeMap<String, PropId>,
    var_ids: BTreeMap<String, VarId>,
    proc_ids: BTreeMap<String, Pid>,
}

impl<'a> Cx<'a> {
    fn error(&mut self, loc: Loc, code: Code, msg: impl Into<String>) {
        self.diags
            .push(Diagnostic::error(self.origin, loc, code, msg));
    }
}

pub fn resolve_and_validate(src: &SourceUnit, raw: RawProgram) -> Result<Program, Vec<Diagnostic>> {
    let mut cx = Cx {
        origin: &src.origin,
        diags: Vec::new(),
        prop_ids: BTreeMap::new(),
        var_ids: BTreeMap::new(),
        proc_ids: BTreeMap::new(),
    };

    // Shared variables.
    let mut shared: Vec<SharedVar> = Vec::new();
    for decl in &raw.shared {
        if cx.var_ids.contains_key(&decl.name.name) {
            cx.error(
                decl.name.loc,
                Code::DuplicateVariable,
                format!("shared variable `{}` declared twice", decl.name.name),
            );
            continue;
        }
        let mut domain = decl.domain.clone();
        domain.sort_unstable();
        domain.dedup();
        if domain.len() != decl.domain.len() {
            cx.error(
                decl.name.loc,
                Code::BadDomain,
                format!("domain of `{}` lists a value twice", decl.name.name),
            );
        }
        if domain.is_empty() {
            cx.error(
                decl.name.loc,
                Code::BadDomain,
                format!("domain of `{}` is empty", decl.name.name),
            );
        }
        if !domain.contains(&decl.init) {
            cx.error(
                decl.name.loc,
                Code::BadDomain,
                format!(
                    "default initial value {} of `{}` is outside its domain",
                    decl.init, decl.name.name
                ),
            );
        }
        cx.var_ids
            .insert(decl.name.name.clone(), VarId(shared.len() as u32));
        shared.push(SharedVar {
            name: decl.name.name.clone(),
            domain,
            init: decl.init,
        });
    }

    // Process names first, so sync blocks can refer forwards.
    for (i, p) in raw.processes.iter().enumerate() {
        if cx.proc_ids.insert(p.name.name.clone(), Pid(i)).is_some() {
            cx.error(
                p.name.loc,
                Code::DuplicateProcess,
                format!("process `{}` declared twice", p.name.name),
            );
        }
    }
    if raw.processes.is_empty() {
        cx.error(raw.end, Code::SyntaxError, "program declares no processes");
    }

    // Global proposition table; ownership is a function.
    let mut props: Vec<PropDef> = Vec::new();
    let mut proc_props: Vec<Vec<PropId>> = Vec::new();
    for (i, p) in raw.processes.iter().enumerate() {
        let mut own = Vec::new();
        for decl in &p.props {
            if let Some(prev) = cx.prop_ids.get(&decl.name) {
                let owner = props[prev.0 as usize].owner;
                let msg = if owner == Pid(i) {
                    format!("proposition `{}` declared twice", decl.name)
                } else {
                    format!(
                        "proposition `{}` already owned by process {}; proposition sets must be disjoint",
                        decl.name,
                        raw.processes[owner.0].name.name
                    )
                };
                cx.error(decl.loc, Code::DuplicateProposition, msg);
                continue;
            }
            if cx.var_ids.contains_key(&decl.name) {
                cx.error(
                    decl.loc,
                    Code::DuplicateProposition,
                    format!("`{}` is already a shared variable name", decl.name),
                );
                continue;
            }
            let id = PropId(props.len() as u32);
            cx.prop_ids.insert(decl.name.clone(), id);
            props.push(PropDef {
                name: decl.name.clone(),
                owner: Pid(i),
            });
            own.push(id);
        }
        proc_props.push(own);
    }

    // Local states.
    let mut processes: Vec<Process> = Vec::new();
    for (i, p) in raw.processes.iter().enumerate() {
        let mut states: Vec<LocalState> = Vec::new();
        let mut names: BTreeMap<&str, Loc> = BTreeMap::new();
        for st in &p.states {
            if names.insert(&st.name.name, st.name.loc).is_some() {
                cx.error(
                    st.name.loc,
                    Code::DuplicateState,
                    format!("state `{}` declared twice in this process", st.name.name),
                );
                continue;
            }
            let mut valuation: BTreeSet<PropId> = BTreeSet::new();
            for pr in &st.props {
                match cx.prop_ids.get(&pr.name) {
                    Some(id) if props[id.0 as usize].owner == Pid(i) => {
                        valuation.insert(*id);
                    }
                    Some(_) => cx.error(
                        pr.loc,
                        Code::UndeclaredSymbol,
                        format!("proposition `{}` is not owned by this process", pr.name),
                    ),
                    None => cx.error(
                        pr.loc,
                        Code::UndeclaredSymbol,
                        format!("unknown proposition `{}`", pr.name),
                    ),
                }
            }
            // Tuple length is not tied to the process count: subsystem
            // restrictions keep the original tuples on their states.
            let ts = match &st.ts {
                None => None,
                Some((tuple, loc)) => {
                    if tuple.is_empty() || tuple.iter().any(|&d| !(0..=2).contains(&d)) {
                        cx.error(
                            *loc,
                            Code::BadTimestampTuple,
                            "timestamp tuple components must be values in 0..=2",
                        );
                        None
                    } else {
                        Some(tuple.iter().map(|&d| d as u8).collect())
                    }
                }
            };
            // Distinct states must differ in valuation (or timestamp tuple).
            if let Some(dup) = states
                .iter()
                .find(|other| other.props == valuation && other.ts == ts)
            {
                cx.error(
                    st.name.loc,
                    Code::IndistinctLocalStates,
                    format!(
                        "state `{}` carries the same valuation as state `{}`",
                        st.name.name, dup.name
                    ),
                );
            }
            states.push(LocalState {
                name: st.name.name.clone(),
                props: valuation,
                ts,
            });
        }
        processes.push(Process {
            name: p.name.name.clone(),
            props: proc_props[i].clone(),
            states,
            arcs: Vec::new(),
        });
    }

    // Arcs.
    for (i, p) in raw.processes.iter().enumerate() {
        let mut arcs = Vec::new();
        for arc in &p.arcs {
            let from = processes[i].state_by_name(&arc.from.name);
            let to = processes[i].state_by_name(&arc.to.name);
            if from.is_none() {
                cx.error(
                    arc.from.loc,
                    Code::UndeclaredSymbol,
                    format!("unknown state `{}`", arc.from.name),
                );
            }
            if to.is_none() {
                cx.error(
                    arc.to.loc,
                    Code::UndeclaredSymbol,
                    format!("unknown state `{}`", arc.to.name),
                );
            }
            let (Some(from), Some(to)) = (from, to) else {
                continue;
            };
            if from == to {
                cx.error(
                    arc.loc,
                    Code::SelfLoop,
                    format!("arc `{0} -> {0}` is a self-loop", arc.from.name),
                );
                continue;
            }
            let cmd = match &arc.cmd {
                RawArcCommand::Plain(gc) => ArcCommand::Plain(resolve_gc(&mut cx, gc)),
                RawArcCommand::Sync(blocks) => {
                    let mut out = Vec::new();
                    let mut seen: BTreeSet<Pid> = BTreeSet::new();
                    for b in blocks {
                        let Some(&pid) = cx.proc_ids.get(&b.neighbor.name) else {
                            cx.error(
                                b.neighbor.loc,
                                Code::UndeclaredSymbol,
                                format!("unknown process `{}`", b.neighbor.name),
                            );
                            continue;
                        };
                        if pid == Pid(i) {
                            cx.error(
                                b.neighbor.loc,
                                Code::BadSyncBlock,
                                "a process cannot synchronize with itself",
                            );
                            continue;
                        }
                        if !seen.insert(pid) {
                            cx.error(
                                b.neighbor.loc,
                                Code::BadSyncBlock,
                                format!("duplicate sync block for `{}`", b.neighbor.name),
                            );
                            continue;
                        }
                        if b.alts.is_empty() {
                            cx.error(
                                b.neighbor.loc,
                                Code::BadSyncBlock,
                                "sync block has no alternatives",
                            );
                            continue;
                        }
                        out.push(SyncBlock {
                            neighbor: pid,
                            alts: b.alts.iter().map(|a| resolve_gc(&mut cx, a)).collect(),
                        });
                    }
                    // Conflict-freedom across simultaneously executed blocks:
                    // no two alternatives of distinct blocks write one variable.
                    for (bi, b1) in out.iter().enumerate() {
                        for b2 in out.iter().skip(bi + 1) {
                            for a1 in &b1.alts {
                                for a2 in &b2.alts {
                                    let t1 = a1.action.targets();
                                    let t2 = a2.action.targets();
                                    if let Some(v) = t1.intersection(&t2).next() {
                                        cx.error(
                                            arc.loc,
                                            Code::ConflictingWrites,
                                            format!(
                                                "sync blocks both assign `{}`",
                                                shared[v.0 as usize].name
                                            ),
                                        );
                                    }
                                }
                            }
                        }
                    }
                    ArcCommand::Sync(out)
                }
            };
            arcs.push(SkeletonArc { from, to, cmd });
        }
        processes[i].arcs = arcs;
    }

    // No dead ends: every local state has at least one outgoing arc.
    for (i, proc) in processes.iter().enumerate() {
        for (s, st) in proc.states.iter().enumerate() {
            if !proc.arcs.iter().any(|a| a.from.0 as usize == s) {
                let loc = raw.processes[i]
                    .states
                    .iter()
                    .find(|r| r.name.name == st.name)
                    .map(|r| r.name.loc)
                    .unwrap_or_default();
                cx.error(
                    loc,
                    Code::DeadEndState,
                    format!("state `{}` has no outgoing arc", st.name),
                );
            }
        }
        if proc.states.is_empty() {
            cx.error(
                raw.processes[i].name.loc,
                Code::DeadEndState,
                format!("process `{}` has no local states", proc.name),
            );
        }
    }

    // Initial states.
    let mut initials: Vec<GlobalState> = Vec::new();
    if raw.initials.is_empty() {
        cx.error(
            raw.end,
            Code::BadInitialState,
            "program declares no initial states",
        );
    }
    for init in &raw.initials {
        if let Some(state) = resolve_init(&mut cx, init, &processes, &shared) {
            if !initials.contains(&state) {
                initials.push(state);
            }
        }
    }

    if cx.diags.is_empty() {
        Ok(Program {
            name: raw.name,
            props,
            shared,
            processes,
            initials,
        })
    } else {
        Err(cx.diags)
    }
}

fn resolve_init(
    cx: &mut Cx<'_>,
    init: &RawInit,
    processes: &[Process],
    shared: &[SharedVar],
) -> Option<GlobalState> {
    if init.locals.len() != processes.len() {
        cx.error(
            init.loc,
            Code::BadInitialState,
            format!(
                "initial state lists {} local states but the program has {} processes",
                init.locals.len(),
                processes.len()
            ),
        );
        return None;
    }
    let mut locals = Vec::new();
    for (i, name) in init.locals.iter().enumerate() {
        match processes[i].state_by_name(&name.name) {
            Some(id) => locals.push(id),
            None => {
                cx.error(
                    name.loc,
                    Code::BadInitialState,
                    format!(
                        "process `{}` has no state `{}`",
                        processes[i].name, name.name
                    ),
                );
                return None;
            }
        }
    }
    let mut vals: Vec<i64> = shared.iter().map(|v| v.init).collect();
    let mut set: BTreeSet<VarId> = BTreeSet::new();
    for (name, v) in &init.vals {
        let Some(&id) = cx.var_ids.get(&name.name) else {
            cx.error(
                name.loc,
                Code::UndeclaredSymbol,
                format!("unknown shared variable `{}`", name.name),
            );
            return None;
        };
        if !set.insert(id) {
            cx.error(
                name.loc,
                Code::BadInitialState,
                format!("`{}` assigned twice in one initial state", name.name),
            );
            return None;
        }
        if !shared[id.0 as usize].contains(*v) {
            cx.error(
                name.loc,
                Code::BadInitialState,
                format!("value {} is outside the domain of `{}`", v, name.name),
            );
            return None;
        }
        vals[id.0 as usize] = *v;
    }
    Some(GlobalState {
        locals,
        shared: vals,
        mark: None,
    })
}

fn resolve_gc(cx: &mut Cx<'_>, gc: &RawGuardedCommand) -> GuardedCommand {
    let guard = match &gc.guard {
        None => Guard::True,
        Some(g) => resolve_guard(cx, g),
    };
    let action = match &gc.action {
        None => Action::skip(),
        Some(assigns) => {
            let mut out = Vec::new();
            let mut seen: BTreeSet<VarId> = BTreeSet::new();
            for a in assigns {
                let Some(&target) = cx.var_ids.get(&a.target.name) else {
                    cx.error(
                        a.target.loc,
                        Code::UndeclaredSymbol,
                        format!("unknown shared variable `{}`", a.target.name),
                    );
                    continue;
                };
                if !seen.insert(target) {
                    cx.error(
                        a.target.loc,
                        Code::ConflictingWrites,
                        format!("`{}` assigned twice in one action", a.target.name),
                    );
                    continue;
                }
                out.push((target, resolve_expr(cx, &a.expr)));
            }
            Action { assigns: out }
        }
    };
    GuardedCommand { guard, action }
}

fn resolve_guard(cx: &mut Cx<'_>, g: &RawGuard) -> Guard {
    match g {
        RawGuard::True => Guard::True,
        RawGuard::Atom(name) => match cx.prop_ids.get(&name.name) {
            Some(&id) => Guard::Prop(id),
            None => {
                let msg = if cx.var_ids.contains_key(&name.name) {
                    format!(
                        "`{}` is a shared variable; a bare guard atom must be a proposition",
                        name.name
                    )
                } else {
                    format!("unknown proposition `{}`", name.name)
                };
                cx.error(name.loc, Code::UndeclaredSymbol, msg);
                Guard::True
            }
        },
        RawGuard::Not(g) => Guard::not(resolve_guard(cx, g)),
        RawGuard::And(a, b) => Guard::And(
            Box::new(resolve_guard(cx, a)),
            Box::new(resolve_guard(cx, b)),
        ),
        RawGuard::Or(a, b) => Guard::Or(
            Box::new(resolve_guard(cx, a)),
            Box::new(resolve_guard(cx, b)),
        ),
        RawGuard::Cmp(lhs, op, rhs) => {
            let Some(&var) = cx.var_ids.get(&lhs.name) else {
                cx.error(
                    lhs.loc,
                    Code::UndeclaredSymbol,
                    format!("unknown shared variable `{}`", lhs.name),
                );
                return Guard::True;
            };
            let rhs = match rhs {
                RawOperand::Const(c) => Operand::Const(*c),
                RawOperand::Name(name) => match cx.var_ids.get(&name.name) {
                    Some(&id) => Operand::Var(id),
                    None => {
                        cx.error(
                            name.loc,
                            Code::UndeclaredSymbol,
                            format!("unknown shared variable `{}`", name.name),
                        );
                        Operand::Const(0)
                    }
                },
            };
            Guard::Cmp(var, *op, rhs)
        }
    }
}

fn resolve_expr(cx: &mut Cx<'_>, e: &RawExpr) -> Expr {
    match e {
        RawExpr::Const(c) => Expr::Const(*c),
        RawExpr::Name(name) => match cx.var_ids.get(&name.name) {
            Some(&id) => Expr::Var(id),
            None => {
                cx.error(
                    name.loc,
                    Code::UndeclaredSymbol,
                    format!("unknown shared variable `{}`", name.name),
                );
                Expr::Const(0)
            }
        },
        RawExpr::Add(a, b) => {
            Expr::Add(Box::new(resolve_expr(cx, a)), Box::new(resolve_expr(cx, b)))
        }
        RawExpr::Sub(a, b) => {
            Expr::Sub(Box::new(resolve_expr(cx, a)), Box::new(resolve_expr(cx, b)))
        }
    }
}
