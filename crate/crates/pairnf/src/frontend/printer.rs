//! Canonical pretty-printer. `parse(print(p))` is structurally identical
//! to `p`, and printing is deterministic, so printed artifacts are stable
//! across runs.

use std::fmt::Write;

use crate::model::{Action, ArcCommand, CmpOp, Expr, Guard, GuardedCommand, Operand, Program};

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "program {}", p.name);
    out.push('\n');
    if !p.shared.is_empty() {
        for v in &p.shared {
            let domain = v
                .domain
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "shared {} : {{{}}} init {};", v.name, domain, v.init);
        }
        out.push('\n');
    }
    for proc in &p.processes {
        let _ = writeln!(out, "process {} {{", proc.name);
        if !proc.props.is_empty() {
            let names = proc
                .props
                .iter()
                .map(|id| p.props[id.0 as usize].name.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(out, "  props {};", names);
        }
        for st in &proc.states {
            let names = st
                .props
                .iter()
                .map(|id| p.props[id.0 as usize].name.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let body = if names.is_empty() {
                "{ }".to_string()
            } else {
                format!("{{ {} }}", names)
            };
            match &st.ts {
                None => {
                    let _ = writeln!(out, "  state {} {};", st.name, body);
                }
                Some(ts) => {
                    let tuple = ts
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join(", ");
                    let _ = writeln!(out, "  state {} {} ts ({});", st.name, body, tuple);
                }
            }
        }
        for arc in &proc.arcs {
            let from = &proc.states[arc.from.0 as usize].name;
            let to = &proc.states[arc.to.0 as usize].name;
            let mut line = format!("  arc {} -> {}", from, to);
            match &arc.cmd {
                ArcCommand::Plain(gc) => {
                    if gc.guard != Guard::True {
                        line.push_str(" when ");
                        line.push_str(&print_guard(p, &gc.guard));
                    }
                    if !gc.action.is_skip() {
                        line.push_str(" do ");
                        line.push_str(&print_action(p, &gc.action));
                    }
                }
                ArcCommand::Sync(blocks) if blocks.is_empty() => {
                    line.push_str(" sync");
                }
                ArcCommand::Sync(blocks) => {
                    for b in blocks {
                        let _ = write!(line, " sync with {} {{", p.processes[b.neighbor.0].name);
                        for alt in &b.alts {
                            line.push_str(" alt");
                            let GuardedCommand { guard, action } = alt;
                            if *guard != Guard::True {
                                line.push(' ');
                                line.push_str(&print_guard(p, guard));
                            }
                            if !action.is_skip() {
                                line.push_str(" do ");
                                line.push_str(&print_action(p, action));
                            }
                            line.push(';');
                        }
                        line.push_str(" }");
                    }
                }
            }
            line.push(';');
            let _ = writeln!(out, "{}", line);
        }
        let _ = writeln!(out, "}}");
        out.push('\n');
    }
    for init in &p.initials {
        let locals = init
            .locals
            .iter()
            .enumerate()
            .map(|(i, id)| p.processes[i].states[id.0 as usize].name.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        if p.shared.is_empty() {
            let _ = writeln!(out, "init ({});", locals);
        } else {
            let vals = p
                .shared
                .iter()
                .zip(&init.shared)
                .map(|(v, val)| format!("{}={}", v.name, val))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "init ({} ; {});", locals, vals);
        }
    }
    out
}

// Precedence levels: Or = 0, And = 1, unary/atom = 2.
fn print_guard(p: &Program, g: &Guard) -> String {
    print_guard_prec(p, g, 0)
}

fn print_guard_prec(p: &Program, g: &Guard, min: u8) -> String {
    match g {
        Guard::True => "true".to_string(),
        Guard::Prop(id) => p.props[id.0 as usize].name.clone(),
        Guard::Not(inner) => format!("!{}", print_guard_prec(p, inner, 2)),
        Guard::And(a, b) => {
            let s = format!(
                "{} & {}",
                print_guard_prec(p, a, 1),
                print_guard_prec(p, b, 1)
            );
            if min > 1 {
                format!("({})", s)
            } else {
                s
            }
        }
        Guard::Or(a, b) => {
            let s = format!(
                "{} | {}",
                print_guard_prec(p, a, 0),
                print_guard_prec(p, b, 0)
            );
            if min > 0 {
                format!("({})", s)
            } else {
                s
            }
        }
        Guard::Cmp(v, op, rhs) => {
            let rhs = match rhs {
                Operand::Const(c) => c.to_string(),
                Operand::Var(w) => p.shared[w.0 as usize].name.clone(),
            };
            format!("{} {} {}", p.shared[v.0 as usize].name, op_symbol(*op), rhs)
        }
    }
}

fn op_symbol(op: CmpOp) -> &'static str {
    op.symbol()
}

fn print_action(p: &Program, a: &Action) -> String {
    if a.is_skip() {
        return "skip".to_string();
    }
    a.assigns
        .iter()
        .map(|(v, e)| format!("{} := {}", p.shared[v.0 as usize].name, print_expr(p, e)))
        .collect::<Vec<_>>()
        .join(" || ")
}

fn print_expr(p: &Program, e: &Expr) -> String {
    match e {
        Expr::Const(c) => c.to_string(),
        Expr::Var(v) => p.shared[v.0 as usize].name.clone(),
        Expr::Add(a, b) => format!("{} + {}", print_expr(p, a), print_term(p, b)),
        Expr::Sub(a, b) => format!("{} - {}", print_expr(p, a), print_term(p, b)),
    }
}

// Right operands of +/- are parenthesized when composite, keeping the
// printed form unambiguous under left-associative parsing.
fn print_term(p: &Program, e: &Expr) -> String {
    match e {
        Expr::Add(..) | Expr::Sub(..) => format!("({})", print_expr(p, e)),
        _ => print_expr(p, e),
    }
}
