//! Domain types for programs, states, guards and actions, plus their
//! evaluation semantics. Everything downstream (state-space construction,
//! the normal-form compiler, the bisimulation checker) speaks these types.
//!
//! All values are immutable after construction and every operation here is
//! a pure function.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Process index. Stored zero-based, displayed one-based (`P1`, `P2`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pid(pub usize);

impl Pid {
    /// One-based number as used in surface syntax and reports.
    pub fn number(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Index into [`Program::props`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(pub u32);

/// Index into [`Program::shared`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// Index into [`Process::states`] of the owning process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalId(pub u32);

/// An atomic proposition together with the process that owns (writes) it.
/// Proposition sets of distinct processes are disjoint, so names are
/// globally unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropDef {
    pub name: String,
    pub owner: Pid,
}

/// A shared variable over a finite, non-empty integer domain. `init` is the
/// default value used by initial states that do not set the variable
/// explicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedVar {
    pub name: String,
    pub domain: Vec<i64>,
    pub init: i64,
}

impl SharedVar {
    pub fn contains(&self, v: i64) -> bool {
        self.domain.contains(&v)
    }
}

/// A local state of one process: its name, the subset of the owner's
/// propositions that hold in it, and (for compiled programs only) the
/// timestamp tuple baked into the state. Within one process, distinct
/// states must differ in `props` or in `ts`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalState {
    pub name: String,
    pub props: BTreeSet<PropId>,
    pub ts: Option<Vec<u8>>,
}

/// Comparison operator in guard atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CmpOp {
    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

/// Right-hand side of a comparison atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Const(i64),
    Var(VarId),
}

/// A predicate on global states: proposition literals and integer
/// comparisons, closed under conjunction, disjunction and negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    True,
    Prop(PropId),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Cmp(VarId, CmpOp, Operand),
}

impl Guard {
    /// Conjunction of `parts`, mapping the empty list to `true` and
    /// avoiding a dangling `true &` prefix otherwise.
    pub fn conj(parts: Vec<Guard>) -> Guard {
        let mut parts = parts.into_iter();
        match parts.next() {
            None => Guard::True,
            Some(first) => parts.fold(first, |acc, g| Guard::And(Box::new(acc), Box::new(g))),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Guard) -> Guard {
        Guard::Not(Box::new(g))
    }

    /// All proposition ids referenced by the guard.
    pub fn props(&self, out: &mut BTreeSet<PropId>) {
        match self {
            Guard::True => {}
            Guard::Prop(p) => {
                out.insert(*p);
            }
            Guard::Not(g) => g.props(out),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.props(out);
                b.props(out);
            }
            Guard::Cmp(..) => {}
        }
    }

    /// All shared-variable ids referenced by the guard.
    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Guard::True | Guard::Prop(_) => {}
            Guard::Not(g) => g.vars(out),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Guard::Cmp(v, _, rhs) => {
                out.insert(*v);
                if let Operand::Var(w) = rhs {
                    out.insert(*w);
                }
            }
        }
    }
}

/// Integer expression over shared variables and constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(i64),
    Var(VarId),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

/// A parallel assignment. All right-hand sides are evaluated against the
/// pre-state; a variable may be assigned at most once. The empty assignment
/// is `skip`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Action {
    pub assigns: Vec<(VarId, Expr)>,
}

impl Action {
    pub fn skip() -> Action {
        Action::default()
    }

    pub fn is_skip(&self) -> bool {
        self.assigns.is_empty()
    }

    pub fn targets(&self) -> BTreeSet<VarId> {
        self.assigns.iter().map(|(v, _)| *v).collect()
    }
}

/// A guard/action pair: the basic guarded command `B -> A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardedCommand {
    pub guard: Guard,
    pub action: Action,
}

/// General guarded command: guarded commands closed under exclusive
/// alternative (`Or`) and simultaneous conjunction (`And`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ggc {
    Simple(GuardedCommand),
    Or(Box<Ggc>, Box<Ggc>),
    And(Box<Ggc>, Box<Ggc>),
}

/// Synchronization code of one arc with one neighbor: an exclusive list of
/// alternatives, all interacting with the same `neighbor`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncBlock {
    pub neighbor: Pid,
    pub alts: Vec<GuardedCommand>,
}

/// The label of a skeleton arc: either a plain guarded command, or the
/// conjunction over neighbors of per-neighbor alternative lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArcCommand {
    Plain(GuardedCommand),
    Sync(Vec<SyncBlock>),
}

impl ArcCommand {
    /// View as a general guarded command (right-folded `And` of
    /// right-folded `Or`s). A `Sync` with zero blocks is the always-enabled
    /// empty command.
    pub fn to_ggc(&self) -> Ggc {
        fn fold_or(alts: &[GuardedCommand]) -> Ggc {
            let mut it = alts.iter().rev();
            let last = Ggc::Simple(it.next().expect("sync block with no alternatives").clone());
            it.fold(last, |acc, gc| {
                Ggc::Or(Box::new(Ggc::Simple(gc.clone())), Box::new(acc))
            })
        }
        match self {
            ArcCommand::Plain(gc) => Ggc::Simple(gc.clone()),
            ArcCommand::Sync(blocks) => {
                if blocks.is_empty() {
                    return Ggc::Simple(GuardedCommand {
                        guard: Guard::True,
                        action: Action::skip(),
                    });
                }
                let mut it = blocks.iter().rev();
                let last = fold_or(&it.next().unwrap().alts);
                it.fold(last, |acc, b| {
                    Ggc::And(Box::new(fold_or(&b.alts)), Box::new(acc))
                })
            }
        }
    }
}

/// An arc of a synchronization skeleton: `from` and `to` are distinct local
/// states of the same process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonArc {
    pub from: LocalId,
    pub to: LocalId,
    pub cmd: ArcCommand,
}

/// One process: its proposition set, local states and arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub name: String,
    pub props: Vec<PropId>,
    pub states: Vec<LocalState>,
    pub arcs: Vec<SkeletonArc>,
}

impl Process {
    pub fn state_by_name(&self, name: &str) -> Option<LocalId> {
        self.states
            .iter()
            .position(|s| s.name == name)
            .map(|i| LocalId(i as u32))
    }
}

/// A global state: one local state per process plus a full shared-variable
/// valuation. `mark` is the incoming-process annotation attached by the
/// unique-incoming transformation; it is absent everywhere else.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalState {
    pub locals: Vec<LocalId>,
    pub shared: Vec<i64>,
    pub mark: Option<Pid>,
}

/// A whole program: `K` processes over disjoint proposition sets, a shared
/// store, and a non-empty set of initial states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub props: Vec<PropDef>,
    pub shared: Vec<SharedVar>,
    pub processes: Vec<Process>,
    pub initials: Vec<GlobalState>,
}

impl Program {
    pub fn k(&self) -> usize {
        self.processes.len()
    }

    pub fn prop_by_name(&self, name: &str) -> Option<PropId> {
        self.props
            .iter()
            .position(|p| p.name == name)
            .map(|i| PropId(i as u32))
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.shared
            .iter()
            .position(|v| v.name == name)
            .map(|i| VarId(i as u32))
    }

    pub fn local(&self, pid: Pid, id: LocalId) -> &LocalState {
        &self.processes[pid.0].states[id.0 as usize]
    }

    /// Maximum branching in the local state transition relation: the
    /// largest number of arcs leaving any one local state.
    pub fn max_branching(&self) -> usize {
        self.processes
            .iter()
            .flat_map(|p| {
                (0..p.states.len())
                    .map(move |s| p.arcs.iter().filter(|a| a.from.0 as usize == s).count())
            })
            .max()
            .unwrap_or(0)
    }

    /// True iff `prop` holds in `state`.
    pub fn prop_holds(&self, state: &GlobalState, prop: PropId) -> bool {
        let owner = self.props[prop.0 as usize].owner;
        self.local(owner, state.locals[owner.0])
            .props
            .contains(&prop)
    }
}

/// Errors raised by the evaluation semantics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("undeclared symbol: {0}")]
    UndeclaredSymbol(String),
    #[error("value {value} assigned to {var} escapes its declared domain")]
    DomainEscape { var: String, value: i64 },
    #[error("conflicting writes to {0} in one parallel step")]
    ConflictingWrites(String),
}

/// Evaluates guard `g` in state `s` by the usual inductive scheme.
pub fn eval_guard(prog: &Program, s: &GlobalState, g: &Guard) -> Result<bool, ModelError> {
    Ok(match g {
        Guard::True => true,
        Guard::Prop(p) => {
            if p.0 as usize >= prog.props.len() {
                return Err(ModelError::UndeclaredSymbol(format!("prop #{}", p.0)));
            }
            prog.prop_holds(s, *p)
        }
        Guard::Not(g) => !eval_guard(prog, s, g)?,
        Guard::And(a, b) => eval_guard(prog, s, a)? && eval_guard(prog, s, b)?,
        Guard::Or(a, b) => eval_guard(prog, s, a)? || eval_guard(prog, s, b)?,
        Guard::Cmp(v, op, rhs) => {
            let lhs = read_var(prog, s, *v)?;
            let rhs = match rhs {
                Operand::Const(c) => *c,
                Operand::Var(w) => read_var(prog, s, *w)?,
            };
            op.eval(lhs, rhs)
        }
    })
}

fn read_var(prog: &Program, s: &GlobalState, v: VarId) -> Result<i64, ModelError> {
    if v.0 as usize >= prog.shared.len() {
        return Err(ModelError::UndeclaredSymbol(format!("var #{}", v.0)));
    }
    Ok(s.shared[v.0 as usize])
}

fn eval_expr(prog: &Program, s: &GlobalState, e: &Expr) -> Result<i64, ModelError> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Var(v) => read_var(prog, s, *v)?,
        Expr::Add(a, b) => eval_expr(prog, s, a)? + eval_expr(prog, s, b)?,
        Expr::Sub(a, b) => eval_expr(prog, s, a)? - eval_expr(prog, s, b)?,
    })
}

/// Applies parallel assignment `a` to the shared valuation of `s`. All
/// expressions read the pre-state; unassigned variables are unchanged; a
/// result outside the target's declared domain is an error.
pub fn apply_action(prog: &Program, s: &GlobalState, a: &Action) -> Result<Vec<i64>, ModelError> {
    let mut out = s.shared.clone();
    let mut written: BTreeSet<VarId> = BTreeSet::new();
    for (var, expr) in &a.assigns {
        if var.0 as usize >= prog.shared.len() {
            return Err(ModelError::UndeclaredSymbol(format!("var #{}", var.0)));
        }
        if !written.insert(*var) {
            return Err(ModelError::ConflictingWrites(
                prog.shared[var.0 as usize].name.clone(),
            ));
        }
        let value = eval_expr(prog, s, expr)?;
        let decl = &prog.shared[var.0 as usize];
        if !decl.contains(value) {
            return Err(ModelError::DomainEscape {
                var: decl.name.clone(),
                value,
            });
        }
        out[var.0 as usize] = value;
    }
    Ok(out)
}

/// State-to-formula translation: the conjunction asserting exactly the
/// proposition valuation of local state `local` of process `pid`, over the
/// whole of that process's proposition set.
pub fn stof(prog: &Program, pid: Pid, local: LocalId) -> Guard {
    let state = prog.local(pid, local);
    let parts = prog.processes[pid.0]
        .props
        .iter()
        .map(|p| {
            if state.props.contains(p) {
                Guard::Prop(*p)
            } else {
                Guard::not(Guard::Prop(*p))
            }
        })
        .collect();
    Guard::conj(parts)
}

/// One way of executing a general guarded command: the guards that were
/// selected (one per alternative list, across every conjunct) and the
/// conflict-free parallel merge of their actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub guard: Guard,
    pub action: Action,
}

/// Enumerates the enabled selections of an arc command without building
/// the general-guarded-command view first. Produces exactly the result of
/// [`enabled_branches`] on [`ArcCommand::to_ggc`], but only clones guards
/// and actions for selections that actually exist.
pub fn enabled_selections(
    prog: &Program,
    s: &GlobalState,
    cmd: &ArcCommand,
) -> Result<Vec<Selection>, ModelError> {
    match cmd {
        ArcCommand::Plain(gc) => {
            if eval_guard(prog, s, &gc.guard)? {
                Ok(vec![Selection {
                    guard: gc.guard.clone(),
                    action: gc.action.clone(),
                }])
            } else {
                Ok(vec![])
            }
        }
        ArcCommand::Sync(blocks) => {
            if blocks.is_empty() {
                return Ok(vec![Selection {
                    guard: Guard::True,
                    action: Action::skip(),
                }]);
            }
            let mut per_block: Vec<Vec<&GuardedCommand>> = Vec::with_capacity(blocks.len());
            for b in blocks {
                let mut enabled = Vec::new();
                for alt in &b.alts {
                    if eval_guard(prog, s, &alt.guard)? {
                        enabled.push(alt);
                    }
                }
                if enabled.is_empty() {
                    return Ok(vec![]);
                }
                per_block.push(enabled);
            }
            // Cartesian product, earlier blocks outermost; guards nest
            // right-folded to mirror the general-command view.
            let mut out: Vec<Vec<&GuardedCommand>> = vec![Vec::new()];
            for block in &per_block {
                let mut next = Vec::with_capacity(out.len() * block.len());
                for chosen in &out {
                    for &alt in block {
                        let mut v = chosen.clone();
                        v.push(alt);
                        next.push(v);
                    }
                }
                out = next;
            }
            out.into_iter()
                .map(|chosen| {
                    let guard = chosen
                        .iter()
                        .rev()
                        .map(|gc| gc.guard.clone())
                        .reduce(|acc, g| Guard::And(Box::new(g), Box::new(acc)))
                        .unwrap_or(Guard::True);
                    let mut assigns: Vec<(VarId, Expr)> = Vec::new();
                    for gc in &chosen {
                        for (v, e) in &gc.action.assigns {
                            if assigns.iter().any(|(w, _)| w == v) {
                                return Err(ModelError::ConflictingWrites(
                                    prog.shared
                                        .get(v.0 as usize)
                                        .map(|d| d.name.clone())
                                        .unwrap_or_else(|| format!("var #{}", v.0)),
                                ));
                            }
                            assigns.push((*v, e.clone()));
                        }
                    }
                    Ok(Selection {
                        guard,
                        action: Action { assigns },
                    })
                })
                .collect()
        }
    }
}

/// Enumerates the selections of `g` enabled in `s`: each picks exactly one
/// `Simple` alternative from every exclusive choice under each conjunct,
/// such that every selected guard holds in `s`. Empty result means the
/// command is blocked.
pub fn enabled_branches(
    prog: &Program,
    s: &GlobalState,
    g: &Ggc,
) -> Result<Vec<Selection>, ModelError> {
    match g {
        Ggc::Simple(gc) => {
            if eval_guard(prog, s, &gc.guard)? {
                Ok(vec![Selection {
                    guard: gc.guard.clone(),
                    action: gc.action.clone(),
                }])
            } else {
                Ok(vec![])
            }
        }
        Ggc::Or(a, b) => {
            let mut out = enabled_branches(prog, s, a)?;
            out.extend(enabled_branches(prog, s, b)?);
            Ok(out)
        }
        Ggc::And(a, b) => {
            let left = enabled_branches(prog, s, a)?;
            let right = enabled_branches(prog, s, b)?;
            let mut out = Vec::new();
            for l in &left {
                for r in &right {
                    let mut assigns = l.action.assigns.clone();
                    for (v, e) in &r.action.assigns {
                        if assigns.iter().any(|(w, _)| w == v) {
                            return Err(ModelError::ConflictingWrites(
                                prog.shared
                                    .get(v.0 as usize)
                                    .map(|d| d.name.clone())
                                    .unwrap_or_else(|| format!("var #{}", v.0)),
                            ));
                        }
                        assigns.push((*v, e.clone()));
                    }
                    out.push(Selection {
                        guard: Guard::And(Box::new(l.guard.clone()), Box::new(r.guard.clone())),
                        action: Action { assigns },
                    });
                }
            }
            Ok(out)
        }
    }
}
