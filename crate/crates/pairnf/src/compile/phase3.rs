//! Local-state expansion: timestamps move into the local states (3^K
//! copies per local state), arcs become per-neighbor conjunctions of
//! single alternatives with a step-consistency check, and every action
//! collapses to constant assignments. The result is an ordinary program
//! in the surface syntax, whose state diagram is identical to the
//! intermediate structure under the evident state correspondence.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::gstd::{BuildOptions, KripkeStructure};
use crate::model::{
    Action, ArcCommand, CmpOp, Expr, GlobalState, Guard, GuardedCommand, LocalId, LocalState,
    Operand, Pid, Process, Program, SharedVar, SkeletonArc, SyncBlock, VarId,
};
use crate::timestamps::{step_image, step_witnesses, Ts};
use crate::transform::MarkedStructure;

use super::dnf::{split_disjunct, DnfGuard, TvRef};
use super::phase2::{synth_initial_states, Phase2};
use super::vars::{diagonal_partner, VarTable};
use super::CompileError;

/// Variable layout of the compiled program: pairwise copies of every
/// source variable followed by the timestamp-vector components. A
/// one-process program has no variables at all.
#[derive(Debug, Clone)]
pub struct CompiledVars {
    pub k: usize,
    pub n_source: usize,
}

impl CompiledVars {
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        if self.k < 2 {
            return 0;
        }
        self.n_source * self.k * self.k + self.k * self.k * self.k
    }

    pub fn copy(&self, x: usize, writer: usize, other: usize) -> VarId {
        VarId(((x * self.k + writer) * self.k + other) as u32)
    }

    pub fn tv(&self, r: TvRef) -> VarId {
        let base = self.n_source * self.k * self.k;
        VarId((base + (r.writer * self.k + r.other) * self.k + r.comp) as u32)
    }
}

/// Timestamp tuples in lexicographic order.
fn tuples(k: usize) -> Vec<Vec<Ts>> {
    let mut out: Vec<Vec<Ts>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * 3);
        for base in &out {
            for v in 0..3u8 {
                let mut t = base.clone();
                t.push(v);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn tuple_name(base: &str, d: &[Ts]) -> String {
    let digits: String = d.iter().map(|v| char::from(b'0' + v)).collect();
    format!("{}_ts{}", base, digits)
}

/// Per-process local states that occur in the marked structure, in
/// declaration order. Only these are expanded.
fn occurring_bases(marked: &MarkedStructure, k: usize) -> Vec<Vec<LocalId>> {
    let m = marked.structure();
    let mut sets: Vec<BTreeSet<LocalId>> = vec![BTreeSet::new(); k];
    for s in &m.states {
        for (i, &l) in s.locals.iter().enumerate() {
            sets[i].insert(l);
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

#[derive(Debug)]
pub struct Phase3 {
    pub program: Program,
    /// (process, base local, tuple index) -> expanded local id.
    pub local_index: HashMap<(usize, LocalId, usize), LocalId>,
    pub cvars: CompiledVars,
    pub bases: Vec<Vec<LocalId>>,
    pub arc_count: usize,
    pub dnf_width_max: usize,
}

fn tuple_index(d: &[Ts]) -> usize {
    d.iter().fold(0usize, |acc, &v| acc * 3 + v as usize)
}

/// Builds the compiled program from the phase-two families. `dnf_table`
/// must hold the expansion for every (c, i) pair that occurs.
pub fn expand_local_states(
    source: &Program,
    marked: &MarkedStructure,
    ph2: &Phase2,
    dnf_table: &BTreeMap<(usize, usize), DnfGuard>,
    arc_budget: usize,
) -> Result<Phase3, CompileError> {
    let k = source.k();
    let vars = &ph2.vars;
    let cvars = CompiledVars {
        k,
        n_source: source.shared.len(),
    };
    let m = marked.structure();

    // Pre-count arcs against the budget: per family, 3^K source tuples,
    // two achievable successor values per neighbor timestamp, and one arc
    // per disjunct.
    let pow3k = 3usize.pow(k as u32);
    let per_tuple = 1usize << (k - 1).min(63);
    let mut dnf_width_max = 0usize;
    let mut arc_count = 0usize;
    for f in &ph2.families {
        let w = dnf_table[&(f.c.0, f.pid.0)].width();
        dnf_width_max = dnf_width_max.max(w);
        arc_count += pow3k * per_tuple * w;
    }
    if arc_count > arc_budget {
        return Err(CompileError::ArcBudgetExceeded {
            arcs: arc_count,
            budget: arc_budget,
        });
    }

    // Shared variables of the compiled program.
    let mut shared: Vec<SharedVar> = Vec::new();
    if k >= 2 {
        for x in &source.shared {
            for writer in 0..k {
                for other in 0..k {
                    shared.push(SharedVar {
                        name: VarTable::copy_name(&x.name, writer, other),
                        domain: x.domain.clone(),
                        init: x.init,
                    });
                }
            }
        }
        for writer in 0..k {
            for other in 0..k {
                for comp in 0..k {
                    shared.push(SharedVar {
                        name: VarTable::tv_name(writer, other, comp),
                        domain: vec![0, 1, 2],
                        init: 0,
                    });
                }
            }
        }
    }

    // Expanded local states.
    let bases = occurring_bases(marked, k);
    let all_tuples = tuples(k);
    let mut local_index: HashMap<(usize, LocalId, usize), LocalId> = HashMap::new();
    let mut processes: Vec<Process> = Vec::new();
    for (i, proc) in source.processes.iter().enumerate() {
        let mut states = Vec::new();
        for &base in &bases[i] {
            let b = &proc.states[base.0 as usize];
            for (ti, d) in all_tuples.iter().enumerate() {
                local_index.insert((i, base, ti), LocalId(states.len() as u32));
                states.push(LocalState {
                    name: tuple_name(&b.name, d),
                    props: b.props.clone(),
                    ts: Some(d.clone()),
                });
            }
        }
        processes.push(Process {
            name: proc.name.clone(),
            props: proc.props.clone(),
            states,
            arcs: Vec::new(),
        });
    }

    // Arcs, grouped per process in family order.
    let mut built_arcs = 0usize;
    for f in &ph2.families {
        let i = f.pid.0;
        let c = f.c.0;
        let partner = diagonal_partner(i);
        let u = m.state(f.u);
        let v = m.state(f.v);
        let u_base = u.locals[i];
        let v_base = v.locals[i];
        let dnf = &dnf_table[&(c, i)];
        let copy_owner = if c != i { c } else { partner };

        for (ti, d) in all_tuples.iter().enumerate() {
            // Achievable successor tuples: the diagonal entry is never
            // touched, each other entry moves within the step image.
            let mut succ_tuples: Vec<Vec<Ts>> = vec![vec![0; k]];
            succ_tuples[0][i] = d[i];
            for j in 0..k {
                if j == i {
                    continue;
                }
                let images = step_image(d[j]);
                let mut next = Vec::with_capacity(succ_tuples.len() * images.len());
                for base in &succ_tuples {
                    for &img in &images {
                        let mut t = base.clone();
                        t[j] = img;
                        next.push(t);
                    }
                }
                succ_tuples = next;
            }

            for dp in &succ_tuples {
                let from = local_index[&(i, u_base, ti)];
                let to = local_index[&(i, v_base, tuple_index(dp))];
                for disjunct in &dnf.disjuncts {
                    let bundles = split_disjunct(disjunct, i, partner);
                    let mut blocks = Vec::with_capacity(k - 1);
                    for j in (0..k).filter(|&j| j != i) {
                        let mut parts: Vec<Guard> = Vec::new();
                        if let Some(lits) = bundles.get(&j) {
                            for lit in lits {
                                parts.push(Guard::Cmp(
                                    cvars.tv(lit.tv),
                                    CmpOp::Eq,
                                    Operand::Const(lit.value as i64),
                                ));
                            }
                        }
                        // Proposition conjunct for the neighbor's local
                        // state in u.
                        let uj = &source.processes[j].states[u.locals[j].0 as usize];
                        for &p in &source.processes[j].props {
                            parts.push(if uj.props.contains(&p) {
                                Guard::Prop(p)
                            } else {
                                Guard::not(Guard::Prop(p))
                            });
                        }
                        if j == copy_owner {
                            for (x, &val) in u.shared.iter().enumerate() {
                                parts.push(Guard::Cmp(
                                    cvars.copy(x, c, i),
                                    CmpOp::Eq,
                                    Operand::Const(val),
                                ));
                            }
                        }
                        // Step consistency: the new timestamp against j
                        // is exactly what advancing past j's value gives.
                        let witnesses = step_witnesses(d[j], dp[j]);
                        debug_assert_eq!(witnesses.len(), 1);
                        parts.push(Guard::Cmp(
                            cvars.tv(TvRef {
                                writer: j,
                                other: i,
                                comp: i,
                            }),
                            CmpOp::Eq,
                            Operand::Const(witnesses[0] as i64),
                        ));

                        let mut assigns: Vec<(VarId, Expr)> = Vec::new();
                        for (comp, &val) in dp.iter().enumerate() {
                            assigns.push((
                                cvars.tv(TvRef {
                                    writer: i,
                                    other: j,
                                    comp,
                                }),
                                Expr::Const(val as i64),
                            ));
                        }
                        if j == partner {
                            for (comp, &val) in dp.iter().enumerate() {
                                assigns.push((
                                    cvars.tv(TvRef {
                                        writer: i,
                                        other: i,
                                        comp,
                                    }),
                                    Expr::Const(val as i64),
                                ));
                            }
                        }
                        for (x, &val) in v.shared.iter().enumerate() {
                            assigns.push((cvars.copy(x, i, j), Expr::Const(val)));
                        }
                        if j == partner {
                            for (x, &val) in v.shared.iter().enumerate() {
                                assigns.push((cvars.copy(x, i, i), Expr::Const(val)));
                            }
                        }

                        blocks.push(SyncBlock {
                            neighbor: Pid(j),
                            alts: vec![GuardedCommand {
                                guard: Guard::conj(parts),
                                action: Action { assigns },
                            }],
                        });
                    }
                    processes[i].arcs.push(SkeletonArc {
                        from,
                        to,
                        cmd: ArcCommand::Sync(blocks),
                    });
                    built_arcs += 1;
                }
            }
        }
    }
    debug_assert_eq!(built_arcs, arc_count);

    // Initial states: the synthesized timestamps move into the tuples.
    let r0s = synth_initial_states(marked, vars);
    let mut initials = Vec::new();
    for r0 in &r0s {
        let mut locals = Vec::with_capacity(k);
        for i in 0..k {
            let d: Vec<Ts> = (0..k).map(|j| r0.shared[vars.t(i, j)] as Ts).collect();
            locals.push(local_index[&(i, r0.locals[i], tuple_index(&d))]);
        }
        let mut vals = vec![0i64; cvars.len()];
        if k >= 2 {
            for x in 0..source.shared.len() {
                for writer in 0..k {
                    for other in 0..k {
                        vals[cvars.copy(x, writer, other).0 as usize] =
                            r0.shared[vars.copy(x, writer, other)];
                    }
                }
            }
            for writer in 0..k {
                for other in 0..k {
                    for comp in 0..k {
                        let r = TvRef {
                            writer,
                            other,
                            comp,
                        };
                        vals[cvars.tv(r).0 as usize] = r0.shared[vars.tv(writer, other, comp)];
                    }
                }
            }
        }
        initials.push(GlobalState {
            locals,
            shared: vals,
            mark: None,
        });
    }

    let program = Program {
        name: format!("{}_pairwise", source.name),
        props: source.props.clone(),
        shared,
        processes,
        initials,
    };
    Ok(Phase3 {
        program,
        local_index,
        cvars,
        bases,
        arc_count,
        dnf_width_max,
    })
}

impl Phase3 {
    /// Maps an intermediate-structure state to the corresponding
    /// compiled-program state (same propositions and variable values,
    /// timestamps relocated into the local tuples).
    pub fn correspond(&self, vars: &VarTable, r: &GlobalState) -> GlobalState {
        let k = self.cvars.k;
        let mut locals = Vec::with_capacity(k);
        for i in 0..k {
            let d: Vec<Ts> = (0..k).map(|j| r.shared[vars.t(i, j)] as Ts).collect();
            locals.push(self.local_index[&(i, r.locals[i], tuple_index(&d))]);
        }
        let mut vals = vec![0i64; self.cvars.len()];
        if k >= 2 {
            for x in 0..self.cvars.n_source {
                for writer in 0..k {
                    for other in 0..k {
                        vals[self.cvars.copy(x, writer, other).0 as usize] =
                            r.shared[vars.copy(x, writer, other)];
                    }
                }
            }
            for writer in 0..k {
                for other in 0..k {
                    for comp in 0..k {
                        let tv = TvRef {
                            writer,
                            other,
                            comp,
                        };
                        vals[self.cvars.tv(tv).0 as usize] = r.shared[vars.tv(writer, other, comp)];
                    }
                }
            }
        }
        GlobalState {
            locals,
            shared: vals,
            mark: None,
        }
    }

    /// Checks that the compiled structure equals the intermediate one
    /// under [`Phase3::correspond`]: same states, same initials, same
    /// labeled transitions. Returns the state correspondence as index
    /// pairs (intermediate, compiled).
    pub fn check_identical(
        &self,
        vars: &VarTable,
        mp: &KripkeStructure,
        mpp: &KripkeStructure,
    ) -> Result<Vec<(usize, usize)>, CompileError> {
        if mp.n_states() != mpp.n_states() || mp.n_transitions() != mpp.n_transitions() {
            return Err(CompileError::Internal(format!(
                "structure sizes differ: {}+{} vs {}+{}",
                mp.n_states(),
                mp.n_transitions(),
                mpp.n_states(),
                mpp.n_transitions()
            )));
        }
        let index: HashMap<&GlobalState, usize> =
            mpp.states.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut pairs = Vec::with_capacity(mp.n_states());
        let mut mapped = vec![u32::MAX; mp.n_states()];
        for (ri, r) in mp.states.iter().enumerate() {
            let image = self.correspond(vars, r);
            let Some(&mi) = index.get(&image) else {
                return Err(CompileError::Internal(format!(
                    "intermediate state {} has no compiled counterpart",
                    mp.keys[ri]
                )));
            };
            mapped[ri] = mi as u32;
            pairs.push((ri, mi));
        }
        for &(from, pid, to) in &mp.transitions {
            let t = (
                crate::gstd::StateId(mapped[from.0 as usize]),
                pid,
                crate::gstd::StateId(mapped[to.0 as usize]),
            );
            if !mpp.transitions.contains(&t) {
                return Err(CompileError::Internal(format!(
                    "transition {} -{}-> {} missing in the compiled structure",
                    mp.key(from),
                    pid,
                    mp.key(to)
                )));
            }
        }
        let mapped_inits: BTreeSet<u32> =
            mp.initials.iter().map(|&i| mapped[i.0 as usize]).collect();
        let mpp_inits: BTreeSet<u32> = mpp.initials.iter().map(|i| i.0).collect();
        if mapped_inits != mpp_inits {
            return Err(CompileError::Internal(
                "initial states do not correspond".to_string(),
            ));
        }
        Ok(pairs)
    }

    /// Restricts the program to expanded local states reachable in `mpp`,
    /// closed under the skeleton arcs so no kept state loses its outgoing
    /// arcs. Dropped arcs were never enabled, so the state diagram is
    /// unchanged.
    pub fn prune_unreachable(&self, mpp: &KripkeStructure) -> Program {
        let p = &self.program;
        let k = p.k();
        let mut keep: Vec<BTreeSet<LocalId>> = vec![BTreeSet::new(); k];
        for s in &mpp.states {
            for (i, &l) in s.locals.iter().enumerate() {
                keep[i].insert(l);
            }
        }
        // Close under arc targets.
        let mut work: Vec<(usize, LocalId)> = keep
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&l| (i, l)))
            .collect();
        while let Some((i, l)) = work.pop() {
            for arc in p.processes[i].arcs.iter().filter(|a| a.from == l) {
                if keep[i].insert(arc.to) {
                    work.push((i, arc.to));
                }
            }
        }

        let mut processes = Vec::with_capacity(k);
        let mut remap: Vec<HashMap<LocalId, LocalId>> = vec![HashMap::new(); k];
        for (i, proc) in p.processes.iter().enumerate() {
            let mut states = Vec::new();
            for (idx, st) in proc.states.iter().enumerate() {
                let old = LocalId(idx as u32);
                if keep[i].contains(&old) {
                    remap[i].insert(old, LocalId(states.len() as u32));
                    states.push(st.clone());
                }
            }
            let arcs = proc
                .arcs
                .iter()
                .filter(|a| keep[i].contains(&a.from))
                .map(|a| SkeletonArc {
                    from: remap[i][&a.from],
                    to: remap[i][&a.to],
                    cmd: a.cmd.clone(),
                })
                .collect();
            processes.push(Process {
                name: proc.name.clone(),
                props: proc.props.clone(),
                states,
                arcs,
            });
        }
        let initials = p
            .initials
            .iter()
            .map(|init| GlobalState {
                locals: init
                    .locals
                    .iter()
                    .enumerate()
                    .map(|(i, l)| remap[i][l])
                    .collect(),
                shared: init.shared.clone(),
                mark: None,
            })
            .collect();
        Program {
            name: p.name.clone(),
            props: p.props.clone(),
            shared: p.shared.clone(),
            processes,
            initials,
        }
    }
}

/// Convenience: builds the compiled structure with the generic explorer.
pub fn build_mpp(program: &Program, state_budget: usize) -> Result<KripkeStructure, CompileError> {
    crate::gstd::build_gstd(program, &BuildOptions { state_budget }).map_err(CompileError::Build)
}
