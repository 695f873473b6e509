//! Unique-incoming transformation: rewrites a structure so that all
//! incoming transitions of any state carry the same process index, by
//! splitting each offender into marked copies. The result is strongly
//! bisimilar to the input.

use std::collections::{BTreeMap, BTreeSet};

use crate::gstd::{KripkeStructure, StateId};
use crate::model::{GlobalState, Pid};

/// A structure in which every state has at most one incoming process
/// index and carries a defined mark: the unique incoming index, or
/// process 1 for source states (initials with no incoming transition).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedStructure(KripkeStructure);

impl MarkedStructure {
    pub fn structure(&self) -> &KripkeStructure {
        &self.0
    }

    pub fn into_inner(self) -> KripkeStructure {
        self.0
    }

    pub fn mark(&self, id: StateId) -> Pid {
        self.0.state(id).mark.expect("marked structure state")
    }
}

/// True iff every state of `m` has `|in_procs| <= 1`. Exposed both as the
/// post-transform assertion and as a standalone check.
pub fn check_unique_incoming(m: &KripkeStructure) -> bool {
    m.unique_incoming()
}

/// Splits every state with more than one incoming process index into one
/// marked copy per index. Each copy agrees with the original on
/// propositions and shared variables, inherits all outgoing transitions,
/// receives the matching incoming transitions, and is initial iff the
/// original was. Offenders are processed in canonical key order; copied
/// transitions are read from the current relation, so chains of splits
/// compose. Terminates because each iteration retires one offender and
/// splitting never creates a new one.
pub fn transform(m: &KripkeStructure) -> MarkedStructure {
    transform_impl(m, &mut None)
}

/// Like [`transform`], also returning the structure after every split
/// iteration (exclusive of the final mark assignment). Each snapshot is
/// strongly bisimilar to its predecessor; this is how the loop invariant
/// is checked at desk scale.
pub fn transform_snapshots(m: &KripkeStructure) -> (MarkedStructure, Vec<KripkeStructure>) {
    let mut snapshots = Some(Vec::new());
    let out = transform_impl(m, &mut snapshots);
    (out, snapshots.unwrap())
}

fn transform_impl(
    m: &KripkeStructure,
    snapshots: &mut Option<Vec<KripkeStructure>>,
) -> MarkedStructure {
    struct Node {
        state: GlobalState,
        initial: bool,
        succ: BTreeSet<(Pid, usize)>,
        pred: BTreeSet<(usize, Pid)>,
        live: bool,
    }

    fn snapshot(vocab: &std::sync::Arc<crate::gstd::Vocab>, nodes: &[Node]) -> KripkeStructure {
        let states: Vec<GlobalState> = nodes
            .iter()
            .filter(|n| n.live)
            .map(|n| n.state.clone())
            .collect();
        let initials: Vec<GlobalState> = nodes
            .iter()
            .filter(|n| n.live && n.initial)
            .map(|n| n.state.clone())
            .collect();
        let mut transitions = Vec::new();
        for n in nodes.iter().filter(|n| n.live) {
            for &(p, t) in &n.succ {
                transitions.push((n.state.clone(), p, nodes[t].state.clone()));
            }
        }
        KripkeStructure::assemble(vocab.clone(), states, initials, transitions)
            .expect("snapshot keys are distinct")
    }

    let mut nodes: Vec<Node> = m
        .state_ids()
        .map(|id| Node {
            state: m.state(id).clone(),
            initial: m.initials.contains(&id),
            succ: m.successors(id).map(|(p, t)| (p, t.0 as usize)).collect(),
            pred: BTreeSet::new(),
            live: true,
        })
        .collect();
    for &(from, pid, to) in &m.transitions {
        nodes[to.0 as usize].pred.insert((from.0 as usize, pid));
    }

    loop {
        // Least offending state under the canonical key order.
        let offender = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.live)
            .filter(|(_, n)| {
                let labels: BTreeSet<Pid> = n.pred.iter().map(|&(_, p)| p).collect();
                labels.len() > 1
            })
            .min_by_key(|(_, n)| m.vocab.key(&n.state))
            .map(|(i, _)| i);
        let Some(s) = offender else { break };

        let labels: BTreeSet<Pid> = nodes[s].pred.iter().map(|&(_, p)| p).collect();
        let outgoing: Vec<(Pid, usize)> = nodes[s].succ.iter().copied().collect();
        let incoming: Vec<(usize, Pid)> = nodes[s].pred.iter().copied().collect();
        let was_initial = nodes[s].initial;

        for &i in &labels {
            let mut state = nodes[s].state.clone();
            state.mark = Some(i);
            let copy = nodes.len();
            nodes.push(Node {
                state,
                initial: was_initial,
                succ: BTreeSet::new(),
                pred: BTreeSet::new(),
                live: true,
            });
            for &(j, u) in &outgoing {
                nodes[copy].succ.insert((j, u));
                nodes[u].pred.insert((copy, j));
            }
            for &(u, label) in &incoming {
                if label == i {
                    nodes[u].succ.insert((i, copy));
                    nodes[copy].pred.insert((u, i));
                }
            }
        }

        // Delete s and every transition incident on it.
        for &(j, u) in &outgoing {
            nodes[u].pred.remove(&(s, j));
        }
        for &(u, label) in &incoming {
            nodes[u].succ.remove(&(label, s));
        }
        let node = &mut nodes[s];
        node.live = false;
        node.initial = false;
        node.succ.clear();
        node.pred.clear();

        if let Some(list) = snapshots.as_mut() {
            list.push(snapshot(&m.vocab, &nodes));
        }
    }

    // Mark convention: surviving unmarked states take their unique
    // incoming index; true source states take process 1.
    for node in nodes.iter_mut() {
        if !node.live || node.state.mark.is_some() {
            continue;
        }
        let labels: BTreeSet<Pid> = node.pred.iter().map(|&(_, p)| p).collect();
        let mark = match labels.len() {
            0 => {
                debug_assert!(node.initial, "unreachable non-initial state");
                Pid(0)
            }
            1 => *labels.iter().next().unwrap(),
            _ => unreachable!("offender survived the split loop"),
        };
        node.state.mark = Some(mark);
    }

    let renumber: BTreeMap<usize, GlobalState> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.live)
        .map(|(i, n)| (i, n.state.clone()))
        .collect();
    let states: Vec<GlobalState> = renumber.values().cloned().collect();
    let initials: Vec<GlobalState> = nodes
        .iter()
        .filter(|n| n.live && n.initial)
        .map(|n| n.state.clone())
        .collect();
    let mut transitions: Vec<(GlobalState, Pid, GlobalState)> = Vec::new();
    for (i, n) in nodes.iter().enumerate().filter(|(_, n)| n.live) {
        for &(p, t) in &n.succ {
            transitions.push((renumber[&i].clone(), p, renumber[&t].clone()));
        }
    }

    let out = KripkeStructure::assemble(m.vocab.clone(), states, initials, transitions)
        .expect("split copies have distinct (ap, sh, mark) keys");
    debug_assert!(out.unique_incoming());
    debug_assert!(out.is_reachability_closed());
    MarkedStructure(out)
}
