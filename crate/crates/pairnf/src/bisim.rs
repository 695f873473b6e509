//! Strong bisimulation checking between Kripke structures: a greatest
//! bisimulation via partition refinement over the disjoint union, and an
//! independent clause-by-clause verifier for externally supplied
//! relations. Transitions match on the executing process index.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::gstd::KripkeStructure;
use crate::model::Pid;

/// Transition-level view of a structure, detached from its vocabulary:
/// state keys, an equality-comparable AP projection per state, labeled
/// successor lists and initial states. Two graphs being compared must
/// intern their AP projections in the same [`ApInterner`].
#[derive(Debug, Clone)]
pub struct StateGraph {
    pub keys: Vec<String>,
    pub ap: Vec<u32>,
    pub succs: Vec<Vec<(Pid, usize)>>,
    pub initials: Vec<usize>,
    pub universe: BTreeSet<String>,
}

#[derive(Debug, Default)]
pub struct ApInterner {
    ids: BTreeMap<String, u32>,
}

impl ApInterner {
    pub fn intern(&mut self, ap: &str) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(ap.to_string()).or_insert(next)
    }
}

impl StateGraph {
    /// Projects a structure, interning AP projections through `interner`.
    pub fn of_structure(m: &KripkeStructure, interner: &mut ApInterner) -> StateGraph {
        let ap = m
            .states
            .iter()
            .map(|s| interner.intern(&m.vocab.ap_projection(s).join(" ")))
            .collect();
        let mut succs = vec![Vec::new(); m.n_states()];
        for &(from, pid, to) in &m.transitions {
            succs[from.0 as usize].push((pid, to.0 as usize));
        }
        for list in &mut succs {
            list.sort_unstable();
        }
        StateGraph {
            keys: m.keys.clone(),
            ap,
            succs,
            initials: m.initials.iter().map(|i| i.0 as usize).collect(),
            universe: m.vocab.prop_names.iter().cloned().collect(),
        }
    }

    /// Assembles a graph from raw parts (used when loading serialized
    /// structures). `ap_texts` must be the rendered AP projections.
    pub fn from_parts(
        keys: Vec<String>,
        ap_texts: &[String],
        succs: Vec<Vec<(Pid, usize)>>,
        initials: Vec<usize>,
        universe: BTreeSet<String>,
        interner: &mut ApInterner,
    ) -> StateGraph {
        let ap = ap_texts.iter().map(|t| interner.intern(t)).collect();
        let mut succs = succs;
        for list in &mut succs {
            list.sort_unstable();
        }
        StateGraph {
            keys,
            ap,
            succs,
            initials,
            universe,
        }
    }

    pub fn n(&self) -> usize {
        self.keys.len()
    }
}

/// A set of cross-structure state pairs, with the certification verdict
/// for the two structures' initial states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimRelation {
    /// Pairs (left state index, right state index), sorted.
    pub pairs: Vec<(usize, usize)>,
    pub certified: bool,
}

/// Why two structures failed to certify as bisimilar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotBisimilar {
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// An initial state whose AP projection no opposite initial matches.
    ApClause { left: bool, key: String },
    /// An initial pair with equal AP projections distinguished by the
    /// transfer clauses: some process-indexed capability differs.
    TransferClause {
        left_key: String,
        right_key: String,
        pid: Pid,
        clause: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("structures declare different proposition universes (left-only: {left_only:?}, right-only: {right_only:?})")]
    ApMismatch {
        left_only: Vec<String>,
        right_only: Vec<String>,
    },
}

/// Computes the greatest strong bisimulation between `g1` and `g2` by
/// partition refinement on the disjoint union, seeded by AP-projection
/// equality and split on (process index, target block) capabilities.
/// Certifies iff every initial state of each side is related to some
/// initial state of the other.
pub fn compute_bisim(
    g1: &StateGraph,
    g2: &StateGraph,
) -> Result<Result<BisimRelation, NotBisimilar>, BisimError> {
    if g1.universe != g2.universe {
        return Err(BisimError::ApMismatch {
            left_only: g1.universe.difference(&g2.universe).cloned().collect(),
            right_only: g2.universe.difference(&g1.universe).cloned().collect(),
        });
    }
    let blocks = refine(g1, g2);
    let n1 = g1.n();

    // Cross-structure restriction of the block equivalence.
    let mut right_by_block: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for t in 0..g2.n() {
        right_by_block.entry(blocks[n1 + t]).or_default().push(t);
    }
    let mut pairs = Vec::new();
    for (s, block) in blocks.iter().take(n1).enumerate() {
        if let Some(rs) = right_by_block.get(block) {
            for &t in rs {
                pairs.push((s, t));
            }
        }
    }

    // Initial coverage, both directions.
    let covered_left = g1
        .initials
        .iter()
        .all(|&s| g2.initials.iter().any(|&t| blocks[s] == blocks[n1 + t]));
    let covered_right = g2
        .initials
        .iter()
        .all(|&t| g1.initials.iter().any(|&s| blocks[s] == blocks[n1 + t]));
    if covered_left && covered_right {
        return Ok(Ok(BisimRelation {
            pairs,
            certified: true,
        }));
    }

    let witness = uncovered_witness(g1, g2, &blocks);
    Ok(Err(NotBisimilar { witness }))
}

fn uncovered_witness(g1: &StateGraph, g2: &StateGraph, blocks: &[u32]) -> Witness {
    let n1 = g1.n();
    let block_of = |left: bool, i: usize| if left { blocks[i] } else { blocks[n1 + i] };
    for left in [true, false] {
        let (this, other) = if left { (g1, g2) } else { (g2, g1) };
        for &s in &this.initials {
            if other
                .initials
                .iter()
                .any(|&t| block_of(!left, t) == block_of(left, s))
            {
                continue;
            }
            // An AP-matching candidate was distinguished by transfer.
            if let Some(&t) = other.initials.iter().find(|&&t| this.ap[s] == other.ap[t]) {
                let (s1, s2) = if left { (s, t) } else { (t, s) };
                let (pid, clause) = first_transfer_difference(g1, g2, blocks, s1, s2);
                return Witness::TransferClause {
                    left_key: g1.keys[s1].clone(),
                    right_key: g2.keys[s2].clone(),
                    pid,
                    clause,
                };
            }
            return Witness::ApClause {
                left,
                key: this.keys[s].clone(),
            };
        }
    }
    unreachable!("witness requested although all initials are covered")
}

/// First (process, target-block) capability present on one side of an
/// AP-equal pair and missing on the other. Clause 2 means the left state
/// has the unmatched capability, clause 3 the right.
fn first_transfer_difference(
    g1: &StateGraph,
    g2: &StateGraph,
    blocks: &[u32],
    s: usize,
    t: usize,
) -> (Pid, u8) {
    let n1 = g1.n();
    let left_caps: BTreeSet<(Pid, u32)> = g1.succs[s]
        .iter()
        .map(|&(pid, to)| (pid, blocks[to]))
        .collect();
    let right_caps: BTreeSet<(Pid, u32)> = g2.succs[t]
        .iter()
        .map(|&(pid, to)| (pid, blocks[n1 + to]))
        .collect();
    if let Some(&(pid, _)) = left_caps.difference(&right_caps).next() {
        return (pid, 2);
    }
    if let Some(&(pid, _)) = right_caps.difference(&left_caps).next() {
        return (pid, 3);
    }
    let pid = g1.succs[s].first().map(|&(p, _)| p).unwrap_or(Pid(0));
    (pid, 2)
}

/// Signature refinement to a fixpoint: states are regrouped by (current
/// block, set of (process, successor block)) until the block count stops
/// growing. Straightforward and adequate at desk scale.
fn refine(g1: &StateGraph, g2: &StateGraph) -> Vec<u32> {
    let n1 = g1.n();
    let n = n1 + g2.n();
    let mut blocks: Vec<u32> = Vec::with_capacity(n);

    let mut seed: BTreeMap<u32, u32> = BTreeMap::new();
    for i in 0..n {
        let ap = if i < n1 { g1.ap[i] } else { g2.ap[i - n1] };
        let next = seed.len() as u32;
        blocks.push(*seed.entry(ap).or_insert(next));
    }

    loop {
        let old_count = blocks.iter().collect::<BTreeSet<_>>().len();
        let mut sig_ids: HashMap<(u32, Vec<(Pid, u32)>), u32> = HashMap::new();
        let mut next: Vec<u32> = Vec::with_capacity(n);
        for i in 0..n {
            let (offset, succs): (usize, &[(Pid, usize)]) = if i < n1 {
                (0, &g1.succs[i])
            } else {
                (n1, &g2.succs[i - n1])
            };
            let mut caps: Vec<(Pid, u32)> = succs
                .iter()
                .map(|&(pid, to)| (pid, blocks[offset + to]))
                .collect();
            caps.sort_unstable();
            caps.dedup();
            let fresh = sig_ids.len() as u32;
            let id = *sig_ids.entry((blocks[i], caps)).or_insert(fresh);
            next.push(id);
        }
        let stable = sig_ids.len() == old_count;
        blocks = next;
        if stable {
            // Canonical numbering by first occurrence.
            let mut renumber: BTreeMap<u32, u32> = BTreeMap::new();
            for b in &blocks {
                let next = renumber.len() as u32;
                renumber.entry(*b).or_insert(next);
            }
            return blocks.iter().map(|b| renumber[b]).collect();
        }
    }
}

/// A single clause violation found while checking a relation. Clause 0
/// stands for the initial-coverage condition of structure bisimilarity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationViolation {
    pub clause: u8,
    pub detail: String,
}

/// Verifies the three bisimulation clauses pair-by-pair on an explicit
/// relation, plus initial-state coverage in both directions. Independent
/// of partition refinement.
pub fn check_relation(
    g1: &StateGraph,
    g2: &StateGraph,
    pairs: &[(usize, usize)],
) -> Result<(), Vec<RelationViolation>> {
    let mut violations = Vec::new();
    let related: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();

    for &(s, t) in pairs {
        if g1.ap[s] != g2.ap[t] {
            violations.push(RelationViolation {
                clause: 1,
                detail: format!(
                    "{} and {} differ in their AP projections",
                    g1.keys[s], g2.keys[t]
                ),
            });
            continue;
        }
        for &(pid, u) in &g1.succs[s] {
            let matched = g2.succs[t]
                .iter()
                .any(|&(pid2, u2)| pid2 == pid && related.contains(&(u, u2)));
            if !matched {
                violations.push(RelationViolation {
                    clause: 2,
                    detail: format!(
                        "transition by P{} from {} has no related match from {}",
                        pid, g1.keys[s], g2.keys[t]
                    ),
                });
            }
        }
        for &(pid, u2) in &g2.succs[t] {
            let matched = g1.succs[s]
                .iter()
                .any(|&(pid1, u)| pid1 == pid && related.contains(&(u, u2)));
            if !matched {
                violations.push(RelationViolation {
                    clause: 3,
                    detail: format!(
                        "transition by P{} from {} has no related match from {}",
                        pid, g2.keys[t], g1.keys[s]
                    ),
                });
            }
        }
    }

    for &s in &g1.initials {
        if !g2.initials.iter().any(|&t| related.contains(&(s, t))) {
            violations.push(RelationViolation {
                clause: 0,
                detail: format!("initial state {} has no related initial", g1.keys[s]),
            });
        }
    }
    for &t in &g2.initials {
        if !g1.initials.iter().any(|&s| related.contains(&(s, t))) {
            violations.push(RelationViolation {
                clause: 0,
                detail: format!("initial state {} has no related initial", g2.keys[t]),
            });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Composes two relations along their shared middle structure.
pub fn compose_relations(r1: &[(usize, usize)], r2: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut by_mid: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(m, c) in r2 {
        by_mid.entry(m).or_default().push(c);
    }
    let mut out: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(a, m) in r1 {
        if let Some(cs) = by_mid.get(&m) {
            for &c in cs {
                out.insert((a, c));
            }
        }
    }
    out.into_iter().collect()
}

/// Transposes a relation (certification is symmetric up to transposition).
pub fn transpose(pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(
        aps: &[&str],
        succs: Vec<Vec<(usize, usize)>>,
        initials: Vec<usize>,
        universe: &[&str],
        interner: &mut ApInterner,
    ) -> StateGraph {
        StateGraph::from_parts(
            (0..aps.len()).map(|i| format!("s{i}:{}", aps[i])).collect(),
            &aps.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            succs
                .into_iter()
                .map(|l| l.into_iter().map(|(p, t)| (Pid(p), t)).collect())
                .collect(),
            initials,
            universe.iter().map(|s| s.to_string()).collect(),
            interner,
        )
    }

    /// Two-state toggle vs a three-state unrolling with matching labels:
    /// certified. Flipping one AP label breaks clause 1.
    #[test]
    fn toggle_vs_unrolled_toggle() {
        let mut intern = ApInterner::default();
        let toggle = graph(
            &["", "on"],
            vec![vec![(0, 1)], vec![(0, 0)]],
            vec![0],
            &["on"],
            &mut intern,
        );
        let unrolled = graph(
            &["", "on", ""],
            vec![vec![(0, 1)], vec![(0, 2)], vec![(0, 1)]],
            vec![0],
            &["on"],
            &mut intern,
        );
        let rel = compute_bisim(&toggle, &unrolled).unwrap().unwrap();
        assert!(rel.certified);
        assert!(rel.pairs.contains(&(0, 0)));
        assert!(rel.pairs.contains(&(0, 2)));
        assert!(rel.pairs.contains(&(1, 1)));
        check_relation(&toggle, &unrolled, &rel.pairs).unwrap();

        let flipped = graph(
            &["on", ""],
            vec![vec![(0, 1)], vec![(0, 0)]],
            vec![0],
            &["on"],
            &mut intern,
        );
        let err = compute_bisim(&toggle, &flipped).unwrap().unwrap_err();
        assert!(matches!(err.witness, Witness::ApClause { .. }));
    }

    #[test]
    fn reflexivity_contains_identity() {
        let mut intern = ApInterner::default();
        let g = graph(
            &["", "a", "b"],
            vec![vec![(0, 1), (1, 2)], vec![(1, 2)], vec![(0, 1)]],
            vec![0],
            &["a", "b"],
            &mut intern,
        );
        let rel = compute_bisim(&g, &g).unwrap().unwrap();
        assert!(rel.certified);
        for i in 0..g.n() {
            assert!(rel.pairs.contains(&(i, i)));
        }
    }

    #[test]
    fn transfer_difference_is_witnessed() {
        let mut intern = ApInterner::default();
        // Left can always move again; right deadlocks after one step.
        let live = graph(
            &["", "a"],
            vec![vec![(0, 1)], vec![(0, 0)]],
            vec![0],
            &["a"],
            &mut intern,
        );
        let dead = graph(
            &["", "a"],
            vec![vec![(0, 1)], vec![]],
            vec![0],
            &["a"],
            &mut intern,
        );
        let err = compute_bisim(&live, &dead).unwrap().unwrap_err();
        match err.witness {
            Witness::TransferClause { clause, .. } => assert!(clause == 2 || clause == 3),
            w => panic!("expected transfer witness, got {w:?}"),
        }
    }

    #[test]
    fn empty_relation_fails_initial_coverage() {
        let mut intern = ApInterner::default();
        let g = graph(&[""], vec![vec![]], vec![0], &[], &mut intern);
        let violations = check_relation(&g, &g, &[]).unwrap_err();
        assert!(violations.iter().all(|v| v.clause == 0));
        assert_eq!(violations.len(), 2);
    }

    #[test]
    fn mismatched_universes_are_rejected() {
        let mut intern = ApInterner::default();
        let a = graph(&[""], vec![vec![]], vec![0], &["a"], &mut intern);
        let b = graph(&[""], vec![vec![]], vec![0], &["b"], &mut intern);
        let err = compute_bisim(&a, &b).unwrap_err();
        assert!(matches!(err, BisimError::ApMismatch { .. }));
    }

    #[test]
    fn certification_is_symmetric() {
        let mut intern = ApInterner::default();
        let toggle = graph(
            &["", "on"],
            vec![vec![(0, 1)], vec![(0, 0)]],
            vec![0],
            &["on"],
            &mut intern,
        );
        let unrolled = graph(
            &["", "on", ""],
            vec![vec![(0, 1)], vec![(0, 2)], vec![(0, 1)]],
            vec![0],
            &["on"],
            &mut intern,
        );
        let ab = compute_bisim(&toggle, &unrolled).unwrap().unwrap();
        let ba = compute_bisim(&unrolled, &toggle).unwrap().unwrap();
        assert!(ab.certified && ba.certified);
        let mut ab_pairs = ab.pairs.clone();
        ab_pairs.sort_unstable();
        assert_eq!(transpose(&ba.pairs), ab_pairs);
    }
}
