//! Disjunctive-normal-form expansion of the "process c executed last"
//! predicate over timestamp-vector components, and its regrouping into
//! per-neighbor literal bundles.
//!
//! The predicate is the conjunction, over j != c, of
//! `tv_ci^c.j >_o <t_j^c>` where the second operand is read through a
//! vector accessible to process i: `tv_ji^j.c` for j not in {c, i}, and
//! `tv_ic^i.c` when j = i. Each cyclic-order comparison is a three-way
//! disjunction over the value pairs (1,0), (2,1), (0,2); distributing
//! yields 3^(K-1) disjuncts of equality literals.

use std::collections::BTreeMap;

use crate::timestamps::{gt_o, Ts};

/// A timestamp-vector component: the vector written by `writer`, shared
/// with `other`, component `comp`. Subscript order within the pair does
/// not matter, so (writer, other) is canonical as stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TvRef {
    pub writer: usize,
    pub other: usize,
    pub comp: usize,
}

/// An equality literal over one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TvLit {
    pub tv: TvRef,
    pub value: Ts,
}

/// One disjunct: a conjunction of equality literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disjunct {
    pub lits: Vec<TvLit>,
}

impl Disjunct {
    pub fn eval(&self, lookup: &impl Fn(TvRef) -> Ts) -> bool {
        self.lits.iter().all(|l| lookup(l.tv) == l.value)
    }
}

/// The expanded predicate for "last = c", as evaluated by process i in a
/// K-process system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnfGuard {
    pub c: usize,
    pub i: usize,
    pub k: usize,
    pub disjuncts: Vec<Disjunct>,
}

impl DnfGuard {
    pub fn width(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn eval(&self, lookup: &impl Fn(TvRef) -> Ts) -> bool {
        self.disjuncts.iter().any(|d| d.eval(lookup))
    }

    /// The components the guard references, in first-use order.
    pub fn refs(&self) -> Vec<TvRef> {
        let mut out = Vec::new();
        for d in &self.disjuncts {
            for l in &d.lits {
                if !out.contains(&l.tv) {
                    out.push(l.tv);
                }
            }
        }
        out
    }
}

/// The value pairs (a, b) with a >_o b, in lexicographic order. This is
/// the fixed disjunct ordering.
pub const GT_PAIRS: [(Ts, Ts); 3] = [(0, 2), (1, 0), (2, 1)];

/// The two component references used for the conjunct indexed by j: the
/// literal on process c's vector and the one carrying t_j^c.
fn conjunct_refs(c: usize, i: usize, j: usize) -> (TvRef, TvRef) {
    let first = TvRef {
        writer: c,
        other: i,
        comp: j,
    };
    let second = if j != i {
        TvRef {
            writer: j,
            other: i,
            comp: c,
        }
    } else {
        TvRef {
            writer: i,
            other: c,
            comp: c,
        }
    };
    (first, second)
}

/// Distributes the conjunction of three-way disjunctions into plain
/// disjuncts, dropping any disjunct whose literal set asserts two
/// different values for one component (none arise here, the filter is a
/// safeguard). For K = 1 the predicate is vacuous: one empty disjunct.
pub fn expand_dnf(c: usize, i: usize, k: usize) -> DnfGuard {
    let js: Vec<usize> = (0..k).filter(|&j| j != c).collect();
    let mut disjuncts: Vec<Disjunct> = vec![Disjunct { lits: Vec::new() }];
    for &j in &js {
        let (first, second) = conjunct_refs(c, i, j);
        let mut next = Vec::with_capacity(disjuncts.len() * GT_PAIRS.len());
        for d in &disjuncts {
            for &(a, b) in &GT_PAIRS {
                let mut lits = d.lits.clone();
                lits.push(TvLit {
                    tv: first,
                    value: a,
                });
                lits.push(TvLit {
                    tv: second,
                    value: b,
                });
                next.push(Disjunct { lits });
            }
        }
        disjuncts = next;
    }
    disjuncts.retain(|d| {
        let mut vals: BTreeMap<TvRef, Ts> = BTreeMap::new();
        d.lits
            .iter()
            .all(|l| *vals.entry(l.tv).or_insert(l.value) == l.value)
    });
    DnfGuard { c, i, k, disjuncts }
}

/// Evaluates the un-expanded predicate: the conjunction of cyclic-order
/// comparisons the DNF must be equivalent to.
pub fn last_is_c(c: usize, i: usize, k: usize, lookup: &impl Fn(TvRef) -> Ts) -> bool {
    (0..k).filter(|&j| j != c).all(|j| {
        let (first, second) = conjunct_refs(c, i, j);
        gt_o(lookup(first), lookup(second))
    })
}

/// The per-neighbor split of disjunct `m`: literals grouped by the block
/// that may reference them. A literal on the pair {writer, other} belongs
/// to the non-`i` element; diagonal literals (pair {i, i}) go to the
/// block of `partner`.
pub fn split_disjunct(d: &Disjunct, i: usize, partner: usize) -> BTreeMap<usize, Vec<TvLit>> {
    let mut out: BTreeMap<usize, Vec<TvLit>> = BTreeMap::new();
    for lit in &d.lits {
        let owner = block_owner(lit.tv, i, partner);
        out.entry(owner).or_default().push(*lit);
    }
    out
}

/// The block that may reference a component from process i's guard.
pub fn block_owner(tv: TvRef, i: usize, partner: usize) -> usize {
    if tv.writer == i && tv.other == i {
        partner
    } else if tv.writer == i {
        tv.other
    } else {
        debug_assert_eq!(tv.other, i, "component not accessible to process {i}");
        tv.writer
    }
}
