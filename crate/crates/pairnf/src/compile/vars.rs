//! Layout of the synthesized state variables: per-pair copies of every
//! source shared variable, per-process timestamps, and timestamp vectors.
//!
//! For a source variable `x`, `copy(x, i, j)` is the copy written by
//! process i and readable by process j (`j = i` is the diagonal copy that
//! exists so the writer's own reads conform to the pairwise discipline).
//! Subscript order is immaterial: the copy for the pair {i, j} written by
//! i is one variable. `t(i, j)` is process i's timestamp w.r.t. j;
//! `tv(i, j, k)` is component k of the timestamp vector written by i and
//! shared with j.

/// Index layout for the extended shared valuation of the intermediate
/// structure (copies, then timestamps, then timestamp-vector components).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarTable {
    pub k: usize,
    pub n_source: usize,
}

impl VarTable {
    pub fn new(k: usize, n_source: usize) -> VarTable {
        VarTable { k, n_source }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        self.n_source * self.k * self.k + self.k * self.k + self.k * self.k * self.k
    }

    pub fn copy(&self, x: usize, writer: usize, other: usize) -> usize {
        debug_assert!(x < self.n_source && writer < self.k && other < self.k);
        (x * self.k + writer) * self.k + other
    }

    pub fn t(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.k && j < self.k);
        self.n_source * self.k * self.k + i * self.k + j
    }

    pub fn tv(&self, writer: usize, other: usize, comp: usize) -> usize {
        debug_assert!(writer < self.k && other < self.k && comp < self.k);
        self.n_source * self.k * self.k
            + self.k * self.k
            + (writer * self.k + other) * self.k
            + comp
    }

    /// Surface name of a pairwise copy: `<x>_<a><b>w<i>` with the pair
    /// digits ascending and one-based.
    pub fn copy_name(source: &str, writer: usize, other: usize) -> String {
        let (a, b) = pair_digits(writer, other);
        format!("{}_{}{}w{}", source, a, b, writer + 1)
    }

    /// Surface name of a timestamp-vector component: `tv_<a><b>w<i>_<k>`.
    pub fn tv_name(writer: usize, other: usize, comp: usize) -> String {
        let (a, b) = pair_digits(writer, other);
        format!("tv_{}{}w{}_{}", a, b, writer + 1, comp + 1)
    }

    /// Internal name of a timestamp (never part of a compiled program).
    pub fn t_name(i: usize, j: usize) -> String {
        format!("t_{}_{}", i + 1, j + 1)
    }

    pub fn names(&self, source_names: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for name in source_names.iter().take(self.n_source) {
            for writer in 0..self.k {
                for other in 0..self.k {
                    out.push(Self::copy_name(name, writer, other));
                }
            }
        }
        for i in 0..self.k {
            for j in 0..self.k {
                out.push(Self::t_name(i, j));
            }
        }
        for writer in 0..self.k {
            for other in 0..self.k {
                for comp in 0..self.k {
                    out.push(Self::tv_name(writer, other, comp));
                }
            }
        }
        out
    }
}

fn pair_digits(writer: usize, other: usize) -> (usize, usize) {
    (writer.min(other) + 1, writer.max(other) + 1)
}

/// The pairwise sharing partner for process i's diagonal variables: the
/// smallest index other than i.
pub fn diagonal_partner(i: usize) -> usize {
    if i == 0 {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_dense_and_disjoint() {
        let vt = VarTable::new(3, 2);
        let mut seen = vec![false; vt.len()];
        for x in 0..2 {
            for w in 0..3 {
                for o in 0..3 {
                    let idx = vt.copy(x, w, o);
                    assert!(!seen[idx]);
                    seen[idx] = true;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let idx = vt.t(i, j);
                assert!(!seen[idx]);
                seen[idx] = true;
            }
        }
        for w in 0..3 {
            for o in 0..3 {
                for c in 0..3 {
                    let idx = vt.tv(w, o, c);
                    assert!(!seen[idx]);
                    seen[idx] = true;
                }
            }
        }
        assert!(seen.into_iter().all(|b| b));
    }

    #[test]
    fn names_put_pair_digits_in_ascending_order() {
        assert_eq!(VarTable::copy_name("x", 0, 1), "x_12w1");
        assert_eq!(VarTable::copy_name("x", 1, 0), "x_12w2");
        assert_eq!(VarTable::copy_name("x", 1, 1), "x_22w2");
        assert_eq!(VarTable::tv_name(1, 0, 2), "tv_12w2_3");
    }
}
