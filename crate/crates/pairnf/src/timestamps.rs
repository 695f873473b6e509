//! Cyclic timestamp ordering on {0, 1, 2} and the advance procedure that
//! lets one process establish itself as more recent than another. The
//! ordering is deliberately non-transitive: 0 < 1, 1 < 2, 2 < 0.

use thiserror::Error;

/// A timestamp value. Only 0, 1 and 2 are valid.
pub type Ts = u8;

pub const TS_VALUES: [Ts; 3] = [0, 1, 2];

/// The cyclic ordering: true exactly for (0,1), (1,2) and (2,0).
pub fn lt_o(t: Ts, u: Ts) -> bool {
    matches!((t, u), (0, 1) | (1, 2) | (2, 0))
}

/// Converse of [`lt_o`].
pub fn gt_o(t: Ts, u: Ts) -> bool {
    lt_o(u, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("step({t}, {t}) is undefined: equal timestamps are never compared")]
pub struct UndefinedStep {
    pub t: Ts,
}

/// Advances `t` past `u`: returns a value greater than `u` in the cyclic
/// order. Defined only for `t != u`; the compiled programs never compare a
/// timestamp with itself, so equality is an error rather than a guess.
pub fn step(t: Ts, u: Ts) -> Result<Ts, UndefinedStep> {
    debug_assert!(t <= 2 && u <= 2);
    if gt_o(t, u) {
        return Ok(t);
    }
    match (t, u) {
        (0, 1) => Ok(2),
        (1, 2) => Ok(0),
        (2, 0) => Ok(1),
        _ => Err(UndefinedStep { t }),
    }
}

/// The values `w != t` for which `step(t, w) = target`, in ascending order.
/// Each (t, target) pair has at most one witness.
pub fn step_witnesses(t: Ts, target: Ts) -> Vec<Ts> {
    TS_VALUES
        .iter()
        .copied()
        .filter(|&w| w != t && step(t, w) == Ok(target))
        .collect()
}

/// The values reachable from `t` by one step, in ascending order.
pub fn step_image(t: Ts) -> Vec<Ts> {
    let mut out: Vec<Ts> = TS_VALUES
        .iter()
        .copied()
        .filter(|&w| w != t)
        .map(|w| step(t, w).unwrap())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
