//! Line-oriented text formats for stage intermediates and certificates.
//!
//! Structures (`.kstruct`):
//!
//! ```text
//! props a b c
//! state s0 ap{a} sh{x=0} mark=-
//! init s0
//! trans s0 1 s1
//! ```
//!
//! States appear in canonical key order and `s<N>` is the position in
//! that order; `trans` lines are sorted; output is bit-exact across runs.
//!
//! Certificates list one related pair per line, as the two canonical
//! state keys separated by a tab.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::bisim::{ApInterner, StateGraph};
use crate::gstd::KripkeStructure;
use crate::model::Pid;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("relation references unknown {side} state key `{key}`")]
    UnknownKey { side: &'static str, key: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> TextError {
    TextError::Malformed {
        line,
        msg: msg.into(),
    }
}

pub fn write_structure(m: &KripkeStructure) -> String {
    let mut out = String::new();
    let mut universe: Vec<&str> = m.vocab.prop_names.iter().map(|s| s.as_str()).collect();
    universe.sort_unstable();
    let _ = writeln!(out, "props {}", universe.join(" "));
    for (i, key) in m.keys.iter().enumerate() {
        let _ = writeln!(out, "state s{} {}", i, key);
    }
    for init in &m.initials {
        let _ = writeln!(out, "init s{}", init.0);
    }
    for &(from, pid, to) in &m.transitions {
        let _ = writeln!(out, "trans s{} {} s{}", from.0, pid, to.0);
    }
    out
}

/// A structure read back from text: enough to check bisimulations and
/// report on it, but without program-level vocabulary.
#[derive(Debug, Clone)]
pub struct LoadedStructure {
    pub keys: Vec<String>,
    pub ap_texts: Vec<String>,
    pub marks: Vec<Option<usize>>,
    pub succs: Vec<Vec<(Pid, usize)>>,
    pub initials: Vec<usize>,
    pub universe: BTreeSet<String>,
}

impl LoadedStructure {
    pub fn to_state_graph(&self, interner: &mut ApInterner) -> StateGraph {
        StateGraph::from_parts(
            self.keys.clone(),
            &self.ap_texts,
            self.succs.clone(),
            self.initials.clone(),
            self.universe.clone(),
            interner,
        )
    }

    pub fn n_states(&self) -> usize {
        self.keys.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.succs.iter().map(|l| l.len()).sum()
    }

    pub fn unique_incoming(&self) -> bool {
        let mut seen: BTreeMap<usize, Pid> = BTreeMap::new();
        for list in self.succs.iter() {
            for &(pid, to) in list {
                if let Some(prev) = seen.insert(to, pid) {
                    if prev != pid {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn max_out_degree(&self) -> usize {
        self.succs.iter().map(|l| l.len()).max().unwrap_or(0)
    }
}

/// Splits a canonical key `ap{..} sh{..} mark=<m>` into its parts.
pub fn split_key(key: &str) -> Option<(&str, &str, &str)> {
    let rest = key.strip_prefix("ap{")?;
    let (ap, rest) = rest.split_once("} sh{")?;
    let (sh, mark) = rest.split_once("} mark=")?;
    Some((ap, sh, mark))
}

pub fn read_structure(text: &str) -> Result<LoadedStructure, TextError> {
    let mut keys = Vec::new();
    let mut ap_texts = Vec::new();
    let mut marks = Vec::new();
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut initials = Vec::new();
    let mut trans: Vec<(usize, Pid, usize)> = Vec::new();
    let mut universe: Option<BTreeSet<String>> = None;

    for (no, line) in text.lines().enumerate() {
        let no = no + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("props") {
            universe = Some(rest.split_whitespace().map(|s| s.to_string()).collect());
        } else if let Some(rest) = line.strip_prefix("state ") {
            let (id, key) = rest
                .split_once(' ')
                .ok_or_else(|| malformed(no, "expected `state <id> <key>`"))?;
            let (ap, _sh, mark) =
                split_key(key).ok_or_else(|| malformed(no, "malformed state key"))?;
            let idx = keys.len();
            if ids.insert(id.to_string(), idx).is_some() {
                return Err(malformed(no, format!("state id `{id}` repeated")));
            }
            keys.push(key.to_string());
            ap_texts.push(ap.to_string());
            marks.push(match mark {
                "-" => None,
                m => Some(
                    m.parse::<usize>()
                        .map_err(|_| malformed(no, format!("bad mark `{m}`")))?,
                ),
            });
        } else if let Some(rest) = line.strip_prefix("init ") {
            let idx = *ids
                .get(rest.trim())
                .ok_or_else(|| malformed(no, format!("unknown state `{}`", rest.trim())))?;
            initials.push(idx);
        } else if let Some(rest) = line.strip_prefix("trans ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(malformed(no, "expected `trans <id> <i> <id>`"));
            }
            let from = *ids
                .get(parts[0])
                .ok_or_else(|| malformed(no, format!("unknown state `{}`", parts[0])))?;
            let pid: usize = parts[1]
                .parse()
                .map_err(|_| malformed(no, format!("bad process index `{}`", parts[1])))?;
            if pid == 0 {
                return Err(malformed(no, "process indices are one-based"));
            }
            let to = *ids
                .get(parts[2])
                .ok_or_else(|| malformed(no, format!("unknown state `{}`", parts[2])))?;
            trans.push((from, Pid(pid - 1), to));
        } else {
            return Err(malformed(no, format!("unrecognized line `{line}`")));
        }
    }

    let mut succs = vec![Vec::new(); keys.len()];
    for (from, pid, to) in trans {
        succs[from].push((pid, to));
    }
    let universe = universe.unwrap_or_else(|| {
        ap_texts
            .iter()
            .flat_map(|t| t.split_whitespace().map(|s| s.to_string()))
            .collect()
    });
    Ok(LoadedStructure {
        keys,
        ap_texts,
        marks,
        succs,
        initials,
        universe,
    })
}

/// Serializes a relation as tab-separated canonical key pairs, sorted.
pub fn write_relation(
    left_keys: &[String],
    right_keys: &[String],
    pairs: &[(usize, usize)],
) -> String {
    let mut lines: Vec<String> = pairs
        .iter()
        .map(|&(a, b)| format!("{}\t{}", left_keys[a], right_keys[b]))
        .collect();
    lines.sort_unstable();
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

/// Reads a relation back as key pairs.
pub fn read_relation(text: &str) -> Result<Vec<(String, String)>, TextError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| malformed(no + 1, "expected two tab-separated state keys"))?;
        out.push((a.to_string(), b.to_string()));
    }
    Ok(out)
}

/// Resolves key pairs against two key lists.
pub fn resolve_relation(
    pairs: &[(String, String)],
    left_keys: &[String],
    right_keys: &[String],
) -> Result<Vec<(usize, usize)>, TextError> {
    let left: BTreeMap<&str, usize> = left_keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let right: BTreeMap<&str, usize> = right_keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    pairs
        .iter()
        .map(|(a, b)| {
            let l = *left.get(a.as_str()).ok_or_else(|| TextError::UnknownKey {
                side: "left",
                key: a.clone(),
            })?;
            let r = *right.get(b.as_str()).ok_or_else(|| TextError::UnknownKey {
                side: "right",
                key: b.clone(),
            })?;
            Ok((l, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, SourceUnit};
    use crate::gstd::{build_gstd, BuildOptions};

    #[test]
    fn structure_roundtrip_preserves_shape() {
        let p = parse_program(&SourceUnit::inline(
            "program t\nshared x : {0, 1} init 0;\nprocess P1 { props on; \
             state off { }; state lit { on }; arc off -> lit do x := 1; \
             arc lit -> off do x := 0; }\ninit (off);",
        ))
        .unwrap();
        let m = build_gstd(&p, &BuildOptions::default()).unwrap();
        let text = write_structure(&m);
        let loaded = read_structure(&text).unwrap();
        assert_eq!(loaded.n_states(), m.n_states());
        assert_eq!(loaded.n_transitions(), m.n_transitions());
        assert_eq!(loaded.keys, m.keys);
        assert_eq!(loaded.initials.len(), m.initials.len());

        // A loaded structure is bisimilar to its origin.
        let mut intern = ApInterner::default();
        let g1 = StateGraph::of_structure(&m, &mut intern);
        let g2 = loaded.to_state_graph(&mut intern);
        let rel = crate::bisim::compute_bisim(&g1, &g2).unwrap().unwrap();
        assert!(rel.certified);
    }

    #[test]
    fn relation_roundtrip() {
        let left = vec![
            "ap{a} sh{} mark=-".to_string(),
            "ap{} sh{} mark=-".to_string(),
        ];
        let right = left.clone();
        let pairs = vec![(0, 0), (1, 1)];
        let text = write_relation(&left, &right, &pairs);
        let parsed = read_relation(&text).unwrap();
        let resolved = resolve_relation(&parsed, &left, &right).unwrap();
        assert_eq!(resolved, pairs);
    }

    #[test]
    fn malformed_lines_are_reported_with_line_numbers() {
        let err = read_structure("state s0 nonsense").unwrap_err();
        assert!(matches!(err, TextError::Malformed { line: 1, .. }));
        let err = read_structure("props a\nwat").unwrap_err();
        assert!(matches!(err, TextError::Malformed { line: 2, .. }));
    }
}
