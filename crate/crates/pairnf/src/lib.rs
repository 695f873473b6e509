//! A compiler and verification toolkit for finite-state shared-memory
//! concurrent programs given as synchronization skeletons.
//!
//! The pipeline rewrites an arbitrary program into *pairwise normal form*
//! (all variables shared between exactly two processes, guards split into
//! per-neighbor conjuncts) and certifies the rewrite by computing strong
//! bisimulations between the global state transition diagrams of the
//! source and of every intermediate stage.
//!
//! Stages:
//!
//! 1. [`gstd::build_gstd`] — explicit-state construction of the global
//!    state transition diagram (GSTD) under interleaving semantics.
//! 2. [`transform::transform`] — split states with more than one incoming
//!    process index into marked copies, preserving bisimilarity.
//! 3. [`compile`] — synthesize the pairwise program: per-pair variable
//!    copies, cyclic timestamps, timestamp vectors, guard DNF splitting,
//!    and the 3^K local-state expansion.
//! 4. [`bisim`] — partition-refinement bisimulation checking plus direct
//!    certification of the constructive emulation relation.

pub mod bisim;
pub mod compile;
pub mod frontend;
pub mod gstd;
pub mod model;
pub mod pipeline;
pub mod stats;
pub mod textio;
pub mod timestamps;
pub mod transform;

pub use frontend::{parse_program, print_program, Diagnostic, SourceUnit};
pub use gstd::{build_gstd, BuildOptions, KripkeStructure, StateId};
pub use model::Program;
