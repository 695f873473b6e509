//! End-to-end pipeline: parse, build the state diagram, apply the
//! unique-incoming transformation, compile to pairwise normal form, and
//! certify every step with a strong bisimulation. Artifacts (compiled
//! program, stage intermediates, certificates, report) are written to an
//! output directory and are byte-identical across runs.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bisim::{check_relation, compose_relations, compute_bisim, ApInterner, StateGraph};
use crate::compile::{compile, validate::validate_pairwise, CompileError, CompileOptions};
use crate::frontend::{parse_program, print_program, Diagnostic, SourceUnit};
use crate::gstd::{build_gstd, export_dot, BuildError, BuildOptions};
use crate::stats::{bound_checks, ProgramStats, StatsReport, StructureStats};
use crate::textio::write_structure;
use crate::transform::transform;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub state_budget: usize,
    pub arc_budget: usize,
    pub prune_unreachable: bool,
    pub emit_dot: bool,
    pub emit_certificates: bool,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> PipelineConfig {
        PipelineConfig {
            input: input.into(),
            out_dir: out_dir.into(),
            state_budget: 1_000_000,
            arc_budget: 1_000_000,
            prune_unreachable: true,
            emit_dot: false,
            emit_certificates: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{} parse/validation error(s)", .0.len())]
    Parse(Vec<Diagnostic>),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

impl PipelineError {
    /// Process exit code: 2 for validation/parse errors, 3 for budget
    /// overruns (verification failures are reported in the outcome and
    /// exit 1).
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Build(BuildError::StateSpaceBudgetExceeded { .. })
            | PipelineError::Compile(CompileError::ArcBudgetExceeded { .. })
            | PipelineError::Compile(CompileError::Build(BuildError::StateSpaceBudgetExceeded {
                ..
            })) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutcome {
    /// All four certificates verified.
    pub verified: bool,
    /// The emitted program passes the pairwise validator.
    pub validator_ok: bool,
    pub report: StatsReport,
    pub timings: Vec<(String, Duration)>,
    /// Human-readable descriptions of anything that failed.
    pub failures: Vec<String>,
}

impl PipelineOutcome {
    pub fn ok(&self) -> bool {
        self.verified && self.validator_ok && self.report.bounds_pass()
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let text = std::fs::read_to_string(&cfg.input)?;
    let src = SourceUnit::new(text, cfg.input.display().to_string());

    let mut timings: Vec<(String, Duration)> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let clock = Instant::now();
    let program = parse_program(&src).map_err(PipelineError::Parse)?;
    let mark = |label: &str, timings: &mut Vec<(String, Duration)>, at: &mut Instant| {
        timings.push((label.to_string(), at.elapsed()));
        *at = Instant::now();
    };
    let mut at = clock;
    mark("parse", &mut timings, &mut at);

    let build_opts = BuildOptions {
        state_budget: cfg.state_budget,
    };
    let mq = build_gstd(&program, &build_opts)?;
    mark("gstd", &mut timings, &mut at);

    let marked = transform(&mq);
    mark("transform", &mut timings, &mut at);

    let compiled = compile(
        &program,
        &marked,
        &CompileOptions {
            state_budget: cfg.state_budget,
            arc_budget: cfg.arc_budget,
            prune_unreachable: cfg.prune_unreachable,
        },
    )?;
    mark("compile", &mut timings, &mut at);

    // Certificates.
    let mut interner = ApInterner::default();
    let g_mq = StateGraph::of_structure(&mq, &mut interner);
    let g_marked = StateGraph::of_structure(marked.structure(), &mut interner);
    let g_mp = StateGraph::of_structure(&compiled.phase2.mp, &mut interner);
    let g_mpp = StateGraph::of_structure(&compiled.mpp, &mut interner);

    let mut verified = true;
    let r_q_marked = match compute_bisim(&g_mq, &g_marked).expect("same proposition universe") {
        Ok(rel) => rel.pairs,
        Err(not) => {
            verified = false;
            failures.push(format!(
                "source and marked structures failed to certify: {:?}",
                not.witness
            ));
            Vec::new()
        }
    };
    let r_marked_mp = compiled.phase2.build_join(&marked);
    if let Err(violations) = check_relation(&g_marked, &g_mp, &r_marked_mp) {
        verified = false;
        failures.push(format!(
            "emulation relation rejected ({} violation(s), first: {})",
            violations.len(),
            violations[0].detail
        ));
    }
    let r_mp_mpp = compiled.mp_mpp_pairs.clone();
    if let Err(violations) = check_relation(&g_mp, &g_mpp, &r_mp_mpp) {
        verified = false;
        failures.push(format!(
            "intermediate/compiled correspondence rejected ({} violation(s))",
            violations.len()
        ));
    }
    let r_q_mpp = compose_relations(&compose_relations(&r_q_marked, &r_marked_mp), &r_mp_mpp);
    if let Err(violations) = check_relation(&g_mq, &g_mpp, &r_q_mpp) {
        verified = false;
        failures.push(format!(
            "composed source/compiled certificate rejected ({} violation(s))",
            violations.len()
        ));
    }
    mark("verify", &mut timings, &mut at);

    let (mut validator_ok, validator_diags) = validate_pairwise(&compiled.program);
    for d in &validator_diags {
        failures.push(format!("pairwise validation: {}", d.message));
    }

    // Emitted program must re-parse to the same structure.
    let compiled_text = print_program(&compiled.program);
    match parse_program(&SourceUnit::new(&compiled_text, "<compiled>")) {
        Ok(reparsed) => {
            if reparsed != compiled.program {
                validator_ok = false;
                failures.push("compiled program is not a print/parse fixpoint".to_string());
            }
        }
        Err(diags) => {
            validator_ok = false;
            failures.push(format!("compiled program does not re-parse: {}", diags[0]));
        }
    }

    let report = StatsReport {
        program: ProgramStats::of(&program),
        source_diagram: StructureStats::of(&mq),
        marked_diagram: StructureStats::of(marked.structure()),
        intermediate_diagram: StructureStats::of(&compiled.phase2.mp),
        compiled_diagram: StructureStats::of(&compiled.mpp),
        compile: compiled.stats.clone(),
        bounds: bound_checks(
            program.k(),
            &StructureStats::of(&mq),
            &StructureStats::of(marked.structure()),
            &compiled.stats,
        ),
    };

    // Artifacts.
    let out = &cfg.out_dir;
    std::fs::write(out.join("compiled.skel"), &compiled_text)?;
    std::fs::write(out.join("stats.json"), report.to_json())?;
    std::fs::write(out.join("mq.kstruct"), write_structure(&mq))?;
    std::fs::write(
        out.join("mq_marked.kstruct"),
        write_structure(marked.structure()),
    )?;
    std::fs::write(out.join("mp.kstruct"), write_structure(&compiled.phase2.mp))?;
    std::fs::write(out.join("mpp.kstruct"), write_structure(&compiled.mpp))?;
    if cfg.emit_certificates {
        let rel = |g1: &StateGraph, g2: &StateGraph, pairs: &[(usize, usize)]| {
            crate::textio::write_relation(&g1.keys, &g2.keys, pairs)
        };
        std::fs::write(
            out.join("cert_mq_marked.txt"),
            rel(&g_mq, &g_marked, &r_q_marked),
        )?;
        std::fs::write(
            out.join("cert_marked_mp.txt"),
            rel(&g_marked, &g_mp, &r_marked_mp),
        )?;
        std::fs::write(out.join("cert_mp_mpp.txt"), rel(&g_mp, &g_mpp, &r_mp_mpp))?;
        std::fs::write(out.join("cert_mq_mpp.txt"), rel(&g_mq, &g_mpp, &r_q_mpp))?;
    }
    if cfg.emit_dot {
        std::fs::write(out.join("mq.dot"), export_dot(&mq))?;
        std::fs::write(out.join("mq_marked.dot"), export_dot(marked.structure()))?;
        std::fs::write(out.join("mp.dot"), export_dot(&compiled.phase2.mp))?;
        std::fs::write(out.join("mpp.dot"), export_dot(&compiled.mpp))?;
    }
    mark("emit", &mut timings, &mut at);

    Ok(PipelineOutcome {
        verified,
        validator_ok,
        report,
        timings,
        failures,
    })
}
