//! Command-line driver: the full pipeline plus each stage standalone.
//!
//! Exit codes: 0 success, 1 verification failure, 2 validation or parse
//! error, 3 budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pairnf::bisim::{check_relation, compute_bisim, ApInterner, StateGraph};
use pairnf::compile::jsystem::extract_j_system;
use pairnf::compile::{compile, CompileOptions};
use pairnf::frontend::{parse_program, print_program, SourceUnit};
use pairnf::gstd::{build_gstd, export_dot, BuildOptions, KripkeStructure};
use pairnf::model::Program;
use pairnf::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use pairnf::stats::{bound_checks, ProgramStats, StatsReport, StructureStats};
use pairnf::textio::{read_relation, read_structure, resolve_relation, write_structure};
use pairnf::transform::{check_unique_incoming, transform};

const EXIT_VERIFY: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pairnf",
    about = "Compile finite-state shared-memory concurrent programs into \
             pairwise normal form and certify the rewrite with strong bisimulations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Budgets {
    /// Maximum number of reachable states per structure
    /// (env: PAIRNF_STATE_BUDGET).
    #[arg(long)]
    state_budget: Option<usize>,
    /// Maximum number of compiled arcs (env: PAIRNF_ARC_BUDGET).
    #[arg(long)]
    arc_budget: Option<usize>,
}

impl Budgets {
    fn state(&self) -> usize {
        resolve_budget(self.state_budget, "PAIRNF_STATE_BUDGET", 1_000_000)
    }

    fn arc(&self) -> usize {
        resolve_budget(self.arc_budget, "PAIRNF_ARC_BUDGET", 1_000_000)
    }
}

fn resolve_budget(flag: Option<usize>, env: &str, default: usize) -> usize {
    flag.or_else(|| std::env::var(env).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(default)
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program; print diagnostics.
    Parse {
        input: PathBuf,
        /// Print the canonical form to stdout on success.
        #[arg(long)]
        emit: bool,
    },
    /// Build the global state transition diagram of a program.
    Gstd {
        input: PathBuf,
        /// Output file for the structure (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write a Graphviz rendering.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Fail unless every state has at most one incoming process index.
        #[arg(long)]
        check_unique_incoming: bool,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Build the diagram and split multi-incoming states into marked copies.
    Transform {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Compile a program into pairwise normal form.
    Compile {
        input: PathBuf,
        /// Output directory for compiled.skel and stats.json.
        #[arg(short, long)]
        output: PathBuf,
        /// Keep unreachable expanded local states in the output.
        #[arg(long)]
        no_prune: bool,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Check two structures (or programs) for strong bisimilarity, or
    /// audit an explicit relation between them.
    Verify {
        left: PathBuf,
        right: PathBuf,
        /// Check this relation file instead of computing one.
        #[arg(long)]
        relation: Option<PathBuf>,
        /// Write the certificate here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Extract a pair- or triple-system from a compiled program.
    Extract {
        input: PathBuf,
        /// Two one-based process indices forming the pair.
        #[arg(long, num_args = 2, value_names = ["I", "J"], conflicts_with = "triple")]
        pair: Option<Vec<usize>>,
        /// Three one-based process indices forming the triple (pairs i-j, j-k).
        #[arg(long, num_args = 3, value_names = ["I", "J", "K"])]
        triple: Option<Vec<usize>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report sizes and basic checks for a program or structure.
    Stats {
        input: PathBuf,
        /// Fail unless every state has at most one incoming process index.
        #[arg(long)]
        check_unique_incoming: bool,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Export a program's diagram (or a stored structure) as Graphviz.
    ExportDot {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Run the whole pipeline: parse, build, transform, compile, verify.
    Pipeline {
        input: PathBuf,
        /// Output directory for all artifacts.
        #[arg(short, long)]
        output: PathBuf,
        /// Keep unreachable expanded local states in the output.
        #[arg(long)]
        no_prune: bool,
        /// Also write Graphviz renderings of every stage.
        #[arg(long)]
        dot: bool,
        /// Skip writing certificate files.
        #[arg(long)]
        no_certificates: bool,
        #[command(flatten)]
        budgets: Budgets,
    },
}

fn main() -> ExitCode {
    // Die quietly when stdout is closed early (e.g. piping into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("{message}");
            ExitCode::from(code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn load_program(path: &Path) -> Result<Program, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    parse_program(&SourceUnit::new(text, path.display().to_string())).map_err(|diags| {
        let message = diags
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("\n");
        fail(EXIT_INVALID, message)
    })
}

fn build(path: &Path, budgets: &Budgets) -> Result<KripkeStructure, Failure> {
    let program = load_program(path)?;
    build_gstd(
        &program,
        &BuildOptions {
            state_budget: budgets.state(),
        },
    )
    .map_err(|e| {
        let code = match e {
            pairnf::gstd::BuildError::StateSpaceBudgetExceeded { .. } => EXIT_BUDGET,
            _ => EXIT_INVALID,
        };
        fail(code, e.to_string())
    })
}

/// Structures come either as stored `.kstruct` files or as programs to
/// explore, decided by extension.
enum Side {
    Built(KripkeStructure),
    Loaded(pairnf::textio::LoadedStructure),
}

impl Side {
    fn graph(&self, interner: &mut ApInterner) -> StateGraph {
        match self {
            Side::Built(m) => StateGraph::of_structure(m, interner),
            Side::Loaded(l) => l.to_state_graph(interner),
        }
    }
}

fn load_side(path: &Path, budgets: &Budgets) -> Result<Side, Failure> {
    if path.extension().and_then(|e| e.to_str()) == Some("kstruct") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))?;
        let loaded = read_structure(&text)
            .map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))?;
        Ok(Side::Loaded(loaded))
    } else {
        Ok(Side::Built(build(path, budgets)?))
    }
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Parse { input, emit } => {
            let program = load_program(&input)?;
            if emit {
                print!("{}", print_program(&program));
            } else {
                println!(
                    "ok: {} process(es), {} shared variable(s), {} initial state(s)",
                    program.k(),
                    program.shared.len(),
                    program.initials.len()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gstd {
            input,
            output,
            dot,
            check_unique_incoming: check,
            budgets,
        } => {
            let m = build(&input, &budgets)?;
            write_or_print(&output, &write_structure(&m))?;
            if let Some(dot_path) = dot {
                std::fs::write(&dot_path, export_dot(&m))
                    .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            }
            if check && !check_unique_incoming(&m) {
                return Err(fail(
                    EXIT_VERIFY,
                    "a state has more than one incoming process index",
                ));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform {
            input,
            output,
            dot,
            budgets,
        } => {
            let m = build(&input, &budgets)?;
            let marked = transform(&m);
            write_or_print(&output, &write_structure(marked.structure()))?;
            if let Some(dot_path) = dot {
                std::fs::write(&dot_path, export_dot(marked.structure()))
                    .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compile {
            input,
            output,
            no_prune,
            budgets,
        } => {
            let program = load_program(&input)?;
            let m = build(&input, &budgets)?;
            let marked = transform(&m);
            let compiled = compile(
                &program,
                &marked,
                &CompileOptions {
                    state_budget: budgets.state(),
                    arc_budget: budgets.arc(),
                    prune_unreachable: !no_prune,
                },
            )
            .map_err(|e| {
                let code = match e {
                    pairnf::compile::CompileError::ArcBudgetExceeded { .. }
                    | pairnf::compile::CompileError::Build(
                        pairnf::gstd::BuildError::StateSpaceBudgetExceeded { .. },
                    ) => EXIT_BUDGET,
                    _ => EXIT_INVALID,
                };
                fail(code, e.to_string())
            })?;
            std::fs::create_dir_all(&output).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            std::fs::write(
                output.join("compiled.skel"),
                print_program(&compiled.program),
            )
            .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            let report = StatsReport {
                program: ProgramStats::of(&program),
                source_diagram: StructureStats::of(&m),
                marked_diagram: StructureStats::of(marked.structure()),
                intermediate_diagram: StructureStats::of(&compiled.phase2.mp),
                compiled_diagram: StructureStats::of(&compiled.mpp),
                compile: compiled.stats.clone(),
                bounds: bound_checks(
                    program.k(),
                    &StructureStats::of(&m),
                    &StructureStats::of(marked.structure()),
                    &compiled.stats,
                ),
            };
            std::fs::write(output.join("stats.json"), report.to_json())
                .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            println!(
                "compiled {} arc(s), {} expanded local state(s); artifacts in {}",
                compiled.stats.arcs_emitted,
                compiled.stats.emitted_locals.iter().sum::<usize>(),
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            left,
            right,
            relation,
            output,
            budgets,
        } => {
            let l = load_side(&left, &budgets)?;
            let r = load_side(&right, &budgets)?;
            let mut interner = ApInterner::default();
            let gl = l.graph(&mut interner);
            let gr = r.graph(&mut interner);
            match relation {
                Some(rel_path) => {
                    let text = std::fs::read_to_string(&rel_path)
                        .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                    let pairs = read_relation(&text)
                        .and_then(|p| resolve_relation(&p, &gl.keys, &gr.keys))
                        .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                    match check_relation(&gl, &gr, &pairs) {
                        Ok(()) => {
                            println!("relation verified: {} pair(s)", pairs.len());
                            Ok(ExitCode::SUCCESS)
                        }
                        Err(violations) => Err(fail(
                            EXIT_VERIFY,
                            format!(
                                "relation rejected: {} violation(s); first: clause {}: {}",
                                violations.len(),
                                violations[0].clause,
                                violations[0].detail
                            ),
                        )),
                    }
                }
                None => {
                    let result =
                        compute_bisim(&gl, &gr).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                    match result {
                        Ok(rel) => {
                            if let Some(out) = output {
                                std::fs::write(
                                    &out,
                                    pairnf::textio::write_relation(&gl.keys, &gr.keys, &rel.pairs),
                                )
                                .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                            }
                            println!("bisimilar: {} related pair(s)", rel.pairs.len());
                            Ok(ExitCode::SUCCESS)
                        }
                        Err(not) => Err(fail(
                            EXIT_VERIFY,
                            format!("not bisimilar: {:?}", not.witness),
                        )),
                    }
                }
            }
        }
        Command::Extract {
            input,
            pair,
            triple,
            output,
        } => {
            let program = load_program(&input)?;
            let pairs: Vec<(usize, usize)> = match (&pair, &triple) {
                (Some(p), None) => vec![(p[0], p[1])],
                (None, Some(t)) => vec![(t[0], t[1]), (t[1], t[2])],
                _ => {
                    return Err(fail(
                        EXIT_INVALID,
                        "exactly one of --pair or --triple is required",
                    ))
                }
            };
            let sub = extract_j_system(&program, &pairs)
                .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            write_or_print(&output, &print_program(&sub))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats {
            input,
            check_unique_incoming: check,
            budgets,
        } => {
            let (report, unique) = if input.extension().and_then(|e| e.to_str()) == Some("kstruct")
            {
                let text = std::fs::read_to_string(&input)
                    .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                let loaded =
                    read_structure(&text).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                let unique = loaded.unique_incoming();
                (
                    serde_json::json!({
                        "states": loaded.n_states(),
                        "transitions": loaded.n_transitions(),
                        "size": loaded.n_states() + loaded.n_transitions(),
                        "max_out_degree": loaded.max_out_degree(),
                        "initials": loaded.initials.len(),
                        "unique_incoming": unique,
                    }),
                    unique,
                )
            } else {
                let program = load_program(&input)?;
                let m = build(&input, &budgets)?;
                let unique = m.unique_incoming();
                (
                    serde_json::json!({
                        "program": ProgramStats::of(&program),
                        "diagram": StructureStats::of(&m),
                        "unique_incoming": unique,
                    }),
                    unique,
                )
            };
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            if check && !unique {
                return Err(fail(
                    EXIT_VERIFY,
                    "a state has more than one incoming process index",
                ));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportDot {
            input,
            output,
            budgets,
        } => {
            if input.extension().and_then(|e| e.to_str()) == Some("kstruct") {
                let text = std::fs::read_to_string(&input)
                    .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                let loaded =
                    read_structure(&text).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
                let mut dot = String::from(
                    "digraph gstd {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n",
                );
                for (i, key) in loaded.keys.iter().enumerate() {
                    let label = key
                        .replacen(" sh{", "\\nsh{", 1)
                        .replacen(" mark=", "\\nmark=", 1);
                    let style = if loaded.initials.contains(&i) {
                        ", peripheries=2"
                    } else {
                        ""
                    };
                    dot.push_str(&format!("  s{} [label=\"{}\"{}];\n", i, label, style));
                }
                for (from, succs) in loaded.succs.iter().enumerate() {
                    for &(pid, to) in succs {
                        dot.push_str(&format!("  s{} -> s{} [label=\"{}\"];\n", from, to, pid));
                    }
                }
                dot.push_str("}\n");
                write_or_print(&output, &dot)?;
            } else {
                let m = build(&input, &budgets)?;
                write_or_print(&output, &export_dot(&m))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Pipeline {
            input,
            output,
            no_prune,
            dot,
            no_certificates,
            budgets,
        } => {
            let cfg = PipelineConfig {
                input,
                out_dir: output,
                state_budget: budgets.state(),
                arc_budget: budgets.arc(),
                prune_unreachable: !no_prune,
                emit_dot: dot,
                emit_certificates: !no_certificates,
            };
            let outcome = run_pipeline(&cfg).map_err(|e| match &e {
                PipelineError::Parse(diags) => {
                    let message = diags
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join("\n");
                    fail(EXIT_INVALID, message)
                }
                other => fail(other.exit_code() as u8, e.to_string()),
            })?;
            for (label, took) in &outcome.timings {
                eprintln!("{label:>10}: {took:?}");
            }
            for failure in &outcome.failures {
                eprintln!("failure: {failure}");
            }
            if outcome.ok() {
                println!("verified: all certificates pass and the output is pairwise");
                Ok(ExitCode::SUCCESS)
            } else {
                Err(fail(EXIT_VERIFY, "pipeline verification failed"))
            }
        }
    }
}
