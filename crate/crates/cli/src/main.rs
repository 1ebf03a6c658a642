use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scm_core::diagnose::{
    approximate_all_mics, diagnose_one, find_all_mics, DiagnosisOptions, DEFAULT_BUDGET,
    DEFAULT_MAX_CARDINALITY,
};
use scm_core::{
    check_consistency, export_asp_facts, export_dot, generate, parse_instance, reduce_inputs,
    write_instance, GenParams, SolveError, SolverOptions, ValidatedInstance, Witness,
};

const EXIT_INCONSISTENT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Sign consistency checking and diagnosis for influence graphs.
#[derive(Parser)]
#[command(name = "scm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the observations are consistent with the graph.
    Check {
        #[command(flatten)]
        input: InputArgs,
        /// Skip input reduction.
        #[arg(long)]
        no_reduce: bool,
        /// Print a total labeling explaining every non-input vertex.
        #[arg(long)]
        witness: bool,
        /// Maximum number of solver decisions.
        #[arg(long, value_name = "N")]
        budget: Option<u64>,
        /// Seed for shuffling the branching order.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report minimal inconsistent cores.
    Diagnose {
        #[command(flatten)]
        input: InputArgs,
        /// Skip input reduction.
        #[arg(long)]
        no_reduce: bool,
        #[arg(long, value_enum, default_value_t = Mode::One)]
        mode: Mode,
        /// Largest core size enumerated in `all` mode.
        #[arg(long = "max-card", value_name = "K", default_value_t = DEFAULT_MAX_CARDINALITY)]
        max_card: usize,
        /// Maximum number of candidate evaluations and solver calls.
        #[arg(long, value_name = "N", default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Write the instance with the cores highlighted as DOT.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
        /// Print a JSON report instead of plain text.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply input reduction and print the augmented instance.
    Reduce {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Print a random benchmark instance.
    Generate {
        /// Number of vertices.
        #[arg(long)]
        alpha: usize,
        /// Average total degree.
        #[arg(long, default_value_t = 2.5)]
        beta: f64,
        /// Fraction of observed vertices.
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exact number of edges, overriding `--beta`.
        #[arg(long)]
        edges: Option<usize>,
    },
    /// Convert an instance to ASP facts or DOT.
    Export {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        format: Format,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Instance file in the native format, or `-` for stdin.
    file: PathBuf,
    /// Declare every vertex without predecessors an input.
    #[arg(long)]
    guess_inputs: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    One,
    All,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Asp,
    Dot,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: String) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message,
    }
}

fn read_instance(args: &InputArgs) -> Result<ValidatedInstance, Failure> {
    let text = if args.file == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| usage(format!("stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(&args.file)
            .map_err(|e| usage(format!("{}: {e}", args.file.display())))?
    };
    let inst =
        parse_instance(&text).map_err(|e| usage(format!("{}:{e}", args.file.display())))?;
    Ok(if args.guess_inputs {
        inst.guess_inputs()
    } else {
        inst
    })
}

/// The instance used for solving: reduced unless disabled.
fn prepared(inst: &ValidatedInstance, no_reduce: bool) -> ValidatedInstance {
    if no_reduce {
        inst.clone()
    } else {
        reduce_inputs(inst).0
    }
}

fn witness_text(inst: &ValidatedInstance, w: &Witness) -> String {
    let mut out = String::new();
    for v in inst.vertices() {
        out.push_str(&format!("obs {} {}\n", inst.name(v), w.vertex(v)));
    }
    for e in inst.edge_ids() {
        let edge = inst.edge(e);
        out.push_str(&format!(
            "edge {} {} {}\n",
            inst.name(edge.src),
            inst.name(edge.dst),
            w.edge(e)
        ));
    }
    out
}

fn budget_failure(e: SolveError) -> Failure {
    match e {
        SolveError::BudgetExceeded { stats } => Failure {
            code: EXIT_BUDGET,
            message: format!("budget exceeded after {} decisions", stats.decisions),
        },
        other => usage(other.to_string()),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check {
            input,
            no_reduce,
            witness,
            budget,
            seed,
        } => {
            let inst = read_instance(&input)?;
            let opts = SolverOptions {
                max_decisions: budget,
                seed,
                ..Default::default()
            };
            let result = check_consistency(&prepared(&inst, no_reduce), &opts).map_err(budget_failure)?;
            if !result.is_consistent() {
                println!("INCONSISTENT");
                return Ok(EXIT_INCONSISTENT);
            }
            println!("CONSISTENT");
            if witness {
                // A witness for the reduced instance need not explain the
                // vertices that reduction turned into inputs.
                let full = if no_reduce {
                    result
                } else {
                    check_consistency(&inst, &opts).map_err(budget_failure)?
                };
                let w = full.witness.expect("consistent result carries a witness");
                print!("{}", witness_text(&inst, &w));
            }
            Ok(0)
        }
        Command::Diagnose {
            input,
            no_reduce,
            mode,
            max_card,
            budget,
            dot,
            json,
            seed,
        } => {
            let inst = read_instance(&input)?;
            let work = prepared(&inst, no_reduce);
            let opts = DiagnosisOptions {
                max_cardinality: max_card,
                budget: Some(budget),
                solver: SolverOptions {
                    seed,
                    ..Default::default()
                },
                ..Default::default()
            };
            let report = match mode {
                Mode::One => diagnose_one(&work, &opts),
                Mode::All => find_all_mics(&work, &opts),
                Mode::Approx => approximate_all_mics(&work, &opts),
            };
            if json {
                print!("{}", report.to_json(&work));
            } else {
                print!("{}", report.to_text(&work));
            }
            if let Some(path) = dot {
                std::fs::write(&path, export_dot(&inst, &report.mics))
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            }
            if report.budget_exhausted {
                eprintln!("budget exhausted; results are partial");
                return Ok(EXIT_BUDGET);
            }
            Ok(0)
        }
        Command::Reduce { input } => {
            let inst = read_instance(&input)?;
            let (reduced, report) = reduce_inputs(&inst);
            print!("{}", write_instance(&reduced));
            for step in &report.added_inputs {
                println!("# {} {}", inst.name(step.vertex), step.condition.number());
            }
            Ok(0)
        }
        Command::Generate {
            alpha,
            beta,
            gamma,
            seed,
            edges,
        } => {
            let params = GenParams {
                alpha,
                beta,
                gamma,
                seed,
                edges,
            };
            let inst = generate(&params).map_err(|e| usage(e.to_string()))?;
            print!("{}", write_instance(&inst));
            Ok(0)
        }
        Command::Export { input, format } => {
            let inst = read_instance(&input)?;
            match format {
                Format::Asp => print!("{}", export_asp_facts(&inst)),
                Format::Dot => print!("{}", export_dot(&inst, &[])),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
