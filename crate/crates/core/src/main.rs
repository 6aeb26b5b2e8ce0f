use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use concretix::{
    concretize, encode_problem, load_installed, load_repo, parse_specs, render_json, render_tree, validate_repo,
    AbstractSpec, ConcretizeOptions, CoreStrategy, EncodeOptions, InstalledDatabase, Outcome, Repo,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "concretix",
    version,
    about = "Resolve abstract package specs into concrete dependency graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tree,
    Json,
    Facts,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Linear,
    Batched,
}

#[derive(Subcommand)]
enum Command {
    /// Concretize one or more specs together.
    Solve {
        specs: Vec<String>,
        #[arg(long, default_value = ".")]
        repo: PathBuf,
        /// Installed-package database (JSON).
        #[arg(long)]
        installed: Option<PathBuf>,
        /// Prefer installed packages over new builds.
        #[arg(long)]
        reuse: bool,
        /// Minimize the reasons reported for unsatisfiable requests.
        #[arg(long)]
        explain: bool,
        /// Print the time spent in each phase.
        #[arg(long)]
        time: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solver time budget in seconds.
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
        #[arg(long, value_enum, default_value = "tree")]
        format: Format,
        /// Same as `--format facts`.
        #[arg(long)]
        show_facts: bool,
        #[arg(long, value_enum, default_value = "linear")]
        core_strategy: Strategy,
        /// Concretize every package of the repository separately and print
        /// timings as CSV.
        #[arg(long, conflicts_with = "specs")]
        all: bool,
    },
    /// Check a repository for mistakes.
    Validate {
        #[arg(long, default_value = ".")]
        repo: PathBuf,
    },
    /// Concretize every package and write per-phase timings as CSV.
    Bench {
        #[arg(long, default_value = ".")]
        repo: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct BenchRow {
    package: String,
    possible_deps: usize,
    setup_ms: f64,
    load_ms: f64,
    ground_ms: f64,
    solve_ms: f64,
    total_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn bench_rows(repo: &Repo, options: &ConcretizeOptions) -> Vec<BenchRow> {
    let names: Vec<&String> = repo.recipes.keys().collect();
    names
        .par_iter()
        .filter_map(|name| {
            let spec = AbstractSpec {
                root: concretix::NodeConstraint::named(name),
                dependencies: Vec::new(),
            };
            match concretize(repo, &[spec], None, options) {
                Ok(c) => Some(BenchRow {
                    package: name.to_string(),
                    possible_deps: c.possible_dependencies,
                    setup_ms: ms(c.timings.setup),
                    load_ms: ms(c.timings.load),
                    ground_ms: ms(c.timings.ground),
                    solve_ms: ms(c.timings.solve),
                    total_ms: ms(c.timings.total()),
                }),
                Err(e) => {
                    eprintln!("{name}: {e}");
                    None
                }
            }
        })
        .collect()
}

fn write_csv<W: std::io::Write>(rows: &[BenchRow], w: W) -> Result<(), String> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| e.to_string())?;
    }
    out.flush().map_err(|e| e.to_string())
}

enum Failure {
    Unsat,
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(repo: &Path) -> Result<Repo, Failure> {
    load_repo(repo).map_err(|e| Failure::Usage(format!("cannot load repository {}: {e}", repo.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            specs,
            repo,
            installed,
            reuse,
            explain,
            time,
            seed,
            budget,
            format,
            show_facts,
            core_strategy,
            all,
        } => {
            let repo = load(&repo)?;
            if !(budget > 0.0) {
                return Err(Failure::Usage("--budget must be positive".into()));
            }
            let options = ConcretizeOptions {
                reuse,
                seed,
                budget: Duration::from_secs_f64(budget),
                core_strategy: match core_strategy {
                    Strategy::Linear => CoreStrategy::Linear,
                    Strategy::Batched => CoreStrategy::Batched,
                },
                explain,
                ..ConcretizeOptions::default()
            };
            if all {
                let rows = bench_rows(&repo, &options);
                return write_csv(&rows, std::io::stdout().lock()).map_err(Failure::Usage);
            }
            if specs.is_empty() {
                return Err(Failure::Usage("no specs given".into()));
            }
            let roots = parse_specs(&specs.join(" "))?;
            let db: Option<InstalledDatabase> = installed.map(load_installed).transpose()?;
            if show_facts || matches!(format, Format::Facts) {
                let problem = encode_problem(
                    &repo,
                    &roots,
                    db.as_ref(),
                    &EncodeOptions {
                        reuse,
                        ..EncodeOptions::default()
                    },
                )?;
                print!("{}", problem.program_text());
                return Ok(());
            }
            let c = concretize(&repo, &roots, db.as_ref(), &options)?;
            let unsat = match (&c.outcome, format) {
                (Outcome::Solved { dag, .. }, Format::Json) => {
                    println!("{}", render_json(dag));
                    false
                }
                (Outcome::Solved { dag, .. }, _) => {
                    print!("{}", render_tree(dag));
                    false
                }
                (Outcome::Unsatisfiable(d), Format::Json) => {
                    println!("{}", serde_json::to_string_pretty(d)?);
                    true
                }
                (Outcome::Unsatisfiable(d), _) => {
                    println!("{d}");
                    true
                }
            };
            if time {
                eprintln!("possible dependencies: {}", c.possible_dependencies);
                eprintln!("{}", c.timings);
            }
            if unsat {
                Err(Failure::Unsat)
            } else {
                Ok(())
            }
        }
        Command::Validate { repo } => {
            let repo = load(&repo)?;
            let warnings = validate_repo(&repo);
            for w in &warnings {
                println!("warning: {}: {}", w.package, w.message);
            }
            println!(
                "{} packages, {} virtuals, {} warnings",
                repo.recipes.len(),
                repo.virtuals.len(),
                warnings.len()
            );
            Ok(())
        }
        Command::Bench { repo, out, seed } => {
            let repo = load(&repo)?;
            let options = ConcretizeOptions {
                seed,
                ..ConcretizeOptions::default()
            };
            let rows = bench_rows(&repo, &options);
            let file = std::fs::File::create(&out)?;
            write_csv(&rows, file).map_err(Failure::Usage)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unsat) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
