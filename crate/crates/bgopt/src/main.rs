use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use bgopt::run::{
    evaluate_command, exhaustive_command, report_command, run_command, validate_command,
    Algorithm, RunOverrides,
};
use bgopt::Error;

/// Multi-objective optimisation of blue-green flood infrastructure.
#[derive(Parser)]
#[command(name = "bgopt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Parse a problem configuration and check the design guidelines.
    Validate { config: PathBuf },
    /// Run an optimisation and write its artifacts to a run directory.
    Run {
        config: PathBuf,
        /// epsilon, nsga2 or spea2.
        #[arg(long)]
        algo: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Maximum archive / front size.
        #[arg(long = "max-front")]
        max_front: Option<usize>,
        /// Population size (initial size for epsilon).
        #[arg(long)]
        pop: Option<usize>,
        /// Maximum number of generations.
        #[arg(long)]
        tend: Option<u64>,
        /// Unique-evaluation budget.
        #[arg(long)]
        budget: Option<u64>,
        /// Worker threads for parallel evaluation (0 = machine parallelism).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every genotype and export the exact Pareto front.
    Exhaustive {
        config: PathBuf,
        /// Evaluation-count guard (default 2^20).
        #[arg(long)]
        cap: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare completed runs on the unique-evaluation axis.
    Report {
        /// Run directories.
        runs: Vec<PathBuf>,
        /// Exact front (exhaustive output directory or its front.csv)
        /// enabling hyper-area ratios.
        #[arg(long)]
        exact: Option<PathBuf>,
        /// Checkpoint spacing on the evaluation axis.
        #[arg(long, default_value_t = 25)]
        step: u64,
    },
    /// Decode and evaluate one genotype.
    Evaluate {
        config: PathBuf,
        #[arg(long)]
        genotype: String,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Input(_) | Error::Io { .. } => 1,
        Error::Config(_) | Error::Validation(_) => 2,
        Error::Evaluation(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cli: Cli) -> bgopt::Result<ExitCode> {
    match cli.command {
        Commands::Validate { config } => {
            let report = validate_command(&config)?;
            print!("{report}");
            if report.is_clean() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Commands::Run { config, algo, seed, max_front, pop, tend, budget, workers, out } => {
            let algorithm = Algorithm::from_str(&algo)?;
            let overrides = RunOverrides {
                seed,
                max_front,
                population: pop,
                t_end: tend,
                eval_budget: budget,
                workers,
            };
            let completed = run_command(&config, algorithm, &overrides, out.as_deref())?;
            println!(
                "{}: {} front members after {} unique evaluations ({})",
                completed.run_dir.display(),
                completed.front.len(),
                completed.unique_evals,
                completed.termination,
            );
            Ok(ExitCode::SUCCESS)
        }
        Commands::Exhaustive { config, cap, out } => {
            let output = exhaustive_command(&config, cap, out.as_deref())?;
            println!(
                "{}: {} feasible vectors, front of {}",
                output.out_dir.display(),
                output.meta.total_vectors,
                output.meta.front_size,
            );
            Ok(ExitCode::SUCCESS)
        }
        Commands::Report { runs, exact, step } => {
            let report = report_command(&runs, exact.as_deref(), step)?;
            println!("evals,algorithm,runs,mean_{},variance", report.measure);
            for row in &report.rows {
                println!(
                    "{},{},{},{},{}",
                    row.evals, row.algorithm, row.runs, row.mean, row.variance
                );
            }
            for (algo, mean) in &report.final_means {
                println!("# final {}: mean {} = {:.6}", algo, report.measure, mean);
            }
            for (a, inner) in &report.dominated_fractions {
                for (b, frac) in inner {
                    println!("# {:.1}% of {a}'s union front is dominated by {b}", frac * 100.0);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Commands::Evaluate { config, genotype } => {
            let value = evaluate_command(&config, &genotype)?;
            println!("{}", serde_json::to_string_pretty(&value).expect("valid json"));
            Ok(ExitCode::SUCCESS)
        }
    }
}
