//! Command-line harness: seeded optimizer comparisons on benchmark
//! objectives, plus built-in numerical selfchecks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypertune_bench::runner::{run_comparison, ObjectiveSpec, RunConfig};
use hypertune_bench::{selfcheck, BenchError};
use hypertune_core::gp::KernelKind;

#[derive(Parser)]
#[command(name = "hypertune-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded optimizer comparison and emit CSV/SVG results.
    Run(RunArgs),
    /// Verify the numerical core against independent references.
    Selfcheck,
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Branin,
    Noise,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Matern52,
    Rbf,
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark surface to optimize.
    #[arg(long, value_enum)]
    objective: ObjectiveArg,
    /// Dimension of the noise objective.
    #[arg(long, default_value_t = 3)]
    noise_dim: usize,
    /// Smoothing variance of the noise objective.
    #[arg(long, default_value_t = 0.1)]
    noise_variance: f64,
    /// Noise grid resolution per dimension (default depends on dimension).
    #[arg(long)]
    noise_grid: Option<usize>,
    /// Comma-separated optimizer names.
    #[arg(long, value_delimiter = ',', default_value = "random,bayes")]
    optimizers: Vec<String>,
    /// Evaluations per optimizer per seed.
    #[arg(long, default_value_t = 30)]
    steps: usize,
    /// Independent seeded repetitions.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Random samples shared across optimizers at the start of each seed.
    #[arg(long, default_value_t = 10)]
    shared_initial: usize,
    /// Exploration bonus for the acquisition function.
    #[arg(long, default_value_t = 0.0)]
    zeta: f64,
    /// Surrogate kernel.
    #[arg(long, value_enum, default_value_t = KernelArg::Matern52)]
    kernel: KernelArg,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Base seed; repetition seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Selfcheck => selfcheck::run(),
        Command::Version => {
            println!("hypertune-bench {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: RunArgs) -> Result<(), BenchError> {
    let objective = match args.objective {
        ObjectiveArg::Branin => ObjectiveSpec::Branin,
        ObjectiveArg::Noise => ObjectiveSpec::Noise {
            dimension: args.noise_dim,
            smoothing_variance: args.noise_variance,
            grid_points_per_dim: args.noise_grid,
        },
    };
    let config = RunConfig {
        objective,
        optimizers: args.optimizers,
        steps: args.steps,
        seeds: args.seeds,
        shared_initial: args.shared_initial,
        out_dir: args.out,
        zeta: args.zeta,
        kernel: match args.kernel {
            KernelArg::Matern52 => KernelKind::Matern52,
            KernelArg::Rbf => KernelKind::Rbf,
        },
        base_seed: args.seed,
    };
    let summary = run_comparison(&config)?;
    println!(
        "completed {} repetition(s); wrote {} file(s) under {}",
        summary.per_seed.len(),
        summary.written.len(),
        config.out_dir.display()
    );
    for result in &summary.per_seed {
        for (name, series) in &result.series {
            if let Some(&(_, best)) = series.last() {
                println!("  seed {:>20}  {:<8} best {}", result.seed, name, best);
            }
        }
    }
    Ok(())
}
