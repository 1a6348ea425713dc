use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roundlab::experiment::{cmd_curve, cmd_gen, cmd_run, cmd_verify, with_threads, ExperimentConfig, JobOutput};

#[derive(Parser)]
#[command(name = "roundlab", version, about = "Communication-round lower-bound lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and validate the configured instance, then write it as JSON.
    Gen(Common),
    /// Run the configured solvers and write per-round and summary CSVs.
    Run(Common),
    /// Run the invariant battery; exit 1 if any check fails.
    Verify(Common),
    /// Emit the subspace-gap curve against its closed-form floor.
    Curve(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for grid points.
    #[arg(long, env = "ROUNDLAB_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, job): (&Common, fn(&ExperimentConfig, &std::path::Path) -> _) = match &cli.command {
        Command::Gen(c) => (c, cmd_gen),
        Command::Run(c) => (c, cmd_run),
        Command::Verify(c) => (c, cmd_verify),
        Command::Curve(c) => (c, cmd_curve),
    };
    let result = ExperimentConfig::from_file(&common.config).and_then(|mut cfg| {
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        with_threads(common.threads, || job(&cfg, &common.out))?
    });
    match result {
        Ok(JobOutput { stdout, failed, .. }) => {
            print!("{stdout}");
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed: {}", failed.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
