mod commands;
mod config;
mod failure;
mod output;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use failure::Failure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "resfree", version, about = "Resonance-free region checks for repulsive Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = "RESFREE_THREADS")]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Virial window, distorted-operator scan and resonance check around E − iβμ.
    Certify(Common),
    /// σ_min(H_θ − z) over a rectangle, with eigenvalues.
    Scan(Common),
    /// Weyl-sequence residuals along the essential-spectrum line.
    Weyl(Common),
    /// Classical trajectory with the escape function along it.
    Classical(Common),
    /// Table of r_θ, ∂r_θ/∂r, J and φ on the grid.
    Distort(Common),
    /// Virial window and its certificate.
    Virial(Common),
}

fn run(command: Command) -> Result<commands::Run, Failure> {
    let (common, body): (Common, fn(&RunConfig) -> Result<commands::Run, Failure>) = match command {
        Command::Certify(c) => (c, commands::certify),
        Command::Scan(c) => (c, commands::scan),
        Command::Weyl(c) => (c, commands::weyl),
        Command::Classical(c) => (c, commands::classical),
        Command::Distort(c) => (c, commands::distort),
        Command::Virial(c) => (c, commands::virial),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Validation("--threads: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation(format!("--threads: {e}")))?;
    }
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let run = body(&cfg)?;
    run.outputs.write_all(&common.out)?;
    Ok(run)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(r) => {
            eprintln!("{}", r.summary);
            ExitCode::from(r.exit as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
