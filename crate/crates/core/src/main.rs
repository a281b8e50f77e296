use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rdsurf::cli::{error_json, run, Context};
use rdsurf::config::RunConfig;
use rdsurf::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Eigen,
    Bifurcations,
    Trace,
    Upsample,
    Verify,
    Marginal,
    Dispersion,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Bifurcations => "bifurcations",
            Command::Trace => "trace",
            Command::Upsample => "upsample",
            Command::Verify => "verify",
            Command::Marginal => "marginal",
            Command::Dispersion => "dispersion",
        }
    }
}

/// Bifurcation analysis of reaction-diffusion systems on triangulated surfaces.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Pipeline stage to run.
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory shared by all stages.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the eigensolver start block; overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent jobs for composition, tracing, upsampling and verification.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

fn execute(args: &Args) -> Result<(), Error> {
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let config = RunConfig::load(&args.config)?;
    let mut ctx = Context::new(config, &args.out);
    ctx.base = args
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    ctx.seed = args.seed;
    if let Some(w) = args.workers {
        ctx.workers = w;
    }
    run(args.command.name(), &ctx)
}
