use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smalljump::cli::{dispatch, Command, Failure};
use smalljump::config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "smalljump", version, about = "Small-jump Poisson versus Brownian SPDE simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed, overriding `ensemble.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Print eps, alpha(eps), eps/alpha and the ratio verdict.
    Alpha,
    /// Write one path's saved states to path.csv.
    Simulate,
    /// Write converge.csv: jump ensembles against the Brownian reference.
    Converge,
    /// Write generator_check.csv: generator gaps over the eps grid.
    GeneratorCheck,
    /// Run the model and measure property suite.
    Invariants,
    /// Write sigma_sweep.csv: coupled projected-sigma exceedance.
    SigmaSweep,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Alpha => Command::Alpha,
            Sub::Simulate => Command::Simulate,
            Sub::Converge => Command::Converge,
            Sub::GeneratorCheck => Command::GeneratorCheck,
            Sub::Invariants => Command::Invariants,
            Sub::SigmaSweep => Command::SigmaSweep,
        }
    }
}

fn fail(f: Failure, command: Option<Command>) -> ExitCode {
    eprintln!("{}", f.diagnostic(command));
    ExitCode::from(f.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let e = ConfigError::Usage { message: e.kind().to_string() };
            return fail(e.into(), None);
        }
    };
    let command = Command::from(cli.command);
    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => return fail(e.into(), Some(command)),
        },
        None => RunConfig::defaults(),
    };
    if let Some(seed) = cli.seed {
        cfg.ensemble.seed = seed;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            let e = ConfigError::Range { field: "--threads".into(), message: "must be at least 1".into() };
            return fail(e.into(), Some(command));
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let e = ConfigError::Range { field: "--threads".into(), message: e.to_string() };
            return fail(e.into(), Some(command));
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let result = pool.install(|| dispatch(command, &cfg, &mut stdout.lock(), &mut stderr.lock()));
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f, Some(command)),
    }
}
