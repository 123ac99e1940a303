use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gawq::config::RunConfig;
use gawq::run::{output_dir, run, Command};
use gawq::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Spectrum,
    Singularity,
    Poles,
    Trajectory,
    Modes,
    Evolve,
    Verify,
    DumpConfig,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Spectrum => Command::Spectrum,
            Sub::Singularity => Command::Singularity,
            Sub::Poles => Command::Poles,
            Sub::Trajectory => Command::Trajectory,
            Sub::Modes => Command::Modes,
            Sub::Evolve => Command::Evolve,
            Sub::Verify => Command::Verify,
            Sub::DumpConfig => Command::DumpConfig,
        }
    }
}

/// Giant-atom waveguide scattering, poles and packet dynamics.
///
/// Exit codes: 0 ok, 1 I/O error, 2 config or argument error, 3 numerical
/// error, 4 boundary violation, 5 verification failure.
#[derive(Debug, Parser)]
#[command(name = "gawq", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Sub,
    /// Flat `key = value` configuration file.
    config: PathBuf,
    /// Output directory (overrides `out.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(&cli.config)?;
    let cfg = RunConfig::parse(&text)?;
    let out = output_dir(&cfg, cli.out.as_deref());
    let outcome = run(cli.subcommand.into(), &cfg, &out)?;
    for m in &outcome.messages {
        println!("{m}");
    }
    for f in &outcome.files {
        log::info!("wrote {}", f.display());
    }
    if outcome.failed {
        let err = Error::Verification("one or more acceptance criteria failed".into());
        eprintln!("error: {err}");
        return Ok(ExitCode::from(err.exit_code() as u8));
    }
    Ok(ExitCode::SUCCESS)
}
