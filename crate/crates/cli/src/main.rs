use clap::{Parser, Subcommand};
use hermite_dirac_cli::config::{Mode, Tier};
use hermite_dirac_cli::{execute, load, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hdirac", version, about = "Two-center Dirac dynamics in a Hermite spline basis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Default grids and step counts.
    #[arg(long, global = true, value_enum)]
    tier: Option<Tier>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Bound 1s energy of the target.
    Stationary,
    /// Monopole collisions for each impact parameter.
    Collide1d,
    /// Axially symmetric collisions.
    Collide2d,
    /// Three-dimensional collisions.
    Collide3d,
    /// Impact-parameter sweep in the geometry named by the config.
    Sweep,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Self::Stationary => Mode::Stationary,
            Self::Collide1d => Mode::Collide1d,
            Self::Collide2d => Mode::Collide2d,
            Self::Collide3d => Mode::Collide3d,
            Self::Sweep => Mode::Sweep,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdirac: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli.config.as_ref().ok_or_else(|| {
        CliError::Config(hermite_dirac_cli::config::ConfigError {
            path: "--config".into(),
            message: "a configuration file is required".into(),
        })
    })?;
    let settings = load(config, Some(cli.command.mode()), cli.tier)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config(hermite_dirac_cli::config::ConfigError {
                path: "--threads".into(),
                message: "must be at least 1".into(),
            }));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let (table, artifacts) = execute(&settings, &cli.out)?;
    for row in &table.rows {
        log::info!("{row:?}");
    }
    log::info!("wrote {}", artifacts.csv.display());
    Ok(())
}
