//! Command-line front end for the `hermite-dirac` solvers.
//!
//! A run reads a TOML configuration, resolves it against a tier of defaults,
//! executes the requested mode and writes
//!
//! * `results.csv` and its JSON mirror `results.json`,
//! * one `t, norm, energy` series per impact parameter under `timeseries/`,
//! * `plot.dat` with `b_fm P_ct` pairs for the 2D and 3D geometries.
//!
//! Every file carries the SHA-256 of the resolved configuration and the
//! physical constants it was computed with.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod config;
pub mod run;
pub mod table;

use config::{Geometry, Mode, RunConfig, Settings, Tier};
use std::fs;
use std::path::{Path, PathBuf};
use table::{Provenance, ResultTable};

/// Exit status for configuration problems.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for solver failures.
pub const EXIT_SOLVER: i32 = 3;
/// Exit status for unreadable input or unwritable output.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] config::ConfigError),
    #[error("solver failure: {0}")]
    Solver(#[from] hermite_dirac::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Solver(_) => EXIT_SOLVER,
            Self::Io(_) => EXIT_IO,
        }
    }
}

impl From<table::TableError> for CliError {
    fn from(e: table::TableError) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Reads and resolves a configuration file; `mode` from the command line
/// must agree with the file when both are given.
pub fn load(path: &Path, mode: Option<Mode>, tier: Option<Tier>) -> Result<Settings, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg: RunConfig = config::parse(&text)?;
    match (cfg.mode, mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(config::ConfigError {
                path: "mode".into(),
                message: format!("file says {a:?} but the command is {b:?}"),
            }
            .into())
        }
        (None, Some(b)) => cfg.mode = Some(b),
        _ => {}
    }
    Ok(cfg.resolve(tier)?)
}

/// Paths written by [`execute`].
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plot: Option<PathBuf>,
    pub time_series: Vec<PathBuf>,
}

/// Runs `settings` and writes all outputs into `out`.
pub fn execute(settings: &Settings, out: &Path) -> Result<(ResultTable, Artifacts), CliError> {
    let canonical = serde_json::to_string(settings).expect("settings serialize");
    let provenance = Provenance::for_config(&canonical);
    fs::create_dir_all(out)?;
    let checkpoints = out.join("checkpoints");
    if settings.checkpoint_every > 0 {
        fs::create_dir_all(&checkpoints)?;
    }

    let points = if settings.mode == Mode::Stationary {
        vec![run::PointResult {
            row: run::stationary(settings)?,
            samples: Vec::new(),
        }]
    } else {
        run::collisions(settings, &checkpoints)?
    };

    let mut time_series = Vec::new();
    if settings.mode != Mode::Stationary {
        let dir = out.join("timeseries");
        fs::create_dir_all(&dir)?;
        for (b, p) in settings.b_fm.iter().zip(&points) {
            let path = dir.join(format!("{}.csv", run::point_stem(*b)));
            table::write_time_series(&path, &provenance, &p.samples)?;
            time_series.push(path);
        }
    }

    let table = ResultTable {
        provenance,
        rows: points.into_iter().map(|p| p.row).collect(),
    };
    let csv = out.join("results.csv");
    let json = out.join("results.json");
    table.write_csv(&csv)?;
    table.write_json(&json)?;
    let plot = if settings.mode != Mode::Stationary && settings.geometry != Geometry::Monopole {
        let path = out.join("plot.dat");
        if !table.emit_plot_data(&path)? {
            log::warn!("result table is empty; {} is empty", path.display());
        }
        Some(path)
    } else {
        None
    };
    Ok((
        table,
        Artifacts {
            csv,
            json,
            plot,
            time_series,
        },
    ))
}
