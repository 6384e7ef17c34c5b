//! Configuration, sweep orchestration and validation for the `isac` tool.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use isac_core::optimizer::sweep;
use isac_core::{IsacError, Scheme, TradeoffPoint};

pub mod config;
pub mod output;
pub mod validate;

pub use config::RunConfig;
pub use output::RunManifest;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or invalid configuration.
    Config(String),
    /// The analysis failed at some parameter cell.
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IsacError> for CliError {
    fn from(e: IsacError) -> Self {
        match e {
            IsacError::InvalidConfig(_) | IsacError::EnumerationLimit { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Command-line overrides of the configured sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepFlags {
    pub scheme: Option<Scheme>,
    pub grid: Option<usize>,
    pub joint_search: bool,
}

impl SweepFlags {
    /// The configuration actually run, so the digest covers the overrides.
    pub fn apply(&self, cfg: &RunConfig) -> Result<RunConfig, CliError> {
        let mut out = cfg.clone();
        if let Some(s) = self.scheme {
            out.sweep.schemes = vec![s];
        }
        if let Some(n) = self.grid {
            if n < 2 {
                return Err(CliError::Config(format!("--grid must be at least 2, got {n}")));
            }
            out.numerics.grid_points = n;
        }
        out.numerics.joint_search |= self.joint_search;
        Ok(out)
    }
}

pub fn sweep_rows(cfg: &RunConfig) -> Result<Vec<TradeoffPoint>, CliError> {
    let rows = sweep(
        &cfg.system_config(),
        &cfg.sweep.detection_min,
        &cfg.sweep.urllc_error,
        &cfg.sweep.schemes,
        &cfg.grid(),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub config: RunConfig,
    pub rows: Vec<TradeoffPoint>,
    pub manifest: RunManifest,
}

/// Runs the configured sweep and writes the CSV table and its manifest.
pub fn run_sweep(config_path: &Path, out_path: &Path, flags: &SweepFlags) -> Result<SweepOutcome, CliError> {
    let config = flags.apply(&RunConfig::load(config_path)?)?;
    let rows = sweep_rows(&config)?;
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", out_path.display()));
    let file = File::create(out_path).map_err(io)?;
    output::write_csv(&rows, BufWriter::new(file))?;
    let manifest = RunManifest::new(config.digest(), rows.len());
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(output::manifest_path(out_path), text + "\n").map_err(io)?;
    Ok(SweepOutcome { config, rows, manifest })
}

/// Honors `ISAC_THREADS` by sizing the global pool.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ISAC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("ISAC_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}
