//! CSV tables and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use isac_core::TradeoffPoint;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const COLUMNS: [&str; 14] = [
    "scheme",
    "eps_u",
    "pd_min",
    "rate_bits",
    "rate_nats",
    "feasible",
    "alpha_u",
    "beta_u",
    "alpha_s1",
    "beta_s1",
    "alpha_s2",
    "beta_s2",
    "urllc_eps_max",
    "detection_min",
];

/// Seventeen significant digits, enough to recover the exact `f64`.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn record(p: &TradeoffPoint) -> Vec<String> {
    let c = &p.params;
    let mut out = vec![p.scheme.label().to_string(), real(p.eps_u), real(p.pd_min)];
    out.extend([p.rate_bits, p.rate_nats].map(real));
    out.push(p.feasible.to_string());
    out.extend([c.alpha_u, c.beta_u, c.alpha_s1, c.beta_s1, c.alpha_s2, c.beta_s2, p.urllc_eps_max, p.detection_min].map(real));
    out
}

pub fn write_csv<W: Write>(rows: &[TradeoffPoint], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS).map_err(io)?;
    for row in rows {
        out.write_record(record(row)).map_err(io)?;
    }
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub tool_version: String,
    pub timestamp: String,
    pub rows_emitted: usize,
}

impl RunManifest {
    pub fn new(config_digest: String, rows_emitted: usize) -> Self {
        RunManifest {
            config_digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            rows_emitted,
        }
    }
}

/// `results.csv` gets `results.manifest.json` next to it.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}
