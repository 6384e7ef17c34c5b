//! JSON run configuration.
//!
//! Physics parameters have no defaults. Only numerical knobs (`k_u`, `k_e`,
//! Berry–Esseen constants, grid size, model variants) fall back to the
//! library values when omitted.

use std::path::Path;

use isac_core::optimizer::GridSpec;
use isac_core::{NullNoncentrality, Scheme, SicVarianceVariant, SystemConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::CliError;

/// A gain given once for every block and stream, or per `[block][stream]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gains {
    Uniform(f64),
    PerBlock(Vec<Vec<f64>>),
}

impl Gains {
    fn expand(&self, blocks: usize, streams: usize) -> Vec<Vec<f64>> {
        match self {
            Gains::Uniform(g) => vec![vec![*g; streams]; blocks],
            Gains::PerBlock(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Average transmit power per channel use, linear scale.
    pub power: f64,
    /// Channel uses per block.
    pub block_len: u32,
    pub num_blocks: usize,
    pub num_streams: usize,
    pub comm_gain: Gains,
    pub sense_gain: Gains,
    pub false_alarm: f64,
    pub embb_error: f64,
    pub urllc_messages: u64,
    pub dpc_bins: u64,
    pub sense_codebook: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(serialize_with = "write_schemes", deserialize_with = "read_schemes")]
    pub schemes: Vec<Scheme>,
    pub urllc_error: Vec<f64>,
    pub detection_min: Vec<f64>,
}

fn default_k() -> f64 {
    1.0
}

fn default_grid() -> usize {
    21
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_k")]
    pub k_u: f64,
    #[serde(default = "default_k")]
    pub k_e: f64,
    #[serde(default)]
    pub berry_esseen_b: f64,
    #[serde(default)]
    pub berry_esseen_b_tilde: f64,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default)]
    pub joint_search: bool,
    #[serde(default)]
    pub sic_variance: SicVarianceVariant,
    #[serde(default)]
    pub null_noncentrality: NullNoncentrality,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            k_u: default_k(),
            k_e: default_k(),
            berry_esseen_b: 0.0,
            berry_esseen_b_tilde: 0.0,
            grid_points: default_grid(),
            joint_search: false,
            sic_variance: SicVarianceVariant::default(),
            null_noncentrality: NullNoncentrality::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

/// Accepts every scheme label plus `power-sharing` for the TIN variant.
pub fn parse_scheme(s: &str) -> Option<Scheme> {
    match s {
        "power-sharing" => Some(Scheme::PowerSharingTin),
        _ => Scheme::from_label(s),
    }
}

fn read_schemes<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Scheme>, D::Error> {
    let labels = Vec::<String>::deserialize(d)?;
    labels
        .iter()
        .map(|s| {
            parse_scheme(s).ok_or_else(|| {
                let known: Vec<&str> = Scheme::ALL.iter().map(|s| s.label()).collect();
                serde::de::Error::custom(format!("unknown scheme `{s}`, expected power-sharing or one of {known:?}"))
            })
        })
        .collect()
}

fn write_schemes<S: Serializer>(schemes: &[Scheme], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(schemes.iter().map(|x| x.label()))
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {msg}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Compact JSON with every default filled in and scheme aliases
    /// resolved. Parsing it back gives the same value.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    fn check(&self) -> Result<(), CliError> {
        let s = &self.system;
        if s.num_blocks == 0 {
            return Err(field("system.num_blocks", "must be at least 1"));
        }
        if s.num_streams == 0 {
            return Err(field("system.num_streams", "must be at least 1"));
        }
        for (name, g) in [("system.comm_gain", &s.comm_gain), ("system.sense_gain", &s.sense_gain)] {
            if let Gains::PerBlock(m) = g {
                if m.len() != s.num_blocks || m.iter().any(|r| r.len() != s.num_streams) {
                    return Err(field(name, format!("expected {} rows of {} gains", s.num_blocks, s.num_streams)));
                }
            }
        }
        let w = &self.sweep;
        if w.schemes.is_empty() {
            return Err(field("sweep.schemes", "must not be empty"));
        }
        for (name, list) in [("sweep.urllc_error", &w.urllc_error), ("sweep.detection_min", &w.detection_min)] {
            if list.is_empty() {
                return Err(field(name, "must not be empty"));
            }
            if let Some(v) = list.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(field(name, format!("{v} is not a probability")));
            }
        }
        if self.numerics.grid_points < 2 {
            return Err(field("numerics.grid_points", "must be at least 2"));
        }
        self.system_config()
            .validate()
            .map_err(|e| CliError::Config(format!("system: {e}")))
    }

    /// Library configuration with vacuous targets; the sweep sets them.
    pub fn system_config(&self) -> SystemConfig {
        let s = &self.system;
        let n = &self.numerics;
        let comm = s.comm_gain.expand(s.num_blocks, s.num_streams);
        let sense = s.sense_gain.expand(s.num_blocks, s.num_streams);
        let constant = |m: &Vec<Vec<f64>>| m.iter().flatten().all(|g| *g == m[0][0]);
        let equal_gains = !comm.is_empty() && !comm[0].is_empty() && constant(&comm) && constant(&sense);
        let mut cfg = SystemConfig::homogeneous(s.power, s.block_len, s.num_blocks, s.num_streams, 0.0, 0.0);
        cfg.comm_gains = comm;
        cfg.sense_gains = sense;
        cfg.equal_gains = equal_gains;
        cfg.false_alarm = s.false_alarm;
        cfg.embb_target = s.embb_error;
        cfg.urllc_msgs = s.urllc_messages;
        cfg.dpc_bins = s.dpc_bins;
        cfg.sense_codebook = s.sense_codebook;
        cfg.k_u = n.k_u;
        cfg.k_e = n.k_e;
        cfg.berry_esseen_b = n.berry_esseen_b;
        cfg.berry_esseen_b_tilde = n.berry_esseen_b_tilde;
        cfg.sic_variance = n.sic_variance;
        cfg.null_noncentrality = n.null_noncentrality;
        cfg
    }

    pub fn grid(&self) -> GridSpec {
        let mut g = GridSpec::full(self.numerics.grid_points);
        g.joint_search = self.numerics.joint_search;
        g
    }
}
