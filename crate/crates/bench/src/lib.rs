//! Shared fixtures for the benchmarks.

use isac_core::{CodingParams, SystemConfig};

/// Single-stream link at the figure settings.
pub fn figure_config() -> SystemConfig {
    let mut c = SystemConfig::homogeneous(0.5, 150, 10, 1, 6.0, 1.5);
    c.false_alarm = 1e-6;
    c.embb_target = 1e-3;
    c.urllc_msgs = 16;
    c.k_u = 2.0;
    c
}

pub fn interior_params() -> CodingParams {
    CodingParams::new(0.3, 0.5, 0.4, 0.3, 0.6, 0.5).expect("valid params")
}
