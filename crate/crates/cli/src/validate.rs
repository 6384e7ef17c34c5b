//! Monte Carlo oracle suite behind `isac validate`.

use isac_core::montecarlo::{dkw_epsilon, mc_detection, mc_gchisq_samples, mc_info_density};
use isac_core::reliability::urllc_moments;
use isac_core::sensing::detection_probability;
use isac_core::{BlockKind, CodingParams, GeneralizedChiSquare, RngStream, SystemConfig};
use rand::Rng;
use serde::Serialize;

use crate::CliError;

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Seed of the generalized chi-square cases; fixed so that `--seed` only
/// changes the simulated draws.
const CASE_SEED: u64 = 0x15ac;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub trials: usize,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64, trials: usize) -> Self {
        Check {
            name: name.into(),
            measured,
            expected,
            tolerance,
            trials,
            pass: (measured - expected).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn verdicts(&self) -> Vec<(String, bool)> {
        self.checks.iter().map(|c| (c.name.clone(), c.pass)).collect()
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<26} {:>8} {:>14} {:>14} {:>12} {:>9}\n",
            "check", "verdict", "measured", "expected", "tolerance", "trials"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<26} {:>8} {:>14.6e} {:>14.6e} {:>12.3e} {:>9}\n",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.measured,
                c.expected,
                c.tolerance,
                c.trials
            ));
        }
        out
    }
}

/// The link used by the detection and information-density checks.
pub fn reference_config(false_alarm: f64) -> SystemConfig {
    let mut c = SystemConfig::homogeneous(0.5, 150, 10, 1, 1.0, 1.0);
    c.false_alarm = false_alarm;
    c.embb_target = 1e-3;
    c.urllc_msgs = 16;
    c
}

/// Random generalized chi-square laws with up to four components and 150
/// degrees of freedom, reproducible from `case_seed`.
pub fn random_laws(count: usize, case_seed: u64) -> Vec<GeneralizedChiSquare> {
    let mut rng = RngStream::new(case_seed, 0).rng();
    (0..count)
        .map(|_| {
            let q = rng.random_range(1..=4);
            let weights = (0..q).map(|_| rng.random_range(0.05..2.0)).collect();
            let nc = (0..q).map(|_| rng.random_range(0.0..200.0)).collect();
            GeneralizedChiSquare::new(weights, 150, nc).expect("valid law")
        })
        .collect()
}

fn numerical(e: isac_core::IsacError) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Tolerances widen as `trials` shrinks and equal the fixed budgets at
/// the default count.
pub fn run(trials: usize, seed: u64) -> Result<Report, CliError> {
    if trials == 0 {
        return Err(CliError::Config("--trials must be positive".into()));
    }
    let mut checks = Vec::new();
    let mut stream = 0u64;
    let mut next = || {
        stream += 1;
        RngStream::new(seed, stream)
    };

    let n = 10 * trials;
    for (k, d) in random_laws(3, CASE_SEED).iter().enumerate() {
        let e = mc_gchisq_samples(d, n, next());
        let gap = e.max_gap(1000, |x| d.cdf(x)).map_err(numerical)?;
        checks.push(Check::new(format!("gchisq-dkw-{k}"), gap, 0.0, dkw_epsilon(n, 0.99) + 1e-4, n));
    }

    let cfg = reference_config(1e-2);
    let p = CodingParams::new(0.5, 0.5, 0.5, 0.5, 0.5, 0.5).expect("valid params");
    let agreement = 0.02f64.max(4.0 * (0.25 / trials as f64).sqrt());
    for (label, kind) in [("no-urllc", BlockKind::NoUrllc), ("with-urllc", BlockKind::WithUrllc)] {
        let exact = detection_probability(&cfg, &p, kind, 0).map_err(numerical)?;
        let mc = mc_detection(&cfg, &p, kind, 0, trials, next()).map_err(numerical)?;
        let fa_se = (cfg.false_alarm * (1.0 - cfg.false_alarm) / trials as f64).sqrt();
        checks.push(Check::new(format!("detection-{label}"), mc.p_d_hat, exact, agreement, trials));
        checks.push(Check::new(format!("false-alarm-{label}"), mc.p_fa_hat, cfg.false_alarm, 3.0 * fa_se, trials));
    }

    let p = CodingParams::new(0.0, 0.0, 0.0, 0.5, 0.0, 0.0).expect("valid params");
    let m = trials.max(1000);
    let (cap, disp) = urllc_moments(&cfg, &p, 0);
    let ell = cfg.block_len as f64;
    let mc = mc_info_density(&cfg, &p, 0, m, next()).map_err(numerical)?;
    let mean_tol = (0.01 * ell * cap).max(4.0 * (ell * disp / m as f64).sqrt());
    let var_tol = ell * disp * 0.1f64.max(4.0 * (2.0 / m as f64).sqrt());
    checks.push(Check::new("info-density-mean", mc.mean, ell * cap, mean_tol, m));
    checks.push(Check::new("info-density-variance", mc.variance, ell * disp, var_tol, m));

    Ok(Report { seed, checks })
}
