//! Grid search over the coding parameters under the URLLC reliability and
//! detection constraints, and the two baseline schemes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::channel::{BlockKind, CodingParams, SystemConfig};
use crate::error::{IsacError, Result};
use crate::rate::{
    block_capacities, delta_e, delta_e_homogeneous, detect_decode_probs, embb_rate_given, homogeneous_rate,
    previous_detection, rate_from_moments, tin_moments_collapsed, tin_moments_enumerated, BlockCapacities,
    Decoding, RateBound,
};
use crate::reliability::{urllc_components, urllc_error_bound, UrllcErrorComponents};
use crate::sensing::{
    chain_fixed_point, chain_from, detection_probability_or_blind, uniform_profile_min, DetectionProfile,
};
use crate::stats::{capacity, dispersion};

/// Rates closer than this are ties, broken by the smaller parameter vector.
pub const RATE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    DpcTin,
    DpcSic,
    PowerSharingTin,
    PowerSharingSic,
    TimeSharing,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::DpcTin,
        Scheme::DpcSic,
        Scheme::PowerSharingTin,
        Scheme::PowerSharingSic,
        Scheme::TimeSharing,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::DpcTin => "dpc-tin",
            Scheme::DpcSic => "dpc-sic",
            Scheme::PowerSharingTin => "power-sharing-tin",
            Scheme::PowerSharingSic => "power-sharing-sic",
            Scheme::TimeSharing => "time-sharing",
        }
    }

    pub fn from_label(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.label() == s)
    }

    fn decoding(self) -> Decoding {
        match self {
            Scheme::DpcSic | Scheme::PowerSharingSic => Decoding::Sic,
            _ => Decoding::Tin,
        }
    }
}

/// Values taken by one coding parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSpec {
    /// `points_per_axis` evenly spaced values from `lo` to `hi`.
    Range { lo: f64, hi: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
    /// In the order `α_u, α_s1, α_s2, β_u, β_s1, β_s2`.
    pub axes: [AxisSpec; 6],
    /// Search all six axes at once with the exact URLLC constraint instead
    /// of filtering the URLLC axes first.
    pub joint_search: bool,
}

impl GridSpec {
    /// Every axis over `[0, 1]`.
    pub fn full(points_per_axis: usize) -> Self {
        GridSpec {
            points_per_axis,
            axes: [AxisSpec::Range { lo: 0.0, hi: 1.0 }; 6],
            joint_search: false,
        }
    }

    /// The same grid with every DPC scaling fixed at zero.
    pub fn without_dpc(&self) -> Self {
        let mut g = *self;
        for k in 0..3 {
            g.axes[k] = AxisSpec::Fixed(0.0);
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 2 {
            return Err(IsacError::InvalidConfig(format!(
                "points_per_axis must be at least 2, got {}",
                self.points_per_axis
            )));
        }
        for axis in &self.axes {
            let ok = match *axis {
                AxisSpec::Range { lo, hi } => (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi,
                AxisSpec::Fixed(v) => (0.0..=1.0).contains(&v),
            };
            if !ok {
                return Err(IsacError::InvalidConfig(format!("grid axis {axis:?} is not inside [0, 1]")));
            }
        }
        Ok(())
    }

    fn values(&self, k: usize) -> Vec<f64> {
        match self.axes[k] {
            AxisSpec::Fixed(v) => vec![v],
            AxisSpec::Range { lo, hi } if lo == hi => vec![lo],
            AxisSpec::Range { lo, hi } => {
                let last = (self.points_per_axis - 1) as f64;
                (0..self.points_per_axis)
                    .map(|i| if i + 1 == self.points_per_axis { hi } else { lo + (hi - lo) * i as f64 / last })
                    .collect()
            }
        }
    }

    /// Evenly spaced fractions of `[0, 1]`.
    fn unit_values(&self) -> Vec<f64> {
        GridSpec::full(self.points_per_axis).values(0)
    }
}

/// Channel-use shares of the time-sharing baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFractions {
    pub sensing: f64,
    pub urllc: f64,
    /// `⌊ρ_s ℓ⌋` and `⌊ρ_u ℓ⌋`, computed exactly.
    pub sensing_uses: u32,
    pub urllc_uses: u32,
}

/// One pair of constraint levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub eps_u: f64,
    pub pd_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub scheme: Scheme,
    pub eps_u: f64,
    pub pd_min: f64,
    /// For time sharing, `β_u` carries the URLLC fraction and `β_s1`,
    /// `β_s2` the sensing fraction; every `α` is zero.
    pub params: CodingParams,
    pub fractions: Option<TimeFractions>,
    /// Optimized bound in nats per channel use, negative bounds read as 0;
    /// NaN when even the least-violating point has no rate.
    pub rate_nats: f64,
    pub rate_bits: f64,
    pub urllc_eps_max: f64,
    pub detection_min: f64,
    pub feasible: bool,
}

/// Evaluated grid point, as tracked by the search.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    key: [f64; 6],
    params: CodingParams,
    fractions: Option<TimeFractions>,
    rate: Option<f64>,
    urllc_eps: f64,
    detection_min: f64,
    violation: f64,
}

impl Candidate {
    fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    /// Strict preference: feasibility, then smaller violation, then rate
    /// beyond the tie tolerance, then the lexicographically smaller key.
    fn beats(&self, other: &Candidate) -> bool {
        if self.feasible() != other.feasible() {
            return self.feasible();
        }
        if !self.feasible() && self.violation != other.violation {
            return self.violation < other.violation;
        }
        let a = self.rate.unwrap_or(f64::NEG_INFINITY);
        let b = other.rate.unwrap_or(f64::NEG_INFINITY);
        if a > b + RATE_TIE {
            return true;
        }
        if b > a + RATE_TIE {
            return false;
        }
        self.key < other.key
    }

    fn into_point(self, scheme: Scheme, t: Targets) -> TradeoffPoint {
        let rate_nats = self.rate.unwrap_or(f64::NAN);
        TradeoffPoint {
            scheme,
            eps_u: t.eps_u,
            pd_min: t.pd_min,
            params: self.params,
            fractions: self.fractions,
            rate_nats,
            rate_bits: rate_nats / LN_2,
            urllc_eps_max: self.urllc_eps,
            detection_min: self.detection_min,
            feasible: self.feasible(),
        }
    }
}

fn offer(slot: &mut Option<Candidate>, c: Candidate) {
    match slot {
        Some(best) if !c.beats(best) => {}
        _ => *slot = Some(c),
    }
}

/// Merges per-chunk winners in chunk order.
fn merge(parts: Vec<Vec<Option<Candidate>>>, width: usize) -> Vec<Option<Candidate>> {
    let mut out = vec![None; width];
    for part in parts {
        for (slot, c) in out.iter_mut().zip(part) {
            if let Some(c) = c {
                offer(slot, c);
            }
        }
    }
    out
}

fn violation(urllc: f64, eps_u: f64, det_min: f64, pd_min: f64, rate: Option<f64>) -> f64 {
    let urllc_part = if urllc <= eps_u { 0.0 } else { urllc / eps_u - 1.0 };
    let det_part = (pd_min - det_min).max(0.0);
    let rate_part = if rate.is_some() { 0.0 } else { 1.0 };
    urllc_part + det_part + rate_part
}

/// Tags numerical failures with the parameter cell that produced them.
fn at_cell(e: IsacError, what: impl std::fmt::Display) -> IsacError {
    match e {
        IsacError::NumericalFailure { context, residual } => IsacError::NumericalFailure {
            context: format!("{context} (cell {what})"),
            residual,
        },
        other => other,
    }
}

fn describe(p: &CodingParams) -> String {
    format!(
        "alpha_u={} alpha_s1={} alpha_s2={} beta_u={} beta_s1={} beta_s2={}",
        p.alpha_u, p.alpha_s1, p.alpha_s2, p.beta_u, p.beta_s1, p.beta_s2
    )
}

/// Blocks whose gains must be evaluated separately.
fn distinct_blocks(cfg: &SystemConfig) -> usize {
    if cfg.equal_gains {
        1
    } else {
        cfg.num_blocks()
    }
}

/// Worst URLLC bound over blocks and over the unknown previous detection
/// probability, which enters affinely.
fn worst_case_urllc(comps: &[UrllcErrorComponents]) -> f64 {
    comps
        .iter()
        .map(|c| urllc_error_bound(c, 0.0).max(urllc_error_bound(c, 1.0)))
        .fold(0.0, f64::max)
}

struct UrllcPair {
    alpha_u: f64,
    beta_u: f64,
    comps: Vec<UrllcErrorComponents>,
    worst: f64,
}

fn urllc_pairs(cfg: &SystemConfig, grid: &GridSpec) -> Result<Vec<UrllcPair>> {
    let mut out = Vec::new();
    for &alpha_u in &grid.values(0) {
        for &beta_u in &grid.values(3) {
            let p = CodingParams {
                alpha_u,
                beta_u,
                ..CodingParams::default()
            };
            let comps = (0..distinct_blocks(cfg))
                .map(|b| urllc_components(cfg, &p, b))
                .collect::<Result<Vec<_>>>()?;
            let worst = worst_case_urllc(&comps);
            out.push(UrllcPair {
                alpha_u,
                beta_u,
                comps,
                worst,
            });
        }
    }
    Ok(out)
}

/// `(α_u, β_u)` grid points whose URLLC bound stays below `cfg.urllc_target`
/// in every block whatever the previous block's detection probability.
pub fn feasible_urllc_set(cfg: &SystemConfig, grid: &GridSpec) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    grid.validate()?;
    Ok(urllc_pairs(cfg, grid)?
        .into_iter()
        .filter(|p| p.worst <= cfg.urllc_target)
        .map(|p| (p.alpha_u, p.beta_u))
        .collect())
}

/// Detection probabilities of one kind over a two-axis slice of the grid,
/// indexed `[block][i * len(second) + j]`.
fn detection_table(
    cfg: &SystemConfig,
    kind: BlockKind,
    base: CodingParams,
    first: &[f64],
    second: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let cells: Vec<(f64, f64)> = first.iter().flat_map(|&a| second.iter().map(move |&b| (a, b))).collect();
    (0..distinct_blocks(cfg))
        .map(|b| {
            cells
                .par_iter()
                .map(|&(a, s)| {
                    let mut p = base;
                    match kind {
                        BlockKind::NoUrllc => {
                            p.alpha_s1 = a;
                            p.beta_s1 = s;
                        }
                        BlockKind::WithUrllc => {
                            p.alpha_s2 = a;
                            p.beta_s2 = s;
                        }
                    }
                    detection_probability_or_blind(cfg, &p, kind, b).map_err(|e| at_cell(e, describe(&p)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// Best points of the coding-parameter search for each decoding and each
/// target pair, indexed `[decoding][target]`.
fn search_coding(
    cfg: &SystemConfig,
    grid: &GridSpec,
    decodings: &[Decoding],
    targets: &[Targets],
) -> Result<Vec<Vec<Candidate>>> {
    cfg.validate()?;
    grid.validate()?;
    let vals: Vec<Vec<f64>> = (0..6).map(|k| grid.values(k)).collect();
    let pairs = urllc_pairs(cfg, grid)?;
    let loosest = targets.iter().map(|t| t.eps_u).fold(0.0, f64::max);
    let mut active: Vec<&UrllcPair> = if grid.joint_search {
        pairs.iter().collect()
    } else {
        pairs.iter().filter(|p| p.worst <= loosest).collect()
    };
    if active.is_empty() {
        // Nothing passes the URLLC filter: search the sensing axes of the
        // least-violating pair so an infeasible report is still complete.
        let best = pairs
            .iter()
            .min_by(|a, b| a.worst.total_cmp(&b.worst))
            .expect("grid has at least one point");
        active.push(best);
    }
    let without = detection_table(cfg, BlockKind::NoUrllc, CodingParams::default(), &vals[1], &vals[4])?;
    let width = decodings.len() * targets.len();
    let eta = cfg.num_blocks();

    let parts = active
        .par_iter()
        .map(|pair| -> Result<Vec<Option<Candidate>>> {
            let base = CodingParams {
                alpha_u: pair.alpha_u,
                beta_u: pair.beta_u,
                ..CodingParams::default()
            };
            let with = detection_table(cfg, BlockKind::WithUrllc, base, &vals[2], &vals[5])?;
            let mut best = vec![None; width];
            let mut rates = vec![None; decodings.len()];
            for (i1, &alpha_s1) in vals[1].iter().enumerate() {
                for (i2, &alpha_s2) in vals[2].iter().enumerate() {
                    for (j1, &beta_s1) in vals[4].iter().enumerate() {
                        for (j2, &beta_s2) in vals[5].iter().enumerate() {
                            let p = CodingParams {
                                alpha_s1,
                                alpha_s2,
                                beta_s1,
                                beta_s2,
                                ..base
                            };
                            let s1 = i1 * vals[4].len() + j1;
                            let s2 = i2 * vals[5].len() + j2;
                            let (det_min, urllc_eps) = if cfg.equal_gains {
                                let (d, w) = (without[0][s1], with[0][s2]);
                                let det_min = uniform_profile_min(d, w, eta);
                                let pstar = chain_fixed_point(d, w);
                                let comp = &pair.comps[0];
                                let block = block_capacities(cfg, &p, 0);
                                for (slot, &dec) in rates.iter_mut().zip(decodings) {
                                    *slot = homogeneous_rate(cfg, dec, comp, &block, pstar).value();
                                }
                                (det_min, urllc_error_bound(comp, pstar))
                            } else {
                                let profile = DetectionProfile {
                                    without: without.iter().map(|t| t[s1]).collect(),
                                    with: with.iter().map(|t| t[s2]).collect(),
                                    chain: Vec::new(),
                                };
                                let chain = chain_from(&profile.without, &profile.with);
                                let profile = DetectionProfile { chain, ..profile };
                                let prev = previous_detection(cfg, &profile);
                                for (slot, &dec) in rates.iter_mut().zip(decodings) {
                                    *slot = embb_rate_given(cfg, &p, dec, &prev)?.value();
                                }
                                let urllc = pair
                                    .comps
                                    .iter()
                                    .zip(&prev)
                                    .map(|(c, &d)| urllc_error_bound(c, d))
                                    .fold(0.0, f64::max);
                                (profile.min(), urllc)
                            };
                            let key = p.to_array();
                            let constrained = if grid.joint_search { urllc_eps } else { pair.worst };
                            for (k, &rate) in rates.iter().enumerate() {
                                for (t, target) in targets.iter().enumerate() {
                                    let c = Candidate {
                                        key,
                                        params: p,
                                        fractions: None,
                                        rate,
                                        urllc_eps,
                                        detection_min: det_min,
                                        violation: violation(constrained, target.eps_u, det_min, target.pd_min, rate),
                                    };
                                    offer(&mut best[k * targets.len() + t], c);
                                }
                            }
                        }
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = merge(parts, width);
    Ok(merged
        .chunks(targets.len())
        .map(|row| row.iter().map(|c| c.expect("every target sees at least one point")).collect())
        .collect())
}

fn coding_scheme(grid: &GridSpec, decoding: Decoding) -> Scheme {
    let dpc_free = (0..3).all(|k| grid.axes[k] == AxisSpec::Fixed(0.0));
    match (dpc_free, decoding) {
        (false, Decoding::Tin) => Scheme::DpcTin,
        (false, Decoding::Sic) => Scheme::DpcSic,
        (true, Decoding::Tin) => Scheme::PowerSharingTin,
        (true, Decoding::Sic) => Scheme::PowerSharingSic,
    }
}

/// Best grid point under `cfg.urllc_target` and `cfg.detection_target`.
pub fn optimize(cfg: &SystemConfig, decoding: Decoding, grid: &GridSpec) -> Result<TradeoffPoint> {
    let t = Targets {
        eps_u: cfg.urllc_target,
        pd_min: cfg.detection_target,
    };
    let best = search_coding(cfg, grid, &[decoding], &[t])?;
    Ok(best[0][0].into_point(coding_scheme(grid, decoding), t))
}

/// [`optimize`] with superposition only: every `α` is fixed at zero.
pub fn power_sharing_point(cfg: &SystemConfig, decoding: Decoding, grid: &GridSpec) -> Result<TradeoffPoint> {
    optimize(cfg, decoding, &grid.without_dpc())
}

/// Frame quantities of one time-sharing split.
struct Split {
    sensing_uses: u32,
    urllc_uses: u32,
}

fn split_detection(cfg: &SystemConfig, uses: u32) -> Result<Vec<f64>> {
    if uses == 0 {
        return Ok(vec![cfg.false_alarm; distinct_blocks(cfg)]);
    }
    let mut sub = cfg.clone();
    sub.block_len = uses;
    // All of the segment's power goes to a signal the radar treats as
    // unknown.
    let p = CodingParams {
        beta_s1: 1.0,
        ..CodingParams::default()
    };
    (0..distinct_blocks(cfg))
        .map(|b| detection_probability_or_blind(&sub, &p, BlockKind::NoUrllc, b))
        .collect()
}

fn split_urllc(cfg: &SystemConfig, uses: u32) -> Result<Option<Vec<UrllcErrorComponents>>> {
    if uses < 2 {
        return Ok(None);
    }
    let mut sub = cfg.clone();
    sub.block_len = uses;
    let p = CodingParams {
        beta_u: 1.0,
        ..CodingParams::default()
    };
    (0..distinct_blocks(cfg))
        .map(|b| urllc_components(&sub, &p, b))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// eMBB capacities of block `b` when `uses` of its channel uses carry
/// eMBB without interference, scaled to a per-use average.
fn split_capacity(cfg: &SystemConfig, b: usize, uses: u32) -> (f64, f64) {
    let share = uses as f64 / cfg.block_len as f64;
    cfg.comm_gains[b].iter().fold((0.0, 0.0), |(c, v), &g| {
        let snr = g * cfg.power;
        (c + share * capacity(snr), v + share * dispersion(snr))
    })
}

fn evaluate_split(cfg: &SystemConfig, s: &Split) -> Result<(Option<f64>, f64, f64, f64)> {
    let eta = cfg.num_blocks();
    let ell = cfg.block_len;
    let det = split_detection(cfg, s.sensing_uses)?;
    let (det_min, prev) = if cfg.equal_gains {
        let d = det[0];
        (uniform_profile_min(d, d, eta), vec![chain_fixed_point(d, d); eta])
    } else {
        let chain = chain_from(&det, &det);
        let profile = DetectionProfile {
            without: det.clone(),
            with: det,
            chain,
        };
        (profile.min(), previous_detection(cfg, &profile))
    };
    let Some(comps) = split_urllc(cfg, s.urllc_uses)? else {
        return Ok((None, 1.0, 1.0, det_min));
    };
    let worst = worst_case_urllc(&comps);
    let blocks: Vec<BlockCapacities> = (0..distinct_blocks(cfg))
        .map(|b| {
            let (c_without, v_without) = split_capacity(cfg, b, ell - s.sensing_uses);
            let (c_with, v_with) = split_capacity(cfg, b, ell - s.sensing_uses - s.urllc_uses);
            BlockCapacities {
                c_without,
                v_without,
                c_with,
                v_with,
                c_sic: c_with,
                v_sic: v_with,
            }
        })
        .collect();
    let (rate, urllc_eps): (RateBound, f64) = if cfg.equal_gains {
        let comp = &comps[0];
        let p_dt = detect_decode_probs(comp, prev[0]).p_dt;
        let m = tin_moments_collapsed(&blocks[0], p_dt);
        let delta = delta_e_homogeneous(cfg, prev[0], comp);
        (
            rate_from_moments(cfg, m.capacity, m.dispersion, delta),
            urllc_error_bound(comp, prev[0]),
        )
    } else {
        let p_dt: Vec<f64> = comps.iter().zip(&prev).map(|(c, &d)| detect_decode_probs(c, d).p_dt).collect();
        let m = tin_moments_enumerated(&blocks, &p_dt)?;
        let delta = delta_e(cfg, &prev, &comps);
        let urllc = comps
            .iter()
            .zip(&prev)
            .map(|(c, &d)| urllc_error_bound(c, d))
            .fold(0.0, f64::max);
        (rate_from_moments(cfg, m.capacity, m.dispersion, delta), urllc)
    };
    Ok((rate.value(), worst, urllc_eps, det_min))
}

fn search_time_sharing(cfg: &SystemConfig, grid: &GridSpec, targets: &[Targets]) -> Result<Vec<Candidate>> {
    cfg.validate()?;
    grid.validate()?;
    let fractions = grid.unit_values();
    let last = (grid.points_per_axis - 1) as u64;
    let ell = cfg.block_len as u64;
    let cells: Vec<(usize, usize)> = (0..fractions.len())
        .flat_map(|i| (0..fractions.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| (i as u64 * ell) / last + (j as u64 * ell) / last <= ell)
        .collect();
    let parts = cells
        .par_iter()
        .map(|&(i, j)| -> Result<Vec<Option<Candidate>>> {
            let split = Split {
                sensing_uses: ((i as u64 * ell) / last) as u32,
                urllc_uses: ((j as u64 * ell) / last) as u32,
            };
            let fr = TimeFractions {
                sensing: fractions[i],
                urllc: fractions[j],
                sensing_uses: split.sensing_uses,
                urllc_uses: split.urllc_uses,
            };
            let (rate, worst, urllc_eps, det_min) = evaluate_split(cfg, &split)
                .map_err(|e| at_cell(e, format!("sensing={} urllc={}", fr.sensing, fr.urllc)))?;
            let params = CodingParams {
                beta_u: fr.urllc,
                beta_s1: fr.sensing,
                beta_s2: fr.sensing,
                ..CodingParams::default()
            };
            Ok(targets
                .iter()
                .map(|t| {
                    Some(Candidate {
                        key: [fr.sensing, fr.urllc, 0.0, 0.0, 0.0, 0.0],
                        params,
                        fractions: Some(fr),
                        rate,
                        urllc_eps,
                        detection_min: det_min,
                        violation: violation(worst, t.eps_u, det_min, t.pd_min, rate),
                    })
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(parts, targets.len())
        .into_iter()
        .map(|c| c.expect("the all-zero split is always evaluated"))
        .collect())
}

/// Time-sharing baseline: sensing, URLLC and eMBB occupy disjoint channel
/// uses of each block, each at full power.
pub fn time_sharing_point(cfg: &SystemConfig, grid: &GridSpec) -> Result<TradeoffPoint> {
    let t = Targets {
        eps_u: cfg.urllc_target,
        pd_min: cfg.detection_target,
    };
    Ok(search_time_sharing(cfg, grid, &[t])?[0].into_point(Scheme::TimeSharing, t))
}

/// Every scheme at every `(ε_U, P_D_min)` pair; rows are ordered by scheme
/// as listed, then `ε_U`, then `P_D_min`.
pub fn sweep(
    cfg: &SystemConfig,
    pd_grid: &[f64],
    eps_u_list: &[f64],
    schemes: &[Scheme],
    grid: &GridSpec,
) -> Result<Vec<TradeoffPoint>> {
    if pd_grid.is_empty() || eps_u_list.is_empty() || schemes.is_empty() {
        return Err(IsacError::InvalidConfig("sweep lists must be nonempty".into()));
    }
    let targets: Vec<Targets> = eps_u_list
        .iter()
        .flat_map(|&eps_u| pd_grid.iter().map(move |&pd_min| Targets { eps_u, pd_min }))
        .collect();
    let mut results: Vec<(Scheme, Vec<Candidate>)> = Vec::new();
    for (dpc, family) in [
        (true, [Scheme::DpcTin, Scheme::DpcSic]),
        (false, [Scheme::PowerSharingTin, Scheme::PowerSharingSic]),
    ] {
        let wanted: Vec<Scheme> = family.into_iter().filter(|s| schemes.contains(s)).collect();
        if wanted.is_empty() {
            continue;
        }
        let g = if dpc { *grid } else { grid.without_dpc() };
        let decodings: Vec<Decoding> = wanted.iter().map(|s| s.decoding()).collect();
        let best = search_coding(cfg, &g, &decodings, &targets)?;
        results.extend(wanted.into_iter().zip(best));
    }
    if schemes.contains(&Scheme::TimeSharing) {
        results.push((Scheme::TimeSharing, search_time_sharing(cfg, grid, &targets)?));
    }
    let mut rows = Vec::with_capacity(schemes.len() * targets.len());
    for scheme in schemes {
        let (_, best) = results.iter().find(|(s, _)| s == scheme).expect("every scheme searched");
        rows.extend(best.iter().zip(&targets).map(|(c, &t)| c.into_point(*scheme, t)));
    }
    Ok(rows)
}
