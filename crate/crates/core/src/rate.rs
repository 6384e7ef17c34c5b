//! Finite-blocklength upper bounds on the eMBB rate when URLLC
//! interference is treated as noise or cancelled after decoding.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use crate::channel::{snr_ratios, CodingParams, SystemConfig};
use crate::error::{IsacError, Result};
use crate::reliability::{urllc_components, UrllcErrorComponents};
use crate::sensing::{chain_fixed_point, detection_profile, DetectionProfile};
use crate::stats::{capacity, dispersion, q_inv};

/// Largest frame for which detection subsets are enumerated.
pub const TIN_ENUMERATION_LIMIT: usize = 14;
/// Largest frame for which (detected, decoded) pairs are enumerated.
pub const SIC_ENUMERATION_LIMIT: usize = 9;

/// How the eMBB receiver handles URLLC interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoding {
    Tin,
    Sic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    /// Bound on `ln M_e / n`; NaN when infeasible.
    pub rate_nats: f64,
    /// Effective capacity, nats per channel use.
    pub c_eff: f64,
    pub v_eff: f64,
    pub delta_e: f64,
    /// `ε_e − Δ_e` lies in `(0, 1)`.
    pub feasible: bool,
    pub rate_negative: bool,
}

impl RateBound {
    /// Rate credited to the optimizer: negative bounds count as zero,
    /// infeasible ones as nothing at all.
    pub fn value(&self) -> Option<f64> {
        self.feasible.then(|| self.rate_nats.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectDecodeProbs {
    /// A URLLC message is flagged in the block.
    pub p_dt: f64,
    /// A flagged URLLC message is decoded correctly.
    pub p_dc: f64,
}

/// Capacities and dispersions of one block summed over its streams, for
/// each of the three interference situations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockCapacities {
    pub c_without: f64,
    pub v_without: f64,
    pub c_with: f64,
    pub v_with: f64,
    pub c_sic: f64,
    pub v_sic: f64,
}

/// Averages over the detection (and decoding) patterns of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMoments {
    pub capacity: f64,
    pub dispersion: f64,
    /// Total probability of the enumerated patterns.
    pub mass: f64,
}

pub fn block_capacities(cfg: &SystemConfig, p: &CodingParams, b: usize) -> BlockCapacities {
    let mut out = BlockCapacities::default();
    for j in 0..cfg.num_streams() {
        let r = snr_ratios(cfg, p, b, j);
        out.c_without += capacity(r.embb_without);
        out.v_without += dispersion(r.embb_without);
        out.c_with += capacity(r.embb_with);
        out.v_with += dispersion(r.embb_with);
        out.c_sic += capacity(r.embb_sic);
        out.v_sic += dispersion(r.embb_sic);
    }
    out
}

pub fn detect_decode_probs(comp: &UrllcErrorComponents, p_prev_detect: f64) -> DetectDecodeProbs {
    let p_dt = p_prev_detect * (1.0 - comp.eps_hat_1_pow) + (1.0 - p_prev_detect) * comp.p_u2;
    DetectDecodeProbs {
        p_dt: p_dt.clamp(0.0, 1.0),
        p_dc: (1.0 - comp.eps_tilde_1 - comp.eps_tilde_2).clamp(0.0, 1.0),
    }
}

/// Blocklength remainder of `Δ_e` that does not depend on detection.
fn delta_remainder(cfg: &SystemConfig) -> f64 {
    let n = cfg.frame_len() as f64;
    let n_k = n.powf(cfg.k_e);
    cfg.berry_esseen_b_tilde / n.sqrt() * (1.0 + 4.0 / n_k) + 2.0 * LN_2 / (n_k * (2.0 * n * PI).sqrt())
}

/// Probability that block detection goes wrong, `P·ε̃^M + (1 − P)·P_U2`.
fn detection_deficit(comp: &UrllcErrorComponents, p_prev_detect: f64) -> f64 {
    (p_prev_detect * comp.eps_tilde_1_pow + (1.0 - p_prev_detect) * comp.p_u2).clamp(0.0, 1.0)
}

/// `Δ_e` for per-block previous detection probabilities and components.
///
/// The subset sum over detection patterns factorizes into a product over
/// blocks, which is evaluated in log space.
pub fn delta_e(cfg: &SystemConfig, p_prev_detect: &[f64], comps: &[UrllcErrorComponents]) -> f64 {
    debug_assert_eq!(p_prev_detect.len(), comps.len());
    let log_all_right: f64 = p_prev_detect
        .iter()
        .zip(comps)
        .map(|(&p, c)| (-detection_deficit(c, p)).ln_1p())
        .sum();
    delta_remainder(cfg) - log_all_right.exp_m1()
}

/// `Δ_e` with the same previous detection probability in each of `η` blocks.
pub fn delta_e_homogeneous(cfg: &SystemConfig, p_prev_detect: f64, comp: &UrllcErrorComponents) -> f64 {
    let eta = cfg.num_blocks() as f64;
    delta_remainder(cfg) - (eta * (-detection_deficit(comp, p_prev_detect)).ln_1p()).exp_m1()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Capacity averaged over every detection subset, with per-block
/// detection probabilities.
pub fn tin_moments_enumerated(blocks: &[BlockCapacities], p_dt: &[f64]) -> Result<PatternMoments> {
    let eta = blocks.len();
    if eta > TIN_ENUMERATION_LIMIT {
        return Err(IsacError::EnumerationLimit {
            blocks: eta,
            limit: TIN_ENUMERATION_LIMIT,
        });
    }
    let (mut c, mut v, mut mass) = (Compensated::default(), Compensated::default(), Compensated::default());
    for subset in 0u32..(1 << eta) {
        let mut prob = 1.0;
        let (mut ct, mut vt) = (0.0, 0.0);
        for (b, blk) in blocks.iter().enumerate() {
            if subset >> b & 1 == 1 {
                prob *= p_dt[b];
                ct += blk.c_with;
                vt += blk.v_with;
            } else {
                prob *= 1.0 - p_dt[b];
                ct += blk.c_without;
                vt += blk.v_without;
            }
        }
        c.add(prob * ct / eta as f64);
        v.add(prob * vt / eta as f64);
        mass.add(prob);
    }
    Ok(PatternMoments {
        capacity: c.value(),
        dispersion: v.value(),
        mass: mass.value(),
    })
}

/// Capacity averaged over every (detected, decoded) pair of block sets.
pub fn sic_moments_enumerated(blocks: &[BlockCapacities], probs: &[DetectDecodeProbs]) -> Result<PatternMoments> {
    let eta = blocks.len();
    if eta > SIC_ENUMERATION_LIMIT {
        return Err(IsacError::EnumerationLimit {
            blocks: eta,
            limit: SIC_ENUMERATION_LIMIT,
        });
    }
    let (mut c, mut v, mut mass) = (Compensated::default(), Compensated::default(), Compensated::default());
    let total = 3u32.pow(eta as u32);
    for pattern in 0..total {
        let mut code = pattern;
        let mut prob = 1.0;
        let (mut ct, mut vt) = (0.0, 0.0);
        for (blk, pr) in blocks.iter().zip(probs) {
            match code % 3 {
                0 => {
                    prob *= 1.0 - pr.p_dt;
                    ct += blk.c_without;
                    vt += blk.v_without;
                }
                1 => {
                    prob *= pr.p_dt * (1.0 - pr.p_dc);
                    ct += blk.c_with;
                    vt += blk.v_with;
                }
                _ => {
                    prob *= pr.p_dt * pr.p_dc;
                    ct += blk.c_sic;
                    vt += blk.v_sic;
                }
            }
            code /= 3;
        }
        c.add(prob * ct / eta as f64);
        v.add(prob * vt / eta as f64);
        mass.add(prob);
    }
    Ok(PatternMoments {
        capacity: c.value(),
        dispersion: v.value(),
        mass: mass.value(),
    })
}

/// Equal-gain form: each block independently sees no URLLC or a flagged
/// one.
pub fn tin_moments_collapsed(block: &BlockCapacities, p_dt: f64) -> PatternMoments {
    PatternMoments {
        capacity: (1.0 - p_dt) * block.c_without + p_dt * block.c_with,
        dispersion: (1.0 - p_dt) * block.v_without + p_dt * block.v_with,
        mass: 1.0,
    }
}

pub fn sic_moments_collapsed(block: &BlockCapacities, probs: DetectDecodeProbs) -> PatternMoments {
    let DetectDecodeProbs { p_dt, p_dc } = probs;
    PatternMoments {
        capacity: (1.0 - p_dt) * block.c_without + p_dt * ((1.0 - p_dc) * block.c_with + p_dc * block.c_sic),
        dispersion: (1.0 - p_dt) * block.v_without + p_dt * ((1.0 - p_dc) * block.v_with + p_dc * block.v_sic),
        mass: 1.0,
    }
}

/// Assembles the normal-approximation bound from the effective moments.
pub fn rate_from_moments(cfg: &SystemConfig, c_eff: f64, v_eff: f64, delta_e: f64) -> RateBound {
    let n = cfg.frame_len() as f64;
    let target = cfg.embb_target - delta_e;
    let feasible = target > 0.0 && target < 1.0;
    let rate_nats = match q_inv(target) {
        Ok(z) if feasible => {
            c_eff - (v_eff / n).sqrt() * z - cfg.k_e * n.ln() / n - (cfg.sense_codebook as f64).ln() / n
        }
        _ => f64::NAN,
    };
    RateBound {
        rate_nats,
        c_eff,
        v_eff,
        delta_e,
        feasible,
        rate_negative: feasible && rate_nats < 0.0,
    }
}

/// Rate bound for equal gains, given one block's URLLC components and
/// capacities and the stationary previous-block detection probability.
pub fn homogeneous_rate(
    cfg: &SystemConfig,
    decoding: Decoding,
    comp: &UrllcErrorComponents,
    block: &BlockCapacities,
    p_prev_detect: f64,
) -> RateBound {
    let probs = detect_decode_probs(comp, p_prev_detect);
    let m = match decoding {
        Decoding::Tin => tin_moments_collapsed(block, probs.p_dt),
        Decoding::Sic => sic_moments_collapsed(block, probs),
    };
    let delta = delta_e_homogeneous(cfg, p_prev_detect, comp);
    rate_from_moments(cfg, m.capacity, m.dispersion, delta)
}

/// Detection probability of the block before each block.
///
/// With equal gains every block uses the stationary value of the chain;
/// otherwise the chain itself is used, starting from no detection before
/// the first block.
pub fn previous_detection(cfg: &SystemConfig, profile: &DetectionProfile) -> Vec<f64> {
    let eta = cfg.num_blocks();
    if cfg.equal_gains {
        return vec![chain_fixed_point(profile.without[0], profile.with[0]); eta];
    }
    std::iter::once(0.0).chain(profile.chain.iter().copied()).take(eta).collect()
}

/// Rate bound given the previous-block detection probabilities.
pub fn embb_rate_given(
    cfg: &SystemConfig,
    p: &CodingParams,
    decoding: Decoding,
    p_prev_detect: &[f64],
) -> Result<RateBound> {
    let eta = cfg.num_blocks();
    if p_prev_detect.len() != eta {
        return Err(IsacError::InvalidConfig(format!(
            "expected {eta} previous-block detection probabilities, got {}",
            p_prev_detect.len()
        )));
    }
    if cfg.equal_gains && p_prev_detect.iter().all(|&x| x == p_prev_detect[0]) {
        let comp = urllc_components(cfg, p, 0)?;
        let block = block_capacities(cfg, p, 0);
        return Ok(homogeneous_rate(cfg, decoding, &comp, &block, p_prev_detect[0]));
    }
    let comps = (0..eta)
        .map(|b| urllc_components(cfg, p, b))
        .collect::<Result<Vec<_>>>()?;
    let blocks: Vec<_> = (0..eta).map(|b| block_capacities(cfg, p, b)).collect();
    let probs: Vec<_> = comps
        .iter()
        .zip(p_prev_detect)
        .map(|(c, &d)| detect_decode_probs(c, d))
        .collect();
    let m = match decoding {
        Decoding::Tin => {
            let p_dt: Vec<f64> = probs.iter().map(|x| x.p_dt).collect();
            tin_moments_enumerated(&blocks, &p_dt)?
        }
        Decoding::Sic => sic_moments_enumerated(&blocks, &probs)?,
    };
    let delta = delta_e(cfg, p_prev_detect, &comps);
    Ok(rate_from_moments(cfg, m.capacity, m.dispersion, delta))
}

pub fn embb_rate(cfg: &SystemConfig, p: &CodingParams, decoding: Decoding) -> Result<RateBound> {
    let profile = detection_profile(cfg, p)?;
    embb_rate_given(cfg, p, decoding, &previous_detection(cfg, &profile))
}

pub fn tin_rate(cfg: &SystemConfig, p: &CodingParams) -> Result<RateBound> {
    embb_rate(cfg, p, Decoding::Tin)
}

pub fn sic_rate(cfg: &SystemConfig, p: &CodingParams) -> Result<RateBound> {
    embb_rate(cfg, p, Decoding::Sic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reliability::UrllcCodeSetup;
    use proptest::prelude::*;

    fn cfg(eta: usize, q: usize) -> SystemConfig {
        let mut c = SystemConfig::homogeneous(0.5, 150, eta, q, 1.0, 1.0);
        c.false_alarm = 1e-2;
        c.embb_target = 1e-3;
        c.urllc_msgs = 32;
        c
    }

    fn comp_with(eps1_pow: f64, p_u2: f64) -> UrllcErrorComponents {
        UrllcErrorComponents {
            eps_tilde_1: 0.0,
            eps_tilde_2: 0.0,
            eps_hat_1: 0.0,
            p_u1: 0.0,
            p_u2,
            c_u: 0.0,
            v_u: 0.0,
            eps_tilde_1_pow: eps1_pow,
            eps_hat_1_pow: eps1_pow,
        }
    }

    fn blocks_from(values: &[[f64; 6]]) -> Vec<BlockCapacities> {
        values
            .iter()
            .map(|v| BlockCapacities {
                c_without: v[0],
                v_without: v[1],
                c_with: v[2],
                v_with: v[3],
                c_sic: v[4],
                v_sic: v[5],
            })
            .collect()
    }

    #[test]
    fn detect_decode_examples() {
        let mut c = comp_with(0.0, 0.0);
        assert_eq!(detect_decode_probs(&c, 0.0).p_dt, 0.0);
        assert_eq!(detect_decode_probs(&c, 0.3).p_dc, 1.0);
        c.eps_hat_1_pow = 0.1f64.powi(4);
        c.p_u2 = 0.05;
        let got = detect_decode_probs(&c, 0.8).p_dt;
        assert!((got - 0.80992).abs() < 1e-15, "{got}");
    }

    #[test]
    fn perfect_detection_leaves_only_the_remainder() {
        let c = cfg(10, 1);
        let n = 1500.0f64;
        let want = 2.0 * LN_2 / (n * (2.0 * n * PI).sqrt());
        for p in [0.0, 0.4, 1.0] {
            let got = delta_e_homogeneous(&c, p, &comp_with(0.0, 0.0));
            assert!((got - want).abs() < 1e-18, "{got} vs {want}");
        }
    }

    /// Direct sum over all 2^η subsets, written independently of the
    /// product form.
    fn delta_brute_force(c: &SystemConfig, prev: &[f64], comps: &[UrllcErrorComponents]) -> f64 {
        let eta = prev.len();
        let mut s = 0.0;
        for subset in 0..(1usize << eta) {
            let mut term = 1.0;
            for b in 0..eta {
                let detected = prev[b] * (1.0 - comps[b].eps_tilde_1_pow);
                let quiet = (1.0 - prev[b]) * (1.0 - comps[b].p_u2);
                term *= if subset & (1 << b) != 0 { detected } else { quiet };
            }
            s += term;
        }
        let n = c.frame_len() as f64;
        let nk = n.powf(c.k_e);
        1.0 + c.berry_esseen_b_tilde / n.sqrt() * (1.0 + 4.0 / nk) + 2.0 * LN_2 / (nk * (2.0 * n * PI).sqrt()) - s
    }

    #[test]
    fn delta_matches_subset_enumeration() {
        let mut c = cfg(6, 1);
        c.berry_esseen_b_tilde = 0.3;
        let prev = [0.0, 0.91, 0.42, 0.77, 0.05, 0.63];
        let comps: Vec<_> = [(1e-3, 2e-2), (0.2, 1e-4), (0.0, 0.3), (0.6, 0.0), (1e-9, 0.1), (0.33, 0.07)]
            .iter()
            .map(|&(e, u)| comp_with(e, u))
            .collect();
        let got = delta_e(&c, &prev, &comps);
        let want = delta_brute_force(&c, &prev, &comps);
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn single_block_delta_matches_collapse() {
        let c = cfg(1, 1);
        let comp = comp_with(0.02, 0.01);
        let a = delta_e(&c, &[0.7], &[comp]);
        let b = delta_e_homogeneous(&c, 0.7, &comp);
        assert_eq!(a, b);
    }

    #[test]
    fn tin_enumeration_matches_collapse() {
        let c = cfg(6, 2);
        let p = CodingParams::new(0.3, 0.4, 0.6, 0.2, 0.5, 0.3).unwrap();
        let block = block_capacities(&c, &p, 0);
        for p_dt in [0.0, 0.137, 0.5, 0.93, 1.0] {
            let e = tin_moments_enumerated(&vec![block; 6], &[p_dt; 6]).unwrap();
            let k = tin_moments_collapsed(&block, p_dt);
            assert!((e.capacity - k.capacity).abs() <= 1e-12 * k.capacity);
            assert!((e.dispersion - k.dispersion).abs() <= 1e-12 * k.dispersion);
            assert!((e.mass - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sic_enumeration_matches_collapse() {
        let c = cfg(5, 1);
        let p = CodingParams::new(0.3, 0.4, 0.6, 0.2, 0.5, 0.3).unwrap();
        let block = block_capacities(&c, &p, 0);
        for (p_dt, p_dc) in [(0.0, 0.5), (0.4, 0.0), (0.61, 0.97), (1.0, 1.0), (0.25, 0.5)] {
            let probs = DetectDecodeProbs { p_dt, p_dc };
            let e = sic_moments_enumerated(&vec![block; 5], &[probs; 5]).unwrap();
            let k = sic_moments_collapsed(&block, probs);
            assert!((e.capacity - k.capacity).abs() <= 1e-12 * k.capacity);
            assert!((e.dispersion - k.dispersion).abs() <= 1e-12 * k.dispersion);
            assert!((e.mass - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sic_without_decoding_is_tin() {
        let blocks = blocks_from(&[
            [0.3, 0.2, 0.1, 0.15, 0.25, 0.18],
            [0.5, 0.3, 0.2, 0.2, 0.45, 0.29],
            [0.2, 0.1, 0.05, 0.04, 0.19, 0.09],
        ]);
        let p_dt = [0.2, 0.7, 0.45];
        let probs: Vec<_> = p_dt.iter().map(|&p| DetectDecodeProbs { p_dt: p, p_dc: 0.0 }).collect();
        let tin = tin_moments_enumerated(&blocks, &p_dt).unwrap();
        let sic = sic_moments_enumerated(&blocks, &probs).unwrap();
        assert!((tin.capacity - sic.capacity).abs() < 1e-15);
        assert!((tin.dispersion - sic.dispersion).abs() < 1e-15);
    }

    #[test]
    fn enumeration_limits() {
        let b = vec![BlockCapacities::default(); 15];
        assert!(matches!(
            tin_moments_enumerated(&b, &[0.5; 15]),
            Err(IsacError::EnumerationLimit { blocks: 15, limit: 14 })
        ));
        let probs = vec![DetectDecodeProbs { p_dt: 0.5, p_dc: 0.5 }; 10];
        assert!(sic_moments_enumerated(&b[..10], &probs).is_err());
        let mut c = cfg(15, 1);
        c.comm_gains[3][0] = 0.5;
        c.equal_gains = false;
        assert!(tin_rate(&c, &CodingParams::new(0.1, 0.5, 0.5, 0.5, 0.5, 0.5).unwrap()).is_err());
    }

    #[test]
    fn no_detections_give_the_plain_channel() {
        let c = cfg(10, 3);
        let p = CodingParams::new(0.3, 0.4, 0.6, 0.2, 0.5, 0.3).unwrap();
        let block = block_capacities(&c, &p, 0);
        let m = tin_moments_collapsed(&block, 0.0);
        let r = snr_ratios(&c, &p, 0, 0);
        assert!((m.capacity - 3.0 * capacity(r.embb_without)).abs() < 1e-15);
        assert!((m.dispersion - 3.0 * dispersion(r.embb_without)).abs() < 1e-15);
        let all = sic_moments_collapsed(&block, DetectDecodeProbs { p_dt: 1.0, p_dc: 1.0 });
        assert!((all.capacity - 3.0 * capacity(r.embb_sic)).abs() < 1e-15);
    }

    #[test]
    fn zero_gain_gives_negative_rate() {
        let mut c = cfg(10, 1);
        c.k_u = 2.0;
        let p = CodingParams::new(0.3, 0.4, 0.6, 0.2, 0.5, 0.3).unwrap();
        let comp = urllc_components(&c, &p, 0).unwrap();
        let block = BlockCapacities::default();
        let r = homogeneous_rate(&c, Decoding::Tin, &comp, &block, 0.0);
        assert_eq!(r.c_eff, 0.0);
        assert!(r.feasible && r.rate_negative && r.rate_nats < 0.0);
        assert_eq!(r.value(), Some(0.0));
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        let mut c = cfg(10, 1);
        c.embb_target = 1e-12;
        let p = CodingParams::new(0.3, 0.4, 0.6, 0.2, 0.5, 0.3).unwrap();
        let comp = urllc_components(&c, &p, 0).unwrap();
        let r = homogeneous_rate(&c, Decoding::Sic, &comp, &block_capacities(&c, &p, 0), 0.5);
        assert!(!r.feasible && r.rate_nats.is_nan() && r.value().is_none());
    }

    #[test]
    fn full_pipeline_matches_manual_assembly() {
        let c = cfg(10, 1);
        let p = CodingParams::new(0.2, 0.3, 0.5, 0.4, 0.6, 0.2).unwrap();
        let profile = detection_profile(&c, &p).unwrap();
        let pstar = chain_fixed_point(profile.without[0], profile.with[0]);
        let comp = urllc_components(&c, &p, 0).unwrap();
        let r = snr_ratios(&c, &p, 0, 0);
        let dt = pstar * (1.0 - comp.eps_hat_1_pow) + (1.0 - pstar) * comp.p_u2;
        let ce = (1.0 - dt) * capacity(r.embb_without) + dt * capacity(r.embb_with);
        let ve = (1.0 - dt) * dispersion(r.embb_without) + dt * dispersion(r.embb_with);
        let n = 1500.0f64;
        let s = (pstar * (1.0 - comp.eps_tilde_1_pow) + (1.0 - pstar) * (1.0 - comp.p_u2)).powi(10);
        let delta = 1.0 + 2.0 * LN_2 / (n * (2.0 * n * PI).sqrt()) - s;
        let want = ce - (ve / n).sqrt() * q_inv(1e-3 - delta).unwrap() - n.ln() / n - 256.0f64.ln() / n;
        let got = tin_rate(&c, &p).unwrap();
        assert!((got.rate_nats - want).abs() < 1e-12, "{} vs {want}", got.rate_nats);
        assert!((got.delta_e - delta).abs() < 1e-14);
    }

    #[test]
    fn heterogeneous_path_uses_the_chain() {
        let mut c = cfg(4, 2);
        c.comm_gains = vec![vec![1.0, 0.6], vec![0.8, 0.4], vec![1.2, 0.3], vec![0.9, 0.9]];
        c.sense_gains = vec![vec![1.0, 0.5], vec![0.7, 0.7], vec![1.1, 0.2], vec![0.6, 0.6]];
        c.equal_gains = false;
        let p = CodingParams::new(0.2, 0.3, 0.5, 0.4, 0.6, 0.2).unwrap();
        let profile = detection_profile(&c, &p).unwrap();
        let prev = previous_detection(&c, &profile);
        assert_eq!(prev[0], 0.0);
        assert_eq!(&prev[1..], &profile.chain[..3]);
        let r = sic_rate(&c, &p).unwrap();
        let direct = embb_rate_given(&c, &p, Decoding::Sic, &prev).unwrap();
        assert_eq!(r, direct);
        assert!(r.feasible);
    }

    fn arb_probs() -> impl Strategy<Value = Vec<DetectDecodeProbs>> {
        (1usize..=8).prop_flat_map(|eta| {
            proptest::collection::vec(
                (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(p_dt, p_dc)| DetectDecodeProbs { p_dt, p_dc }),
                eta,
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn pattern_masses_sum_to_one(probs in arb_probs()) {
            let blocks = vec![BlockCapacities::default(); probs.len()];
            let p_dt: Vec<f64> = probs.iter().map(|x| x.p_dt).collect();
            prop_assert!((tin_moments_enumerated(&blocks, &p_dt).unwrap().mass - 1.0).abs() <= 1e-12);
            prop_assert!((sic_moments_enumerated(&blocks, &probs).unwrap().mass - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn sic_not_below_tin_when_cancellation_helps(
            v in proptest::array::uniform6(0.0f64..1.0),
            pu2 in 0.0f64..1e-3,
            p_prev in 0.0f64..1.0,
        ) {
            let p = CodingParams::from_array(v).unwrap();
            let c = cfg(10, 1);
            let r = snr_ratios(&c, &p, 0, 0);
            prop_assume!(r.embb_sic >= r.embb_with);
            let setup = UrllcCodeSetup::from_config(&c).unwrap();
            let (cu, vu) = crate::reliability::urllc_moments(&c, &p, 0);
            let mut comp = UrllcErrorComponents::from_moments(&setup, cu, vu).unwrap();
            comp.p_u2 = pu2;
            let probs = detect_decode_probs(&comp, p_prev);
            prop_assume!(probs.p_dc > 0.0);
            let block = block_capacities(&c, &p, 0);
            let tin = homogeneous_rate(&c, Decoding::Tin, &comp, &block, p_prev);
            let sic = homogeneous_rate(&c, Decoding::Sic, &comp, &block, p_prev);
            prop_assert!(sic.c_eff >= tin.c_eff - 1e-15);
            if tin.feasible {
                // The larger dispersion after cancellation can outweigh the
                // capacity gain, but only where the TIN bound is already
                // negative.
                prop_assert!(sic.value() >= tin.value());
                if sic.rate_nats < tin.rate_nats - 1e-12 {
                    prop_assert!(tin.rate_nats <= 0.0, "{:?} vs {:?}", sic, tin);
                }
            }
        }

        #[test]
        fn stricter_target_never_raises_rate(
            v in proptest::array::uniform6(0.0f64..1.0),
            p_prev in 0.0f64..1.0,
            eps in 1e-6f64..0.4,
            shrink in 0.01f64..1.0,
        ) {
            let p = CodingParams::from_array(v).unwrap();
            let mut c = cfg(10, 1);
            let comp = urllc_components(&c, &p, 0).unwrap();
            let block = block_capacities(&c, &p, 0);
            for d in [Decoding::Tin, Decoding::Sic] {
                c.embb_target = eps;
                let loose = homogeneous_rate(&c, d, &comp, &block, p_prev);
                c.embb_target = eps * shrink;
                let strict = homogeneous_rate(&c, d, &comp, &block, p_prev);
                if strict.feasible {
                    prop_assert!(loose.feasible);
                    prop_assert!(strict.rate_nats <= loose.rate_nats);
                }
            }
        }

        #[test]
        fn rate_below_capacity_at_small_error(
            v in proptest::array::uniform6(0.0f64..1.0),
            p_prev in 0.0f64..1.0,
            eps in 1e-6f64..0.5,
        ) {
            let p = CodingParams::from_array(v).unwrap();
            let mut c = cfg(10, 2);
            c.embb_target = eps;
            let comp = urllc_components(&c, &p, 0).unwrap();
            let block = block_capacities(&c, &p, 0);
            for d in [Decoding::Tin, Decoding::Sic] {
                let r = homogeneous_rate(&c, d, &comp, &block, p_prev);
                if r.feasible && eps - r.delta_e < 0.5 {
                    prop_assert!(r.rate_nats <= r.c_eff);
                }
                prop_assert!(r.v_eff >= 0.0);
            }
        }
    }
}
