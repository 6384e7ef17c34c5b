//! Target detection probability of the likelihood-ratio test and the
//! per-block detection chain.

use serde::Serialize;

use crate::channel::{kappas, BlockKind, CodingParams, NullNoncentrality, SystemConfig};
use crate::error::{IsacError, Result};
use crate::stats::GeneralizedChiSquare;

/// Per-stream description of the detection statistic's two laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionParams {
    pub weights: Vec<f64>,
    pub noncentralities_null: Vec<f64>,
    pub noncentralities_alt: Vec<f64>,
    pub sigma2: Vec<f64>,
}

/// Detection quantities of a single stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamDetection {
    /// Variance of the part of the echo unknown to the radar, plus noise.
    pub sigma2: f64,
    /// Squared norm of the known echo mean `‖μ‖²`.
    pub mean_sq: f64,
    pub weight: f64,
    pub null_nc: f64,
    pub alt_nc: f64,
}

fn tau2(beta: f64, alpha: f64, sigma2: f64) -> f64 {
    let inner = alpha + sigma2 / (sigma2 - 1.0) * (1.0 - alpha);
    beta + (1.0 - beta) * inner * inner
}

impl StreamDetection {
    /// Returns `None` when the stream is degenerate (`σ² = 1`); the known
    /// mean is still reported through the second tuple element so callers
    /// can tell a silent stream from an informative one.
    pub fn new(
        gain: f64,
        power: f64,
        block_len: u32,
        p: &CodingParams,
        kind: BlockKind,
        null_variant: NullNoncentrality,
    ) -> (Option<StreamDetection>, f64) {
        let ell = block_len as f64;
        let (k1, k2) = kappas(p, kind);
        let sigma2 = 1.0 + gain * k2 * (1.0 - k1) * power;
        let mean_sq = match kind {
            BlockKind::NoUrllc => {
                let a = 1.0 - p.alpha_s1;
                gain * a * a * (1.0 - p.beta_s1) * ell * power
            }
            BlockKind::WithUrllc => {
                let a = (1.0 - p.alpha_u) * (1.0 - p.alpha_s2);
                gain * a * a * (1.0 - p.beta_u) * (1.0 - p.beta_s2) * ell * power
            }
        };
        if sigma2 <= 1.0 {
            return (None, mean_sq);
        }
        let excess = sigma2 - 1.0;
        let weight = excess / sigma2;
        let null_nc = match null_variant {
            NullNoncentrality::MeanConsistent => mean_sq / (excess * excess),
            NullNoncentrality::AsWritten => {
                let r = (1.0 - weight) / weight;
                k1 * k2 * ell * power * r * r
            }
        };
        let tau = match kind {
            BlockKind::NoUrllc => tau2(p.beta_s1, p.alpha_s1, sigma2),
            BlockKind::WithUrllc => {
                let ou = 1.0 - p.alpha_u;
                p.beta_u
                    + (1.0 - p.beta_u)
                        * (p.alpha_u * p.alpha_u + ou * ou * tau2(p.beta_s2, p.alpha_s2, sigma2))
            }
        };
        let alt_nc = gain * ell * power * tau;
        (
            Some(StreamDetection {
                sigma2,
                mean_sq,
                weight,
                null_nc,
                alt_nc,
            }),
            mean_sq,
        )
    }
}

/// Statistic parameters for block `b` (0-based). Fails if any stream is
/// degenerate.
pub fn detection_params(
    cfg: &SystemConfig,
    p: &CodingParams,
    kind: BlockKind,
    b: usize,
) -> Result<DetectionParams> {
    let mut out = DetectionParams {
        weights: Vec::new(),
        noncentralities_null: Vec::new(),
        noncentralities_alt: Vec::new(),
        sigma2: Vec::new(),
    };
    for &gain in &cfg.sense_gains[b] {
        let (stream, _) =
            StreamDetection::new(gain, cfg.power, cfg.block_len, p, kind, cfg.null_noncentrality);
        let s = stream.ok_or(IsacError::DegenerateStatistic { block: b })?;
        out.weights.push(s.weight);
        out.noncentralities_null.push(s.null_nc);
        out.noncentralities_alt.push(s.alt_nc);
        out.sigma2.push(s.sigma2);
    }
    Ok(out)
}

/// Laws of the detection statistic under the null and the alternative for
/// nondegenerate streams.
pub fn statistic_laws(
    live: &[StreamDetection],
    block_len: u32,
) -> Result<(GeneralizedChiSquare, GeneralizedChiSquare)> {
    if live.iter().all(|s| s.weight == live[0].weight) {
        // Equal weights merge exactly into one component.
        let dof = block_len * live.len() as u32;
        let w = live[0].weight;
        Ok((
            GeneralizedChiSquare::new(vec![w], dof, vec![live.iter().map(|s| s.null_nc).sum()])?,
            GeneralizedChiSquare::new(vec![w], dof, vec![live.iter().map(|s| s.alt_nc).sum()])?,
        ))
    } else {
        let w: Vec<f64> = live.iter().map(|s| s.weight).collect();
        Ok((
            GeneralizedChiSquare::new(w.clone(), block_len, live.iter().map(|s| s.null_nc).collect())?,
            GeneralizedChiSquare::new(w, block_len, live.iter().map(|s| s.alt_nc).collect())?,
        ))
    }
}

/// `P_D = sf_alt(sf_null⁻¹(P_FA))` for the given streams, dropping
/// degenerate ones. `block` is only used for error reporting.
pub fn detection_probability_for_streams(
    streams: &[(Option<StreamDetection>, f64)],
    block_len: u32,
    false_alarm: f64,
    block: usize,
) -> Result<f64> {
    if !(false_alarm > 0.0 && false_alarm < 1.0) {
        return Err(IsacError::domain(
            "detection_probability",
            format!("false alarm {false_alarm} not in (0, 1)"),
        ));
    }
    let live: Vec<StreamDetection> = streams.iter().filter_map(|(s, _)| *s).collect();
    if live.is_empty() {
        // Both hypotheses coincide in law when no stream carries a known
        // echo; otherwise the statistic has no chi-square part at all.
        if streams.iter().all(|(_, m)| *m == 0.0) {
            return Ok(false_alarm);
        }
        return Err(IsacError::DegenerateStatistic { block });
    }
    if live.len() < streams.len() {
        log::warn!(
            "block {block}: dropping {} degenerate sensing stream(s)",
            streams.len() - live.len()
        );
    }
    let (null, alt) = statistic_laws(&live, block_len)?;
    let threshold = null.inverse_sf(false_alarm)?;
    alt.sf(threshold)
}

/// Target detection probability of block `b` (0-based) of the given kind.
pub fn detection_probability(
    cfg: &SystemConfig,
    p: &CodingParams,
    kind: BlockKind,
    b: usize,
) -> Result<f64> {
    let streams: Vec<_> = cfg.sense_gains[b]
        .iter()
        .map(|&g| StreamDetection::new(g, cfg.power, cfg.block_len, p, kind, cfg.null_noncentrality))
        .collect();
    detection_probability_for_streams(&streams, cfg.block_len, cfg.false_alarm, b)
}

/// Like [`detection_probability`], but a statistic that cannot be formed
/// is read as carrying no sensing information, i.e. `P_D = P_FA`.
pub fn detection_probability_or_blind(
    cfg: &SystemConfig,
    p: &CodingParams,
    kind: BlockKind,
    b: usize,
) -> Result<f64> {
    match detection_probability(cfg, p, kind, b) {
        Err(IsacError::DegenerateStatistic { .. }) => Ok(cfg.false_alarm),
        other => other,
    }
}

/// Effective per-block detection probabilities from the per-block pure-kind
/// values: the first block has no URLLC, later ones mix the two kinds by
/// the previous block's probability.
pub fn chain_from(without: &[f64], with: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(without.len());
    let mut prev = 0.0;
    for (b, (&d, &w)) in without.iter().zip(with).enumerate() {
        let cur = if b == 0 { d } else { prev * w + (1.0 - prev) * d };
        out.push(cur);
        prev = cur;
    }
    out
}

/// Fixed point of `x ↦ x·with + (1 − x)·without`.
pub fn chain_fixed_point(without: f64, with: f64) -> f64 {
    let denom = 1.0 - with + without;
    if denom <= 0.0 {
        // with = 1 and without = 0: every point is fixed; the chain from
        // P_0 = 0 stays at 0.
        return without;
    }
    without / denom
}

/// Pure-kind and chained detection probabilities of a whole frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProfile {
    pub without: Vec<f64>,
    pub with: Vec<f64>,
    pub chain: Vec<f64>,
}

impl DetectionProfile {
    /// Minimum over both pure kinds and every chain entry.
    pub fn min(&self) -> f64 {
        self.without
            .iter()
            .chain(&self.with)
            .chain(&self.chain)
            .fold(1.0f64, |m, v| m.min(*v))
    }
}

/// [`DetectionProfile::min`] for `blocks` blocks that share the same
/// pure-kind probabilities, without building the profile.
pub fn uniform_profile_min(without: f64, with: f64, blocks: usize) -> f64 {
    let mut m = 1.0f64.min(without).min(with);
    let mut prev = 0.0;
    for b in 0..blocks {
        let cur = if b == 0 { without } else { prev * with + (1.0 - prev) * without };
        m = m.min(cur);
        prev = cur;
    }
    m
}

/// Per-block detection probabilities `P_{b,D}`, `b = 1..η`.
pub fn detection_chain(cfg: &SystemConfig, p: &CodingParams) -> Result<Vec<f64>> {
    Ok(detection_profile(cfg, p)?.chain)
}

/// All detection probabilities of the frame, with degenerate statistics
/// read as `P_FA`.
pub fn detection_profile(cfg: &SystemConfig, p: &CodingParams) -> Result<DetectionProfile> {
    let eta = cfg.num_blocks();
    let (without, with) = if cfg.equal_gains {
        let d = detection_probability_or_blind(cfg, p, BlockKind::NoUrllc, 0)?;
        let w = detection_probability_or_blind(cfg, p, BlockKind::WithUrllc, 0)?;
        (vec![d; eta], vec![w; eta])
    } else {
        let mut without = Vec::with_capacity(eta);
        let mut with = Vec::with_capacity(eta);
        for b in 0..eta {
            without.push(detection_probability_or_blind(cfg, p, BlockKind::NoUrllc, b)?);
            with.push(detection_probability_or_blind(cfg, p, BlockKind::WithUrllc, b)?);
        }
        (without, with)
    };
    let chain = chain_from(&without, &with);
    Ok(DetectionProfile {
        without,
        with,
        chain,
    })
}
