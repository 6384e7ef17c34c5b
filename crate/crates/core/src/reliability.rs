//! URLLC decoding error bound and its normal-approximation limit.

use std::f64::consts::{LN_2, PI};

use crate::channel::{snr_ratios, CodingParams, SystemConfig};
use crate::error::{IsacError, Result};
use crate::stats::{capacity, dispersion, q_func};

/// Pieces of the per-block URLLC error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrllcErrorComponents {
    pub eps_tilde_1: f64,
    pub eps_tilde_2: f64,
    /// `eps_tilde_1 − 2B̃/√ℓ`, clamped to `[0, 1]`.
    pub eps_hat_1: f64,
    /// Error probability when the previous block triggered a URLLC message.
    pub p_u1: f64,
    /// False-alarm driven error probability otherwise.
    pub p_u2: f64,
    /// Sum of per-stream capacities, nats.
    pub c_u: f64,
    /// Sum of per-stream dispersions.
    pub v_u: f64,
    /// `eps_tilde_1` raised to the codebook size.
    pub eps_tilde_1_pow: f64,
    /// `eps_hat_1` raised to the codebook size.
    pub eps_hat_1_pow: f64,
}

/// Inputs of [`UrllcErrorComponents::from_moments`] that do not depend on
/// the coding parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrllcCodeSetup {
    pub block_len: u32,
    /// `ln(M_U · M_v)`.
    pub log_codebook: f64,
    pub k_u: f64,
    pub b: f64,
    pub b_tilde: f64,
}

impl UrllcCodeSetup {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        if cfg.urllc_msgs == 0 || cfg.dpc_bins == 0 {
            return Err(IsacError::domain(
                "urllc_components",
                "M_U · M_v must be at least 1",
            ));
        }
        Ok(UrllcCodeSetup {
            block_len: cfg.block_len,
            log_codebook: (cfg.urllc_msgs as f64).ln() + (cfg.dpc_bins as f64).ln(),
            k_u: cfg.k_u,
            b: cfg.berry_esseen_b,
            b_tilde: cfg.berry_esseen_b_tilde,
        })
    }

    /// Argument of the Gaussian tail in `eps_tilde_1`, or `±∞` when the
    /// dispersion vanishes.
    fn normal_argument(&self, c_u: f64, v_u: f64) -> Result<f64> {
        let l = self.block_len as f64;
        let margin = l * c_u - self.log_codebook - self.k_u * l.ln();
        if v_u > 0.0 {
            return Ok(margin / (l * v_u).sqrt());
        }
        if margin > 0.0 {
            Ok(f64::INFINITY)
        } else if margin < 0.0 {
            Ok(f64::NEG_INFINITY)
        } else {
            Err(IsacError::UndefinedArgument(
                "zero URLLC dispersion exactly at the decoding threshold".into(),
            ))
        }
    }
}

/// `x^m` for `x ∈ [0, 1]` and a possibly huge real `m`, without underflow
/// surprises.
fn pow_codebook(x: f64, log_m: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    (log_m.exp() * x.ln()).exp()
}

impl UrllcErrorComponents {
    /// Components from the summed capacity and dispersion of a block.
    pub fn from_moments(setup: &UrllcCodeSetup, c_u: f64, v_u: f64) -> Result<Self> {
        if setup.block_len < 2 {
            return Err(IsacError::domain("urllc_components", "block length must be at least 2"));
        }
        if !(setup.log_codebook >= 0.0) {
            return Err(IsacError::domain("urllc_components", "M_U · M_v must be at least 1"));
        }
        let l = setup.block_len as f64;
        let sqrt_l = l.sqrt();
        let z = setup.normal_argument(c_u, v_u)?;
        let eps_tilde_1 = (q_func(z) + setup.b / sqrt_l).clamp(0.0, 1.0);
        let eps_tilde_2 = (2.0 / l.powf(setup.k_u)
            * (LN_2 / (2.0 * PI * l).sqrt() + 2.0 * setup.b / sqrt_l))
            .clamp(0.0, 1.0);
        let eps_hat_1 = (eps_tilde_1 - 2.0 * setup.b_tilde / sqrt_l).clamp(0.0, 1.0);
        let eps_tilde_1_pow = pow_codebook(eps_tilde_1, setup.log_codebook);
        let eps_hat_1_pow = pow_codebook(eps_hat_1, setup.log_codebook);
        let m = setup.log_codebook.exp();
        // 1 − (1 − e/m)^m
        let p_u2 = (-(m * (-eps_tilde_2 / m).ln_1p()).exp_m1()).clamp(0.0, 1.0);
        Ok(UrllcErrorComponents {
            eps_tilde_1,
            eps_tilde_2,
            eps_hat_1,
            p_u1: (eps_tilde_1 + eps_tilde_1_pow + eps_tilde_2).clamp(0.0, 1.0),
            p_u2,
            c_u,
            v_u,
            eps_tilde_1_pow,
            eps_hat_1_pow,
        })
    }
}

/// Summed URLLC capacity and dispersion over the streams of block `b`.
pub fn urllc_moments(cfg: &SystemConfig, p: &CodingParams, b: usize) -> (f64, f64) {
    (0..cfg.num_streams()).fold((0.0, 0.0), |(c, v), j| {
        let omega = snr_ratios(cfg, p, b, j).urllc;
        (c + capacity(omega), v + dispersion(omega))
    })
}

/// Error-bound components of block `b`.
pub fn urllc_components(cfg: &SystemConfig, p: &CodingParams, b: usize) -> Result<UrllcErrorComponents> {
    let setup = UrllcCodeSetup::from_config(cfg)?;
    let (c_u, v_u) = urllc_moments(cfg, p, b);
    UrllcErrorComponents::from_moments(&setup, c_u, v_u)
}

/// `P_prev · P_U1 + (1 − P_prev) · P_U2`.
pub fn urllc_error_bound(comp: &UrllcErrorComponents, p_prev_detect: f64) -> f64 {
    (p_prev_detect * comp.p_u1 + (1.0 - p_prev_detect) * comp.p_u2).clamp(0.0, 1.0)
}

/// Large-blocklength form: only the Gaussian decoding term survives, with
/// the `O(ln ℓ)` backoff set to `K_U ln ℓ`.
pub fn urllc_error_asymptotic(
    comp: &UrllcErrorComponents,
    p_prev_detect: f64,
    setup: &UrllcCodeSetup,
) -> Result<f64> {
    let z = setup.normal_argument(comp.c_u, comp.v_u)?;
    Ok((p_prev_detect * q_func(z)).clamp(0.0, 1.0))
}
