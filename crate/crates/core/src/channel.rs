//! System configuration, coding parameters and the derived variance and
//! SNR quantities shared by the analytic modules.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};

/// Which coding parameters enter the residual variance seen by the eMBB
/// receiver after the URLLC codeword has been subtracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SicVarianceVariant {
    /// Uses the no-URLLC sensing parameters `α_s1, β_s1`, as the formula is
    /// printed.
    #[default]
    AsWritten,
    /// Uses the with-URLLC sensing parameters `α_s2, β_s2`.
    S2Params,
}

/// Noncentrality of the detection statistic under the null hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullNoncentrality {
    /// `‖μ‖² / (σ² − 1)²`, i.e. the value obtained by completing the square
    /// in the test statistic with the sensing codeword on its power shell.
    #[default]
    MeanConsistent,
    /// `κ1 κ2 ℓ P ((1 − w)/w)²` as printed in the closed form.
    AsWritten,
}

/// Link and numerical parameters of one frame.
///
/// Gains are indexed `[block][stream]`. Probabilities that are targets of
/// the optimization (`urllc_target`, `detection_target`) may sit on the
/// closed unit interval; the others must be strictly inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub power: f64,
    pub block_len: u32,
    pub comm_gains: Vec<Vec<f64>>,
    pub sense_gains: Vec<Vec<f64>>,
    pub false_alarm: f64,
    pub embb_target: f64,
    pub urllc_target: f64,
    pub detection_target: f64,
    pub urllc_msgs: u64,
    pub dpc_bins: u64,
    pub sense_codebook: u64,
    pub k_u: f64,
    pub k_e: f64,
    pub berry_esseen_b: f64,
    pub berry_esseen_b_tilde: f64,
    /// Every block and stream shares one communication gain and one
    /// sensing gain. Enables the collapsed rate expressions.
    pub equal_gains: bool,
    pub sic_variance: SicVarianceVariant,
    pub null_noncentrality: NullNoncentrality,
}

impl SystemConfig {
    /// Equal-gain configuration with the default numerical knobs.
    ///
    /// `false_alarm`, `embb_target` and `urllc_msgs` start out unset (NaN
    /// or zero) and must be assigned before [`SystemConfig::validate`]
    /// accepts the value. The optimization targets start vacuous.
    pub fn homogeneous(
        power: f64,
        block_len: u32,
        num_blocks: usize,
        num_streams: usize,
        comm_gain: f64,
        sense_gain: f64,
    ) -> Self {
        SystemConfig {
            power,
            block_len,
            comm_gains: vec![vec![comm_gain; num_streams]; num_blocks],
            sense_gains: vec![vec![sense_gain; num_streams]; num_blocks],
            false_alarm: f64::NAN,
            embb_target: f64::NAN,
            urllc_target: 1.0,
            detection_target: 0.0,
            urllc_msgs: 0,
            dpc_bins: 256,
            sense_codebook: 256,
            k_u: 1.0,
            k_e: 1.0,
            berry_esseen_b: 0.0,
            berry_esseen_b_tilde: 0.0,
            equal_gains: true,
            sic_variance: SicVarianceVariant::AsWritten,
            null_noncentrality: NullNoncentrality::MeanConsistent,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.comm_gains.len()
    }

    pub fn num_streams(&self) -> usize {
        self.comm_gains.first().map_or(0, Vec::len)
    }

    /// Frame length `n = η ℓ`.
    pub fn frame_len(&self) -> u64 {
        self.num_blocks() as u64 * self.block_len as u64
    }

    /// `M_U · M_v` as a real number.
    pub fn urllc_codebook(&self) -> f64 {
        self.urllc_msgs as f64 * self.dpc_bins as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IsacError::InvalidConfig(msg));
        if !(self.power.is_finite() && self.power > 0.0) {
            return bad(format!("power must be positive, got {}", self.power));
        }
        if self.block_len == 0 {
            return bad("block_len must be at least 1".into());
        }
        let blocks = self.num_blocks();
        let streams = self.num_streams();
        if blocks == 0 || streams == 0 {
            return bad("gain arrays must have at least one block and one stream".into());
        }
        for (name, gains) in [("comm_gains", &self.comm_gains), ("sense_gains", &self.sense_gains)] {
            if gains.len() != blocks {
                return bad(format!("{name} has {} blocks, expected {blocks}", gains.len()));
            }
            for (b, row) in gains.iter().enumerate() {
                if row.len() != streams {
                    return bad(format!("{name}[{b}] has {} streams, expected {streams}", row.len()));
                }
                if let Some(g) = row.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                    return bad(format!("{name}[{b}] contains invalid gain {g}"));
                }
                if row.windows(2).any(|w| w[1] > w[0]) {
                    return bad(format!("{name}[{b}] must be nonincreasing across streams"));
                }
            }
        }
        if self.equal_gains {
            let first_c = self.comm_gains[0][0];
            let first_s = self.sense_gains[0][0];
            let uniform = self.comm_gains.iter().flatten().all(|g| *g == first_c)
                && self.sense_gains.iter().flatten().all(|g| *g == first_s);
            if !uniform {
                return bad("equal_gains is set but the gain arrays are not constant".into());
            }
        }
        for (name, p) in [("false_alarm", self.false_alarm), ("embb_target", self.embb_target)] {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {p}"));
            }
        }
        for (name, p) in [
            ("urllc_target", self.urllc_target),
            ("detection_target", self.detection_target),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, m) in [
            ("urllc_msgs", self.urllc_msgs),
            ("dpc_bins", self.dpc_bins),
            ("sense_codebook", self.sense_codebook),
        ] {
            if m == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        for (name, k) in [("k_u", self.k_u), ("k_e", self.k_e)] {
            if !(k.is_finite() && k > 0.0) {
                return bad(format!("{name} must be positive, got {k}"));
            }
        }
        for (name, b) in [
            ("berry_esseen_b", self.berry_esseen_b),
            ("berry_esseen_b_tilde", self.berry_esseen_b_tilde),
        ] {
            if !(b.is_finite() && b >= 0.0) {
                return bad(format!("{name} must be nonnegative, got {b}"));
            }
        }
        Ok(())
    }
}

/// Power-splitting (`β`) and DPC-scaling (`α`) coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CodingParams {
    pub alpha_u: f64,
    pub alpha_s1: f64,
    pub alpha_s2: f64,
    pub beta_u: f64,
    pub beta_s1: f64,
    pub beta_s2: f64,
}

impl CodingParams {
    /// Arguments in the order `α_u, α_s1, α_s2, β_u, β_s1, β_s2`.
    pub fn new(
        alpha_u: f64,
        alpha_s1: f64,
        alpha_s2: f64,
        beta_u: f64,
        beta_s1: f64,
        beta_s2: f64,
    ) -> Result<Self> {
        let p = CodingParams {
            alpha_u,
            alpha_s1,
            alpha_s2,
            beta_u,
            beta_s1,
            beta_s2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    /// Fields in the canonical order `α_u, α_s1, α_s2, β_u, β_s1, β_s2`.
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.alpha_u,
            self.alpha_s1,
            self.alpha_s2,
            self.beta_u,
            self.beta_s1,
            self.beta_s2,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 6] = ["alpha_u", "alpha_s1", "alpha_s2", "beta_u", "beta_s1", "beta_s2"];
        for (name, v) in NAMES.iter().zip(self.to_array()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(IsacError::domain("CodingParams", format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Whether a block carries a URLLC codeword, i.e. whether the target was
/// detected in the previous block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    NoUrllc,
    WithUrllc,
}

impl BlockKind {
    pub const ALL: [BlockKind; 2] = [BlockKind::NoUrllc, BlockKind::WithUrllc];
}

/// `(κ1, κ2)`: the fraction of sensing-related power that DPC leaves
/// unknown to the radar, and the power share that reaches the sensing
/// layer.
pub fn kappas(p: &CodingParams, kind: BlockKind) -> (f64, f64) {
    match kind {
        BlockKind::NoUrllc => ((1.0 - p.alpha_s1 * p.alpha_s1) * (1.0 - p.beta_s1), 1.0),
        BlockKind::WithUrllc => {
            let k1 = (1.0 - p.alpha_s2 * p.alpha_s2) * (1.0 - p.beta_s2);
            let ou = 1.0 - p.alpha_u;
            (k1, (1.0 - p.beta_u) * ou * ou)
        }
    }
}

/// Output variances seen by the communication receiver on one stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommVariances {
    /// Total received variance.
    pub total: f64,
    /// Given the URLLC auxiliary codeword.
    pub given_urllc: f64,
    /// Given the sensing codeword in a block without URLLC.
    pub given_sense_without: f64,
    /// Given the sensing codeword in a block with URLLC.
    pub given_sense_with: f64,
    /// Given both the URLLC and the sensing codeword.
    pub given_sense_and_urllc: f64,
}

/// SNR-like ratios derived from [`CommVariances`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrRatios {
    /// URLLC decoding, treating everything else as noise.
    pub urllc: f64,
    /// eMBB in a block without URLLC.
    pub embb_without: f64,
    /// eMBB in a block with URLLC, interference treated as noise.
    pub embb_with: f64,
    /// eMBB in a block with URLLC after successive cancellation.
    pub embb_sic: f64,
}

/// [`comm_variances`] for an explicit gain.
pub fn comm_variances_for_gain(
    gain: f64,
    power: f64,
    p: &CodingParams,
    variant: SicVarianceVariant,
) -> CommVariances {
    let lp = gain * power;
    let ou = 1.0 - p.alpha_u;
    let urllc_share = ou * ou * (1.0 - p.beta_u);
    let inner_with = (1.0 - p.alpha_s2 * p.alpha_s2) * (1.0 - p.beta_s2);
    let (alpha_s, beta_s) = match variant {
        SicVarianceVariant::AsWritten => (p.alpha_s1, p.beta_s1),
        SicVarianceVariant::S2Params => (p.alpha_s2, p.beta_s2),
    };
    let os = 1.0 - alpha_s;
    CommVariances {
        total: 1.0 + lp,
        given_urllc: 1.0 + lp * (1.0 - p.alpha_u * p.alpha_u) * (1.0 - p.beta_u),
        given_sense_without: 1.0 + lp * (1.0 - p.alpha_s1 * p.alpha_s1) * (1.0 - p.beta_s1),
        given_sense_with: 1.0 + lp * (1.0 - urllc_share * (1.0 - inner_with)),
        given_sense_and_urllc: 1.0 + lp * urllc_share * os * os * (1.0 - beta_s),
    }
}

impl CommVariances {
    pub fn ratios(&self) -> SnrRatios {
        SnrRatios {
            urllc: (self.total - self.given_urllc) / self.given_urllc,
            embb_without: (self.total - self.given_sense_without) / self.given_sense_without,
            embb_with: (self.total - self.given_sense_with) / self.given_sense_with,
            embb_sic: (self.given_urllc - self.given_sense_and_urllc) / self.given_sense_and_urllc,
        }
    }
}

/// Variances on stream `j` of block `b`.
pub fn comm_variances(cfg: &SystemConfig, p: &CodingParams, b: usize, j: usize) -> CommVariances {
    comm_variances_for_gain(cfg.comm_gains[b][j], cfg.power, p, cfg.sic_variance)
}

/// SNR ratios on stream `j` of block `b`.
pub fn snr_ratios(cfg: &SystemConfig, p: &CodingParams, b: usize, j: usize) -> SnrRatios {
    comm_variances(cfg, p, b, j).ratios()
}

/// Eigenvalues of `H Hᴴ` in nonincreasing order; these are the per-stream
/// gains of the equivalent parallel channel.
pub fn channel_eigenvalues(h: &DMatrix<Complex<f64>>) -> Vec<f64> {
    let gram = h * h.adjoint();
    let eig = gram.symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(gain: f64) -> SystemConfig {
        let mut c = SystemConfig::homogeneous(0.5, 150, 10, 1, gain, 1.0);
        c.false_alarm = 1e-6;
        c.embb_target = 1e-3;
        c.urllc_msgs = 1024;
        c
    }

    fn arb_params() -> impl Strategy<Value = CodingParams> {
        proptest::array::uniform6(0.0f64..=1.0).prop_map(|v| CodingParams::from_array(v).unwrap())
    }

    #[test]
    fn kappa_examples() {
        let zero = CodingParams::default();
        assert_eq!(kappas(&zero, BlockKind::NoUrllc), (1.0, 1.0));
        let full = CodingParams { alpha_s2: 1.0, ..zero };
        assert_eq!(kappas(&full, BlockKind::WithUrllc).0, 0.0);
        let p = CodingParams::new(0.3, 0.0, 0.5, 0.2, 0.0, 0.4).unwrap();
        let (k1, k2) = kappas(&p, BlockKind::WithUrllc);
        assert!((k1 - 0.45).abs() < 1e-15);
        assert!((k2 - 0.392).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(cfg(1.0).validate().is_ok());
        let mut c = cfg(1.0);
        c.false_alarm = 1.0;
        assert!(c.validate().is_err());
        let mut c = cfg(1.0);
        c.comm_gains[3][0] = 2.0;
        assert!(c.validate().is_err());
        c.equal_gains = false;
        assert!(c.validate().is_ok());
        let mut c = SystemConfig::homogeneous(0.5, 150, 2, 2, 1.0, 1.0);
        c.false_alarm = 0.1;
        c.embb_target = 0.1;
        c.urllc_msgs = 2;
        c.equal_gains = false;
        c.comm_gains[0] = vec![0.5, 1.0];
        assert!(c.validate().is_err());
        assert!(SystemConfig::homogeneous(0.5, 150, 2, 1, 1.0, 1.0).validate().is_err());
        assert!(CodingParams::new(0.0, 0.0, 0.0, 1.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_gain_gives_unit_variances() {
        let v = comm_variances(&cfg(0.0), &CodingParams::new(0.3, 0.5, 0.5, 0.2, 0.4, 0.4).unwrap(), 0, 0);
        for s in [v.total, v.given_urllc, v.given_sense_without, v.given_sense_with, v.given_sense_and_urllc] {
            assert_eq!(s, 1.0);
        }
        let r = v.ratios();
        assert_eq!((r.urllc, r.embb_without, r.embb_with, r.embb_sic), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn full_dpc_on_urllc_leaves_unit_variance() {
        let p = CodingParams { alpha_u: 1.0, beta_u: 0.37, ..Default::default() };
        assert_eq!(comm_variances(&cfg(2.0), &p, 0, 0).given_urllc, 1.0);
    }

    #[test]
    fn all_power_on_urllc() {
        let p = CodingParams { beta_u: 1.0, ..Default::default() };
        let c = cfg(1.3);
        let r = snr_ratios(&c, &p, 0, 0);
        assert!((r.urllc - 1.3 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn variances_match_symbolic_expansion() {
        // λ = 1, P = 0.5, (α_u, α_s1, α_s2, β_u, β_s1, β_s2) = (0.3, 0.5, 0.5, 0.2, 0.4, 0.4),
        // expanded by hand:
        //   (1 − α_u²)(1 − β_u)        = 0.91 · 0.8            = 0.728
        //   (1 − α_s1²)(1 − β_s1)      = 0.75 · 0.6            = 0.45
        //   (1 − α_u)²(1 − β_u)        = 0.49 · 0.8            = 0.392
        //   1 − 0.392 (1 − 0.45)       = 1 − 0.2156            = 0.7844
        //   0.392 (1 − α_s1)²(1 − β_s1) = 0.392 · 0.25 · 0.6   = 0.0588
        let p = CodingParams::new(0.3, 0.5, 0.5, 0.2, 0.4, 0.4).unwrap();
        let v = comm_variances(&cfg(1.0), &p, 0, 0);
        let want = [1.5, 1.364, 1.225, 1.3922, 1.0294];
        let got = [v.total, v.given_urllc, v.given_sense_without, v.given_sense_with, v.given_sense_and_urllc];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{g} vs {w}");
        }
        let r = v.ratios();
        assert!((r.urllc - (1.5 - 1.364) / 1.364).abs() < 1e-14);
        assert!((r.embb_without - (1.5 - 1.225) / 1.225).abs() < 1e-14);
        assert!((r.embb_with - (1.5 - 1.3922) / 1.3922).abs() < 1e-14);
        assert!((r.embb_sic - (1.364 - 1.0294) / 1.0294).abs() < 1e-14);
    }

    #[test]
    fn s2_variant_switches_parameters() {
        let p = CodingParams::new(0.0, 0.9, 0.1, 0.0, 0.9, 0.1).unwrap();
        let mut c = cfg(1.0);
        let written = comm_variances(&c, &p, 0, 0).given_sense_and_urllc;
        c.sic_variance = SicVarianceVariant::S2Params;
        let s2 = comm_variances(&c, &p, 0, 0).given_sense_and_urllc;
        assert!((written - (1.0 + 0.5 * 0.01 * 0.1)).abs() < 1e-15);
        assert!((s2 - (1.0 + 0.5 * 0.81 * 0.9)).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_diagonal_and_rotated_channel() {
        let h = DMatrix::from_row_slice(2, 2, &[
            Complex::new(2.0, 0.0), Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0), Complex::new(0.0, 1.0),
        ]);
        let ev = channel_eigenvalues(&h);
        assert!((ev[0] - 4.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        // Singular values are invariant under a unitary rotation.
        let (c, s) = (0.6f64, 0.8f64);
        let u = DMatrix::from_row_slice(2, 2, &[
            Complex::new(c, 0.0), Complex::new(-s, 0.0),
            Complex::new(0.0, s), Complex::new(0.0, c),
        ]);
        let ev2 = channel_eigenvalues(&(&u * &h));
        assert!((ev2[0] - 4.0).abs() < 1e-12 && (ev2[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sic_ratio_can_fall_below_tin_ratio_as_written() {
        // With the printed residual variance the cancellation gain is not
        // guaranteed: this draw has the smaller residual yet a smaller ratio.
        let p = CodingParams::new(0.028850528, 0.111163604, 0.705670060, 0.347572273, 0.719784193, 0.989286948)
            .unwrap();
        let v = comm_variances_for_gain(0.570558553, 0.5, &p, SicVarianceVariant::AsWritten);
        assert!(v.given_sense_and_urllc <= v.given_sense_with);
        let r = v.ratios();
        assert!(r.embb_sic < r.embb_with);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn variance_ordering(p in arb_params(), gain in 0.0f64..10.0, s2 in any::<bool>()) {
            let variant = if s2 { SicVarianceVariant::S2Params } else { SicVarianceVariant::AsWritten };
            let v = comm_variances_for_gain(gain, 0.5, &p, variant);
            let eps = 1e-12;
            prop_assert!(v.given_sense_and_urllc >= 1.0 - eps);
            prop_assert!(v.total >= v.given_urllc - eps);
            prop_assert!(v.given_urllc >= 1.0 - eps);
            prop_assert!(v.total >= v.given_sense_without - eps);
            prop_assert!(v.total >= v.given_sense_with - eps);
            prop_assert!(v.given_urllc >= v.given_sense_and_urllc - eps);
            if s2 {
                prop_assert!(v.given_sense_with >= v.given_sense_and_urllc - eps);
            }
            let r = v.ratios();
            for x in [r.urllc, r.embb_without, r.embb_with, r.embb_sic] {
                prop_assert!(x >= -eps);
            }
        }

        #[test]
        fn sic_ratio_dominates_when_residual_is_smaller(p in arb_params(), gain in 0.0f64..10.0) {
            let v = comm_variances_for_gain(gain, 0.5, &p, SicVarianceVariant::S2Params);
            if v.given_sense_and_urllc <= v.given_sense_with {
                let r = v.ratios();
                prop_assert!(r.embb_sic >= r.embb_with - 1e-12, "{:?}", r);
            }
        }

        #[test]
        fn variances_continuous(p in arb_params(), gain in 0.0f64..10.0, axis in 0usize..6) {
            let mut v = p.to_array();
            let h = 1e-7;
            v[axis] = if v[axis] + h <= 1.0 { v[axis] + h } else { v[axis] - h };
            let q = CodingParams::from_array(v).unwrap();
            let a = comm_variances_for_gain(gain, 0.5, &p, SicVarianceVariant::AsWritten);
            let b = comm_variances_for_gain(gain, 0.5, &q, SicVarianceVariant::AsWritten);
            let bound = 4.0 * gain * 0.5 * h + 1e-14;
            prop_assert!((a.total - b.total).abs() <= bound);
            prop_assert!((a.given_urllc - b.given_urllc).abs() <= bound);
            prop_assert!((a.given_sense_without - b.given_sense_without).abs() <= bound);
            prop_assert!((a.given_sense_with - b.given_sense_with).abs() <= bound);
            prop_assert!((a.given_sense_and_urllc - b.given_sense_and_urllc).abs() <= bound);
        }
    }
}
