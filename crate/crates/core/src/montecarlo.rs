//! Monte Carlo oracles for the detection probability, the URLLC information
//! density and the generalized chi-square law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{kappas, BlockKind, CodingParams, SystemConfig};
use crate::error::{IsacError, Result};
use crate::sensing::{statistic_laws, StreamDetection};
use crate::stats::{q_func, GeneralizedChiSquare};

/// Trials per independently seeded chunk. Fixed so results do not depend on
/// the thread count.
const CHUNK: usize = 2048;

/// A reproducible random stream: `(seed, stream_id)` fixes every draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        self.chunk_rng(0)
    }

    /// Generator for chunk `k` of this stream; chunks are disjoint
    /// 2⁴⁸-word windows of the same keystream.
    fn chunk_rng(&self, k: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r.set_word_pos((k as u128) << 48);
        r
    }

    /// A stream derived from this one, independent of it.
    pub fn substream(&self, k: u64) -> RngStream {
        RngStream {
            seed: self.seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k.wrapping_add(1)),
            stream_id: self.stream_id,
        }
    }
}

/// Runs `trials` trials in fixed chunks and sums the per-chunk results.
fn chunked<T, F>(trials: usize, stream: RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.chunk_rng(k as u64);
            let n = CHUNK.min(trials - k * CHUNK);
            f(n, &mut rng)
        })
        .collect()
}

/// Uniform point on the sphere of the given radius in `dim` dimensions.
pub fn sample_shell<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    if radius == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return x;
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = radius / norm;
    x.iter_mut().for_each(|v| *v *= scale);
    x
}

fn add_scaled(acc: &mut [f64], x: &[f64], c: f64) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += c * v;
    }
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McDetection {
    pub p_d_hat: f64,
    pub p_fa_hat: f64,
    pub p_d_stderr: f64,
    pub p_fa_stderr: f64,
    pub trials: usize,
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One stream's transmitted signal: the part the radar knows and the
/// total.
struct StreamSignal {
    known: Vec<f64>,
    total: Vec<f64>,
}

/// Draws the transmitted signal of one stream. Bin selection is not
/// simulated: the eMBB component of a no-URLLC block is drawn on its own
/// shell independently of the sensing codeword, and in a URLLC block the
/// URLLC codeword is drawn on its own shell independently of the rest.
fn draw_signal<R: Rng + ?Sized>(cfg: &SystemConfig, p: &CodingParams, kind: BlockKind, rng: &mut R) -> StreamSignal {
    let ell = cfg.block_len as usize;
    let lp = cfg.block_len as f64 * cfg.power;
    match kind {
        BlockKind::NoUrllc => {
            let sense = sample_shell(ell, (lp * (1.0 - p.beta_s1)).sqrt(), rng);
            let mut total = sample_shell(ell, (lp * p.beta_s1).sqrt(), rng);
            add_scaled(&mut total, &sense, 1.0);
            StreamSignal { known: sense, total }
        }
        BlockKind::WithUrllc => {
            let rest = 1.0 - p.beta_u;
            let sense = sample_shell(ell, (lp * rest * (1.0 - p.beta_s2)).sqrt(), rng);
            let embb = sample_shell(ell, (lp * rest * p.beta_s2).sqrt(), rng);
            let urllc_power = p.beta_u + p.alpha_u * p.alpha_u * rest;
            let mut total = sample_shell(ell, (lp * urllc_power).sqrt(), rng);
            add_scaled(&mut total, &embb, 1.0 - p.alpha_u);
            add_scaled(&mut total, &sense, 1.0 - p.alpha_u);
            StreamSignal { known: sense, total }
        }
    }
}

/// Scaling from the sensing codeword to the echo mean `μ / √γ`.
fn mean_factor(p: &CodingParams, kind: BlockKind) -> f64 {
    match kind {
        BlockKind::NoUrllc => 1.0 - p.alpha_s1,
        BlockKind::WithUrllc => (1.0 - p.alpha_u) * (1.0 - p.alpha_s2),
    }
}

/// Empirical detection and false-alarm rates of the likelihood-ratio test
/// in block `b`, with the threshold set from the analytic null quantile.
///
/// Streams whose statistic has unit variance are dropped as in the
/// analytic path. If no stream carries any echo the likelihood ratio is
/// identically one and the test is randomized at level `P_FA`.
pub fn mc_detection(
    cfg: &SystemConfig,
    p: &CodingParams,
    kind: BlockKind,
    b: usize,
    trials: usize,
    stream: RngStream,
) -> Result<McDetection> {
    if trials == 0 {
        return Err(IsacError::domain("mc_detection", "trials must be positive"));
    }
    let gains = &cfg.sense_gains[b];
    let (k1, k2) = kappas(p, kind);
    let streams: Vec<_> = gains
        .iter()
        .map(|&g| StreamDetection::new(g, cfg.power, cfg.block_len, p, kind, cfg.null_noncentrality))
        .collect();
    let live: Vec<StreamDetection> = streams.iter().filter_map(|(s, _)| *s).collect();
    let silent = streams.iter().all(|(_, m)| *m == 0.0);
    if live.is_empty() && !silent {
        return Err(IsacError::DegenerateStatistic { block: b });
    }
    let threshold = if live.is_empty() {
        None
    } else {
        let (null, _) = statistic_laws(&live, cfg.block_len)?;
        Some(null.inverse_sf(cfg.false_alarm)?)
    };
    let factor = mean_factor(p, kind);
    let counts = chunked(trials, stream, |n, rng| {
        let mut hits = [0u64; 2];
        for _ in 0..n {
            let Some(threshold) = threshold else {
                hits[0] += (rng.random::<f64>() < cfg.false_alarm) as u64;
                hits[1] += (rng.random::<f64>() < cfg.false_alarm) as u64;
                continue;
            };
            let mut stat = [0.0f64; 2];
            let mut shift = 0.0;
            for &g in gains {
                let sigma2 = 1.0 + g * k2 * (1.0 - k1) * cfg.power;
                let signal = draw_signal(cfg, p, kind, rng);
                if sigma2 <= 1.0 {
                    continue;
                }
                let mu: Vec<f64> = signal.known.iter().map(|v| g.sqrt() * factor * v).collect();
                shift += sq_norm(&mu) / (sigma2 - 1.0);
                for (h, s) in stat.iter_mut().enumerate() {
                    let mut y2 = 0.0;
                    let mut r2 = 0.0;
                    for (x, m) in signal.total.iter().zip(&mu) {
                        let z: f64 = rng.sample(StandardNormal);
                        let y = if h == 0 { z + g.sqrt() * x } else { z };
                        y2 += y * y;
                        r2 += (y - m) * (y - m);
                    }
                    *s += y2 - r2 / sigma2;
                }
            }
            let delta = threshold - shift;
            hits[0] += (stat[0] > delta) as u64;
            hits[1] += (stat[1] > delta) as u64;
        }
        hits
    });
    let (d, fa) = counts.iter().fold((0u64, 0u64), |(a, c), h| (a + h[0], c + h[1]));
    let p_d_hat = d as f64 / trials as f64;
    let p_fa_hat = fa as f64 / trials as f64;
    Ok(McDetection {
        p_d_hat,
        p_fa_hat,
        p_d_stderr: binomial_stderr(p_d_hat, trials),
        p_fa_stderr: binomial_stderr(p_fa_hat, trials),
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McInfoDensity {
    pub mean: f64,
    pub variance: f64,
    /// Anderson–Darling statistic of the standardized samples against a
    /// standard normal.
    pub anderson_darling: f64,
    pub trials: usize,
}

/// Samples of the URLLC information density of block `b`, summed over
/// streams, under the Gaussian decoding metric.
pub fn info_density_samples(
    cfg: &SystemConfig,
    p: &CodingParams,
    b: usize,
    trials: usize,
    stream: RngStream,
) -> Vec<f64> {
    let ell = cfg.block_len as usize;
    let lp = cfg.block_len as f64 * cfg.power;
    let urllc_power = p.beta_u + p.alpha_u * p.alpha_u * (1.0 - p.beta_u);
    let residual = (1.0 - p.alpha_u * p.alpha_u) * (1.0 - p.beta_u);
    let gains = &cfg.comm_gains[b];
    chunked(trials, stream, |n, rng| {
        (0..n)
            .map(|_| {
                let mut total = 0.0;
                for &g in gains {
                    let var_y = 1.0 + g * cfg.power;
                    let var_noise = 1.0 + g * residual * cfg.power;
                    let v = sample_shell(ell, (lp * urllc_power).sqrt(), rng);
                    let sd = var_noise.sqrt();
                    let mut y2 = 0.0;
                    let mut z2 = 0.0;
                    for &vt in &v {
                        let z = sd * rng.sample::<f64, _>(StandardNormal);
                        let y = g.sqrt() * vt + z;
                        y2 += y * y;
                        z2 += z * z;
                    }
                    total += 0.5 * ell as f64 * (var_y / var_noise).ln() - z2 / (2.0 * var_noise) + y2 / (2.0 * var_y);
                }
                total
            })
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Sample mean, variance and normality of the URLLC information density.
pub fn mc_info_density(
    cfg: &SystemConfig,
    p: &CodingParams,
    b: usize,
    trials: usize,
    stream: RngStream,
) -> Result<McInfoDensity> {
    if trials < 1000 {
        return Err(IsacError::domain("mc_info_density", format!("need at least 1000 trials, got {trials}")));
    }
    let samples = info_density_samples(cfg, p, b, trials, stream);
    let (mean, variance) = mean_var(&samples);
    Ok(McInfoDensity {
        mean,
        variance,
        anderson_darling: anderson_darling(&samples, mean, variance),
        trials,
    })
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Anderson–Darling `A²` of `x` against a normal law with the given
/// moments.
pub fn anderson_darling(x: &[f64], mean: f64, variance: f64) -> f64 {
    let sd = variance.sqrt();
    let mut z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len();
    let s: f64 = (0..n)
        .map(|i| {
            let lower = q_func(-z[i]).ln();
            let upper = q_func(z[n - 1 - i]).ln();
            (2 * i + 1) as f64 * (lower + upper)
        })
        .sum();
    -(n as f64) - s / n as f64
}

/// Empirical distribution function of a sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Fraction of samples `< x`.
    pub fn cdf_below(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    /// Sample quantile of order `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    /// Largest gap between this distribution and `cdf` over `points`
    /// empirical quantiles, checking both one-sided limits at each.
    pub fn max_gap<F: FnMut(f64) -> Result<f64>>(&self, points: usize, mut cdf: F) -> Result<f64> {
        let mut gap = 0.0f64;
        for i in 1..=points {
            let x = self.quantile(i as f64 / (points + 1) as f64);
            let f = cdf(x)?;
            gap = gap.max((self.cdf(x) - f).abs()).max((self.cdf_below(x) - f).abs());
        }
        Ok(gap)
    }
}

/// Half-width of the Dvoretzky–Kiefer–Wolfowitz band holding with
/// probability `confidence` for `n` samples.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

/// Draws of `Σ_j w_j ‖Z_j + √ν_j e₁‖²` with `Z_j` standard normal in
/// `dof` dimensions.
pub fn gchisq_samples(d: &GeneralizedChiSquare, trials: usize, stream: RngStream) -> Vec<f64> {
    let rest = (d.dof() > 1).then(|| ChiSquared::new((d.dof() - 1) as f64).expect("positive dof"));
    let comps: Vec<(f64, f64)> = d.weights().iter().zip(d.noncentralities()).map(|(&w, &nu)| (w, nu.sqrt())).collect();
    chunked(trials, stream, |n, rng| {
        (0..n)
            .map(|_| {
                comps
                    .iter()
                    .map(|&(w, shift)| {
                        let lead = rng.sample::<f64, _>(StandardNormal) + shift;
                        let tail = rest.as_ref().map_or(0.0, |c| c.sample(rng));
                        w * (lead * lead + tail)
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

pub fn mc_gchisq_samples(d: &GeneralizedChiSquare, trials: usize, stream: RngStream) -> EmpiricalCdf {
    EmpiricalCdf::new(gchisq_samples(d, trials, stream))
}
