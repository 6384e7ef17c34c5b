//! Weighted sums of noncentral chi-square variables.
//!
//! The distribution function is obtained by inverting the characteristic
//! function along the positive real axis (Imhof's integral). The integral is
//! truncated at a point chosen from an explicit bound on the discarded tail;
//! when that point is too far out for direct quadrature, the oscillating tail
//! is summed panel by panel and extrapolated with Wynn's epsilon algorithm.

use serde::Serialize;
use std::f64::consts::PI;

use super::quadrature::integrate_breaks;
use super::q_inv;
use crate::error::{IsacError, Result};

/// Tuning knobs for the characteristic-function inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImhofSettings {
    /// Target absolute error on the returned probability.
    pub abs_tol: f64,
    /// Integrand evaluation budget for one CDF evaluation.
    pub max_evals: usize,
    /// Multiplier applied to the truncation point picked from the bound.
    pub truncation_scale: f64,
    /// How many times a quantile bracket may be widened before giving up.
    pub max_bracket_growth: u32,
}

impl Default for ImhofSettings {
    fn default() -> Self {
        ImhofSettings {
            abs_tol: 1e-10,
            max_evals: 1_000_000,
            truncation_scale: 1.0,
            max_bracket_growth: 64,
        }
    }
}

/// `Σ_j w_j · χ'²(dof, ν_j)` with independent components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedChiSquare {
    weights: Vec<f64>,
    dof: u32,
    noncentralities: Vec<f64>,
}

impl GeneralizedChiSquare {
    pub fn new(weights: Vec<f64>, dof: u32, noncentralities: Vec<f64>) -> Result<Self> {
        const F: &str = "GeneralizedChiSquare::new";
        if weights.is_empty() {
            return Err(IsacError::domain(F, "at least one component is required"));
        }
        if weights.len() != noncentralities.len() {
            return Err(IsacError::domain(
                F,
                format!(
                    "{} weights but {} noncentralities",
                    weights.len(),
                    noncentralities.len()
                ),
            ));
        }
        if dof == 0 {
            return Err(IsacError::domain(F, "degrees of freedom must be positive"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w == 0.0) {
            return Err(IsacError::domain(F, format!("weight {w} must be finite and nonzero")));
        }
        if let Some(v) = noncentralities.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(IsacError::domain(F, format!("noncentrality {v} must be finite and nonnegative")));
        }
        Ok(GeneralizedChiSquare {
            weights,
            dof,
            noncentralities,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn noncentralities(&self) -> &[f64] {
        &self.noncentralities
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self) -> f64 {
        let h = self.dof as f64;
        self.weights
            .iter()
            .zip(&self.noncentralities)
            .map(|(w, v)| w * (h + v))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let h = self.dof as f64;
        self.weights
            .iter()
            .zip(&self.noncentralities)
            .map(|(w, v)| 2.0 * w * w * (h + 2.0 * v))
            .sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.cdf_with(x, &ImhofSettings::default())
    }

    pub fn sf(&self, x: f64) -> Result<f64> {
        self.sf_with(x, &ImhofSettings::default())
    }

    pub fn cdf_with(&self, x: f64, settings: &ImhofSettings) -> Result<f64> {
        self.tails(x, settings).map(|(cdf, _)| cdf)
    }

    pub fn sf_with(&self, x: f64, settings: &ImhofSettings) -> Result<f64> {
        self.tails(x, settings).map(|(_, sf)| sf)
    }

    /// Smallest `x` with `cdf(x) = p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.quantile_with(p, &ImhofSettings::default())
    }

    /// `x` with `sf(x) = p`; accurate for small upper-tail probabilities.
    pub fn inverse_sf(&self, p: f64) -> Result<f64> {
        self.inverse_sf_with(p, &ImhofSettings::default())
    }

    pub fn quantile_with(&self, p: f64, settings: &ImhofSettings) -> Result<f64> {
        self.invert(p, false, settings)
    }

    pub fn inverse_sf_with(&self, p: f64, settings: &ImhofSettings) -> Result<f64> {
        self.invert(p, true, settings)
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.evaluate(x, &ImhofSettings::default()).map(|t| t.pdf)
    }

    fn tails(&self, x: f64, settings: &ImhofSettings) -> Result<(f64, f64)> {
        self.evaluate(x, settings).map(|t| (t.cdf, t.sf))
    }

    fn evaluate(&self, x: f64, settings: &ImhofSettings) -> Result<Evaluation> {
        if x.is_nan() {
            return Err(IsacError::domain("gchisq_cdf", "argument is NaN"));
        }
        let all_pos = self.weights.iter().all(|w| *w > 0.0);
        let all_neg = self.weights.iter().all(|w| *w < 0.0);
        let below = Evaluation { cdf: 0.0, sf: 1.0, pdf: 0.0 };
        let above = Evaluation { cdf: 1.0, sf: 0.0, pdf: 0.0 };
        if (all_pos && x <= 0.0) || x == f64::NEG_INFINITY {
            return Ok(below);
        }
        if (all_neg && x >= 0.0) || x == f64::INFINITY {
            return Ok(above);
        }
        let scale = self.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let weights: Vec<f64> = self.weights.iter().map(|w| w / scale).collect();
        let integrand = Integrand {
            weights: &weights,
            noncentralities: &self.noncentralities,
            dof: self.dof as f64,
            x: x / scale,
        };
        let [tail, density] = integrand.integrate(settings)?;
        Ok(Evaluation {
            cdf: (0.5 - tail / PI).clamp(0.0, 1.0),
            sf: (0.5 + tail / PI).clamp(0.0, 1.0),
            pdf: (density / (2.0 * PI * scale)).max(0.0),
        })
    }

    /// Safeguarded Newton iteration on the log of the relevant tail
    /// probability, falling back to bisection inside a bracket that is
    /// grown from `mean ± k·sd`.
    fn invert(&self, p: f64, upper: bool, settings: &ImhofSettings) -> Result<f64> {
        let name = if upper { "gchisq_inverse_sf" } else { "gchisq_quantile" };
        if !(p > 0.0 && p < 1.0) {
            return Err(IsacError::domain(name, format!("probability {p} not in (0, 1)")));
        }
        let mean = self.mean();
        let sd = self.std_dev();
        let all_pos = self.weights.iter().all(|w| *w > 0.0);
        let all_neg = self.weights.iter().all(|w| *w < 0.0);
        // Support edges (exclusive) and the current bracket. `lo` always
        // has its tail difference on the "too small x" side.
        let (support_lo, support_hi) = (
            if all_pos { 0.0 } else { f64::NEG_INFINITY },
            if all_neg { 0.0 } else { f64::INFINITY },
        );
        let mut lo = support_lo;
        let mut hi = support_hi;
        // Normal approximation as the starting point.
        let z = -q_inv(p)?;
        let mut x = if upper { mean - z * sd } else { mean + z * sd };
        if x <= support_lo || x >= support_hi {
            x = mean;
        }
        let mut growth = 0u32;
        let mut step_k = 1.0;
        let x_tol = 8.0 * f64::EPSILON * mean.abs().max(sd);
        let mut last_gap = f64::INFINITY;
        for _ in 0..200 {
            let e = self.evaluate(x, settings)?;
            let (t, slope) = if upper { (e.sf, -e.pdf) } else { (e.cdf, e.pdf) };
            // g(x) = tail(x) − p oriented to increase with x.
            let g = if upper { p - t } else { t - p };
            let gap = if t > 0.0 { (t.ln() - p.ln()).abs() } else { f64::INFINITY };
            last_gap = gap;
            if gap <= 1e-11 || (t - p).abs() <= 1e-3 * settings.abs_tol * p.min(1.0) {
                return Ok(x);
            }
            if g < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= x_tol {
                return Ok(x);
            }
            // Newton step on ln t.
            let mut next = if t > 0.0 && slope != 0.0 {
                x - (t.ln() - p.ln()) * t / slope
            } else {
                f64::NAN
            };
            // Below this step the tail is flat to within quadrature noise.
            if (next - x).abs() <= 1e-10 * x.abs().max(sd) {
                return Ok(next);
            }
            if !(next > lo && next < hi) {
                next = if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    growth += 1;
                    if growth > settings.max_bracket_growth {
                        return Err(IsacError::NumericalFailure {
                            context: format!("{name}: bracket growth limit reached at p = {p:e}"),
                            residual: (t - p).abs(),
                        });
                    }
                    step_k *= 2.0;
                    let cand = if lo.is_finite() { x + step_k * sd } else { x - step_k * sd };
                    if cand <= support_lo {
                        0.5 * (support_lo + x)
                    } else if cand >= support_hi {
                        0.5 * (support_hi + x)
                    } else {
                        cand
                    }
                };
            }
            x = next;
        }
        Err(IsacError::NumericalFailure {
            context: format!("{name}: root search did not converge at p = {p:e}"),
            residual: last_gap,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Evaluation {
    cdf: f64,
    sf: f64,
    pdf: f64,
}

/// CDF of `d` at `x`.
pub fn gchisq_cdf(d: &GeneralizedChiSquare, x: f64) -> Result<f64> {
    d.cdf(x)
}

/// Inverse of [`gchisq_cdf`].
pub fn gchisq_quantile(d: &GeneralizedChiSquare, p: f64) -> Result<f64> {
    d.quantile(p)
}

/// Imhof integrand for weights already normalized so that `max |w| = 1`.
struct Integrand<'a> {
    weights: &'a [f64],
    noncentralities: &'a [f64],
    dof: f64,
    x: f64,
}

impl Integrand<'_> {
    /// Total degrees of freedom divided by two.
    fn half_dof(&self) -> f64 {
        0.5 * self.dof * self.weights.len() as f64
    }

    /// `[sin θ / (u ρ), cos θ / ρ]`: the tail and density integrands.
    fn eval(&self, u: f64) -> [f64; 2] {
        let mut theta = 0.0;
        let mut log_rho = 0.0;
        for (&w, &v) in self.weights.iter().zip(self.noncentralities) {
            let a = w * u;
            let a2 = a * a;
            let d = 1.0 + a2;
            theta += self.dof * a.atan() + v * a / d;
            log_rho += 0.25 * self.dof * a2.ln_1p() + 0.5 * v * a2 / d;
        }
        let theta = 0.5 * theta - 0.5 * self.x * u;
        let amplitude = (-log_rho).exp();
        let (sin, cos) = theta.sin_cos();
        [sin * amplitude / u, cos * amplitude]
    }

    /// Derivative of the phase `θ(u)`.
    fn phase_rate(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (&w, &v) in self.weights.iter().zip(self.noncentralities) {
            let a2 = (w * u) * (w * u);
            let d = 1.0 + a2;
            acc += self.dof * w / d + v * w * (1.0 - a2) / (d * d);
        }
        0.5 * (acc - self.x)
    }

    /// Initial partition of `[0, end]`. Panels span at most half a local
    /// oscillation period and at most a fraction of the scale on which the
    /// amplitude `1/ρ` decays near the origin (or of `u` further out).
    fn panel_breaks(&self, end: f64) -> Vec<f64> {
        let curvature: f64 = self
            .weights
            .iter()
            .zip(self.noncentralities)
            .map(|(&w, &v)| w * w * (0.25 * self.dof + 0.5 * v))
            .sum();
        let base = 0.5 / curvature.sqrt();
        let mut breaks = vec![0.0];
        let mut u = 0.0f64;
        while u < end {
            let width = (PI / self.phase_rate(u).abs()).min(base.max(0.25 * u));
            u = (u + width).min(end);
            if breaks.len() > 100_000 {
                u = end;
            }
            breaks.push(u);
        }
        breaks
    }

    /// Natural log of the bound on `|∫_U^∞|` divided by π.
    fn log_truncation_bound(&self, u: f64) -> f64 {
        let k = self.half_dof();
        let mut acc = (PI * k).ln() + k * u.ln();
        for (&w, &v) in self.weights.iter().zip(self.noncentralities) {
            let a2 = (w * u) * (w * u);
            acc += 0.5 * self.dof * w.abs().ln() + 0.5 * v * a2 / (1.0 + a2);
        }
        -acc
    }

    /// Point beyond which the bound on the discarded integral is `target`.
    fn truncation_point(&self, target: f64) -> f64 {
        let log_target = target.ln();
        let mut lo = 1.0f64;
        let mut hi = 1.0f64;
        if self.log_truncation_bound(1.0) > log_target {
            while self.log_truncation_bound(hi) > log_target && hi < 1e300 {
                lo = hi;
                hi *= 2.0;
            }
        } else {
            while lo > 1e-300 && self.log_truncation_bound(lo) <= log_target {
                hi = lo;
                lo *= 0.5;
            }
        }
        // The bound decreases in u; refine within the factor-of-two bracket.
        for _ in 0..12 {
            let mid = (lo * hi).sqrt();
            if self.log_truncation_bound(mid) > log_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn integrate(&self, settings: &ImhofSettings) -> Result<[f64; 2]> {
        // Error budget, in units of the integral (probability times π).
        let tol = settings.abs_tol * PI;
        let truncation = self.truncation_point(0.5 * settings.abs_tol) * settings.truncation_scale;
        let min_weight = self.weights.iter().fold(f64::INFINITY, |m, w| m.min(w.abs()));
        // Half period of the oscillation far out, where θ ≈ const − x u / 2.
        let half_period = if self.x != 0.0 { 2.0 * PI / self.x.abs() } else { f64::INFINITY };
        let direct_cycles = truncation / half_period;
        let tail_start = (8.0 / min_weight).max(4.0 * half_period);
        if direct_cycles <= 4000.0 || tail_start >= truncation || !half_period.is_finite() {
            let breaks = self.panel_breaks(truncation);
            let r = integrate_breaks(|u| self.eval(u), &breaks, 0.5 * tol, settings.max_evals);
            if !r.converged {
                return Err(IsacError::NumericalFailure {
                    context: "gchisq characteristic-function inversion".into(),
                    residual: r.error / PI,
                });
            }
            return Ok(r.values);
        }
        // Body plus extrapolated oscillating tail.
        let breaks = self.panel_breaks(tail_start);
        let body = integrate_breaks(|u| self.eval(u), &breaks, 0.25 * tol, settings.max_evals);
        let mut evaluations = body.evaluations;
        if !body.converged {
            return Err(IsacError::NumericalFailure {
                context: "gchisq characteristic-function inversion (body)".into(),
                residual: body.error / PI,
            });
        }
        let panel_tol = 1e-3 * tol;
        let mut partial = [Vec::with_capacity(128), Vec::with_capacity(128)];
        let mut running = [0.0; 2];
        let mut last_estimate = f64::NAN;
        let mut stable = 0;
        for m in 0..400 {
            let a = tail_start + m as f64 * half_period;
            let r = integrate_breaks(
                |u| self.eval(u),
                &[a, a + half_period],
                panel_tol,
                settings.max_evals.saturating_sub(evaluations),
            );
            evaluations += r.evaluations;
            for i in 0..2 {
                running[i] += r.values[i];
                partial[i].push(running[i]);
            }
            if partial[0].len() >= 3 {
                let estimate = wynn_epsilon(&partial[0]);
                let change = (estimate - last_estimate).abs();
                if change <= 0.25 * tol {
                    stable += 1;
                    if stable >= 2 {
                        return Ok([body.values[0] + estimate, body.values[1] + wynn_epsilon(&partial[1])]);
                    }
                } else {
                    stable = 0;
                }
                last_estimate = estimate;
            }
            if evaluations >= settings.max_evals {
                break;
            }
        }
        Err(IsacError::NumericalFailure {
            context: "gchisq characteristic-function inversion (tail extrapolation)".into(),
            residual: f64::max(body.error, (running[0] - last_estimate).abs()) / PI,
        })
    }
}

/// Wynn's epsilon extrapolation of the limit of `sums`, using the highest
/// even column that the sequence supports.
fn wynn_epsilon(sums: &[f64]) -> f64 {
    // Use at most the trailing 25 terms; older ones only add rounding.
    let s = &sums[sums.len().saturating_sub(25)..];
    let n = s.len();
    let mut prev = vec![0.0; n + 1];
    let mut curr: Vec<f64> = s.to_vec();
    let mut best = *s.last().unwrap();
    let mut column = 0;
    while curr.len() > 1 {
        let mut next = Vec::with_capacity(curr.len() - 1);
        for i in 0..curr.len() - 1 {
            let diff = curr[i + 1] - curr[i];
            if diff == 0.0 {
                return curr[i + 1];
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        prev = curr;
        curr = next;
        column += 1;
        if column % 2 == 0 {
            best = *curr.last().unwrap();
        }
    }
    best
}
