//! Special functions and the generalized chi-square distribution.
//!
//! Everything here works in natural units: logarithms are natural, so
//! [`capacity_fn`] returns nats per channel use.

mod gchisq;
pub(crate) mod quadrature;

pub use gchisq::{gchisq_cdf, gchisq_quantile, GeneralizedChiSquare, ImhofSettings};

use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{IsacError, Result};

/// 1/√(2π)
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
///
/// Infinite arguments are accepted and map to 0 or 1.
#[inline]
pub fn q_func(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`q_func`] on the open unit interval.
///
/// The `erfc⁻¹` seed is polished with Newton steps against [`q_func`].
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(IsacError::domain("q_inv", format!("p = {p} is outside (0, 1)")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work on the smaller tail so erfc_inv sees arguments near zero.
    let (tail, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let mut x = SQRT_2 * erfc_inv(2.0 * tail);
    for _ in 0..2 {
        let density = normal_pdf(x);
        if density > 0.0 {
            x += (q_func(x) - tail) / density;
        }
    }
    Ok(sign * x)
}

/// Gaussian channel capacity `½ ln(1 + x)` in nats.
pub fn capacity_fn(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(IsacError::domain("capacity_fn", format!("snr = {x} is negative")));
    }
    Ok(0.5 * x.ln_1p())
}

/// Gaussian channel dispersion `x(2 + x) / (2(1 + x)²)`.
pub fn dispersion_fn(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(IsacError::domain("dispersion_fn", format!("snr = {x} is negative")));
    }
    if x.is_infinite() {
        return Ok(0.5);
    }
    let one_plus = 1.0 + x;
    Ok(x * (2.0 + x) / (2.0 * one_plus * one_plus))
}

/// Infallible versions for callers that have already validated `x ≥ 0`.
#[inline]
pub(crate) fn capacity(x: f64) -> f64 {
    0.5 * x.max(0.0).ln_1p()
}

#[inline]
pub(crate) fn dispersion(x: f64) -> f64 {
    let x = x.max(0.0);
    let one_plus = 1.0 + x;
    x * (2.0 + x) / (2.0 * one_plus * one_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Continued-fraction / series evaluation of Q(x) used only as an
    /// independent reference. Series for |x| < 3, Lentz continued fraction
    /// beyond.
    fn q_reference(x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - q_reference(-x);
        }
        if x < 3.0 {
            // Φ(x) - 1/2 = φ(x) Σ x^(2k+1) / (1·3·5···(2k+1))
            let mut term = x;
            let mut sum = x;
            let mut k = 0.0;
            while term.abs() > 1e-18 * sum.abs() {
                k += 1.0;
                term *= x * x / (2.0 * k + 1.0);
                sum += term;
            }
            0.5 - normal_pdf(x) * sum
        } else {
            // Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = k as f64 / (x + f);
            }
            normal_pdf(x) / (x + f)
        }
    }

    #[test]
    fn q_func_fixed_points() {
        assert_eq!(q_func(0.0), 0.5);
        assert_eq!(q_func(f64::INFINITY), 0.0);
        assert_eq!(q_func(f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn q_func_matches_series_reference() {
        let reference = q_reference(3.0);
        assert!((q_func(3.0) - reference).abs() < 1e-10);
        assert!((q_func(3.0) - reference).abs() / reference < 1e-12);
        for i in -80..=80 {
            let x = i as f64 / 10.0;
            let r = q_reference(x);
            assert!(
                ((q_func(x) - r) / r).abs() < 1e-12,
                "x = {x}: {} vs {}",
                q_func(x),
                r
            );
        }
    }

    #[test]
    fn q_func_deep_tail_absolute() {
        for x in [9.0, 12.0, 20.0, 38.0] {
            assert!((q_func(x) - q_reference(x)).abs() < 1e-16);
        }
    }

    #[test]
    fn q_inv_domain() {
        assert!(q_inv(0.0).is_err());
        assert!(q_inv(1.0).is_err());
        assert!(q_inv(-0.1).is_err());
        assert!(q_inv(f64::NAN).is_err());
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
    }

    #[test]
    fn q_inv_matches_bisection() {
        // Bracketing oracle: bisection on q_func itself.
        let p = 1e-6;
        let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_func(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let bisect = 0.5 * (lo + hi);
        assert!((q_inv(p).unwrap() - bisect).abs() < 1e-10);
        assert!((q_inv(q_func(2.7)).unwrap() - 2.7).abs() < 1e-9);
    }

    #[test]
    fn capacity_and_dispersion_values() {
        assert_eq!(capacity_fn(0.0).unwrap(), 0.0);
        assert!((capacity_fn(1.0).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((capacity_fn(std::f64::consts::E.powi(2) - 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(dispersion_fn(0.0).unwrap(), 0.0);
        assert!((dispersion_fn(1.0).unwrap() - 0.375).abs() < 1e-15);
        assert!((dispersion_fn(1e12).unwrap() - 0.5).abs() < 1e-11);
        assert!(capacity_fn(-1e-9).is_err());
        assert!(dispersion_fn(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn q_complement_symmetry(x in -30.0f64..30.0) {
            prop_assert!((q_func(x) + q_func(-x) - 1.0).abs() < 1e-15);
        }

        #[test]
        fn q_inv_round_trip(x in -6.0f64..6.0) {
            // For x < 0, q_func(x) = 1 − Q(|x|) is stored with absolute
            // precision ε only, which moves the inverse by up to ε/φ(x).
            let lost = if x < 0.0 { f64::EPSILON / normal_pdf(x) } else { 0.0 };
            prop_assert!((q_inv(q_func(x)).unwrap() - x).abs() < 1e-9 + lost);
        }

        #[test]
        fn q_inv_round_trip_on_small_tail(x in 0.0f64..6.0) {
            prop_assert!((q_inv(q_func(x)).unwrap() - x).abs() < 1e-9);
            prop_assert!((-q_inv(1.0 - q_func(x)).unwrap() - x).abs() < 1e-9 + f64::EPSILON / normal_pdf(x));
        }

        #[test]
        fn q_inv_strictly_decreasing(a in 1e-12f64..0.999, b in 1e-12f64..0.999) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(q_inv(lo).unwrap() > q_inv(hi).unwrap());
        }

        #[test]
        fn dispersion_increasing(a in 0.0f64..1e3, d in 1e-6f64..10.0) {
            prop_assert!(dispersion_fn(a + d).unwrap() > dispersion_fn(a).unwrap());
            prop_assert!(capacity_fn(a + d).unwrap() > capacity_fn(a).unwrap());
            prop_assert!(dispersion_fn(a).unwrap() < 0.5);
        }
    }
}
