//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Integral<const N: usize = 1> {
    pub values: [f64; N],
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[cfg(test)]
impl Integral<1> {
    pub fn value(&self) -> f64 {
        self.values[0]
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment<const N: usize> {
    a: f64,
    b: f64,
    values: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss–Kronrod panel. The error estimate refers to the first
/// component only; the others are carried along on the same nodes.
fn gk15<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> Segment<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc.map(|v| v * WGK[7]);
    let mut gauss = fc[0] * WG[3];
    let mut abs_sum = kronrod[0].abs();
    let mut primary = [(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        primary[j] = (f1[0], f2[0]);
        for i in 0..N {
            kronrod[i] += WGK[j] * (f1[i] + f2[i]);
        }
        abs_sum += WGK[j] * (f1[0].abs() + f2[0].abs());
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1[0] + f2[0]);
        }
    }
    // Error heuristic as in QUADPACK's qk15: the raw |K − G| is scaled
    // down when it is small relative to the integrand's variation.
    let mean = 0.5 * kronrod[0];
    let mut spread = WGK[7] * (fc[0] - mean).abs();
    for (j, (f1, f2)) in primary.iter().enumerate() {
        spread += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let spread = spread * half.abs();
    let abs_integral = abs_sum * half.abs();
    let mut error = ((kronrod[0] - gauss) * half).abs();
    if spread != 0.0 && error != 0.0 {
        error = spread * (200.0 * error / spread).powf(1.5).min(1.0);
    }
    if abs_integral > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_integral);
    }
    Segment {
        a,
        b,
        values: kronrod.map(|v| v * half),
        error,
    }
}

#[cfg(test)]
/// Integrates `f` over `[a, b]` until the summed error estimate drops below
/// `abs_tol` or `max_evals` integrand evaluations have been spent.
pub(crate) fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_evals: usize,
) -> Integral {
    integrate_breaks(|x| [f(x)], &[a, b], abs_tol, max_evals)
}

/// As [`integrate`], for vector-valued `f` and starting from the partition
/// given by the increasing `breaks`. Starting from a fine partition matters
/// for oscillatory integrands, where a single wide rule can report a small
/// error by accident. Adaptivity follows the first component.
pub(crate) fn integrate_breaks<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    max_evals: usize,
) -> Integral<N> {
    let mut heap = BinaryHeap::with_capacity(2 * breaks.len());
    let mut evaluations = 0;
    let mut error = 0.0;
    for pair in breaks.windows(2) {
        let seg = gk15(&mut f, pair[0], pair[1]);
        evaluations += 15;
        error += seg.error;
        heap.push(seg);
    }
    while error > abs_tol && evaluations + 30 <= max_evals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Recompute sums from the leaves to shed accumulated rounding.
    let mut values = [0.0; N];
    let mut error_sum = 0.0;
    for seg in heap.iter() {
        for i in 0..N {
            values[i] += seg.values[i];
        }
        error_sum += seg.error;
    }
    Integral {
        values,
        error: error_sum,
        evaluations,
        converged: error_sum <= abs_tol,
    }
}
