//! Globally adaptive Gauss–Kronrod (7/15) integration.
//!
//! The integrator is generic over the value type so the same code path
//! integrates real Lévy-measure integrands and the complex characteristic
//! function kernels used by the hypothesis checks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be accumulated by the integrator.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

// Kronrod nodes (positive half, descending) and weights, 15-point rule.
#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
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
// Gauss weights for the embedded 7-point rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

fn gk15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let pair = f1 + f2;
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    let err = (kronrod - gauss).magnitude();
    (kronrod, err)
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over the finite interval `[a, b]`, bisecting the segment with
/// the largest error estimate until the total estimate meets tolerance.
pub fn integrate<V, F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if a == b {
        return Ok(QuadResult {
            value: V::zero(),
            error: 0.0,
            intervals: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailure(format!(
            "non-finite limits [{a}, {b}]"
        )));
    }
    let (v0, e0) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut total = v0;
    let mut total_err = e0;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {total_err:e} above tolerance {tol:e} after {} intervals on [{a}, {b}]",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point; accept it.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (lv, le) = gk15(&mut f, worst.a, mid);
        let (rv, re) = gk15(&mut f, mid, worst.b);
        total = total - worst.value + lv + rv;
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    // Re-sum from the segments to shed drift from incremental updates.
    let intervals = heap.len();
    let mut value = V::zero();
    let mut error = 0.0;
    for seg in heap.into_vec() {
        value = value + seg.value;
        error += seg.error;
    }
    if !value.magnitude().is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "non-finite integral on [{a}, {b}]"
        )));
    }
    Ok(QuadResult {
        value,
        error,
        intervals,
    })
}

/// Integrates `weight(u x) g(x)` over `[start, ∞)` where `weight` is `cos` or `sin`
/// and `g` decays monotonically. Integrates period by period and closes the
/// remainder with a two-term integration-by-parts tail, stopping once the
/// corrected estimate is stable.
pub(crate) fn integrate_oscillatory_tail<G>(
    g: G,
    u: f64,
    start: f64,
    sine: bool,
    opts: QuadOptions,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    debug_assert!(u > 0.0);
    let period = 2.0 * std::f64::consts::PI / u;
    let w = |x: f64| if sine { (u * x).sin() } else { (u * x).cos() };
    let tail = |x: f64| {
        let h = 1e-4 * x;
        let gx = g(x);
        let dg = (g(x + h) - g(x - h)) / (2.0 * h);
        let (s, c) = (u * x).sin_cos();
        if sine {
            c * gx / u - s * dg / (u * u)
        } else {
            -s * gx / u - c * dg / (u * u)
        }
    };
    let chunk_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-3,
        ..opts
    };
    let mut acc = 0.0;
    let mut x0 = start;
    let mut prev = f64::NAN;
    let mut stable = 0;
    for chunk in 0..2_000_000usize {
        let x1 = x0 + period;
        acc += integrate(|x| w(x) * g(x), x0, x1, chunk_opts)?.value;
        x0 = x1;
        let est = acc + tail(x0);
        if chunk >= 3 && (est - prev).abs() <= opts.abs_tol * 1e-2 {
            stable += 1;
            if stable >= 3 {
                return Ok(est);
            }
        } else {
            stable = 0;
        }
        prev = est;
    }
    Err(Error::QuadratureFailure(format!(
        "oscillatory tail did not settle for u = {u}"
    )))
}
