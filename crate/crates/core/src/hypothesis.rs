//! The kernel hypotheses behind the limit theorems, evaluated two ways: by the
//! closed forms available for Lévy drivers and by nested adaptive quadrature
//! of the characteristic-function kernels.
//!
//! The quadrature side only needs [`IncrementLaw`], so it applies to any
//! independent-increment driver, not just Lévy ones.

use std::cell::RefCell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{char_function, levy_exponent, LevyTriplet};
use crate::quadrature::{integrate, QuadOptions};

/// Characteristic functions of the increments of an independent-increment process.
pub trait IncrementLaw {
    /// `E[exp(iu(X_to − X_from))]` for `from ≤ to`.
    fn increment_char(&self, u: f64, from: f64, to: f64) -> Result<Complex64>;
}

impl IncrementLaw for LevyTriplet {
    fn increment_char(&self, u: f64, from: f64, to: f64) -> Result<Complex64> {
        char_function(u, to - from, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    HBarCross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    ClosedForm,
    Quadrature,
    Both,
}

impl EvalMode {
    fn closed(self) -> bool {
        matches!(self, EvalMode::ClosedForm | EvalMode::Both)
    }

    fn quadrature(self) -> bool {
        matches!(self, EvalMode::Quadrature | EvalMode::Both)
    }
}

/// One evaluated hypothesis; serialized as a JSON row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub which: Hypothesis,
    pub theta: f64,
    pub theta_h: Option<f64>,
    pub c1: Option<i8>,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub closed_form: Option<f64>,
    pub quadrature: Option<f64>,
    /// Distance to what the hypothesis requires: excess over the bound for
    /// H1, |value − 2(t−s)| for H2, |value| for H3 and the cross terms.
    pub limit_gap: f64,
    /// K(θ)·(t−s) for H1, ε²·prefactor for H3 and the cross terms.
    pub bound: Option<f64>,
    /// K(θ) for H1, 1/(a·a') for H3 and the cross terms.
    pub bound_constant: Option<f64>,
}

impl HypothesisReport {
    /// Closed form when available, otherwise the quadrature value.
    pub fn value(&self) -> f64 {
        self.closed_form.or(self.quadrature).unwrap_or(f64::NAN)
    }
}

fn check_window(s: f64, t: f64, epsilon: f64) -> Result<()> {
    if !(0.0 <= s && s <= t && t.is_finite()) {
        return Err(Error::InvalidInput(format!("window needs 0 <= s <= t, got [{s}, {t}]")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} must be positive")));
    }
    Ok(())
}

fn positive_a(u: f64, triplet: &LevyTriplet, label: &str) -> Result<f64> {
    let a = levy_exponent(u, triplet)?.a_part;
    if a <= triplet.default_tolerance() {
        return Err(Error::degenerate(u, format!("{label} = a({u}) = {a:e} vanishes")));
    }
    Ok(a)
}

/// `(1 − e^{−x})/x` without cancellation for small x.
fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// ∫_0^L∫_0^y e^{−a(y−x)} dx dy = L/a − (1 − e^{−aL})/a².
fn triangle_exp(a: f64, len: f64) -> f64 {
    let x = a * len;
    // L/a·(1 − (1 − e^{−x})/x), with the bracket expanded for small x.
    let bracket = if x < 1e-4 {
        x / 2.0 - x * x / 6.0 + x * x * x / 24.0
    } else {
        1.0 - one_minus_exp_over(x)
    };
    len / a * bracket
}

/// ∫_0^L∫_0^y e^{−a1(y−x)} e^{−a2 x} dx dy = (g(a2) − g(a1))/(a1 − a2),
/// g(a) = (1 − e^{−aL})/a, with the derivative limit when a1 ≈ a2.
fn triangle_product(a1: f64, a2: f64, len: f64) -> f64 {
    let g = |a: f64| len * one_minus_exp_over(a * len);
    if (a1 - a2).abs() <= 1e-6 * a1.max(a2) {
        let a = 0.5 * (a1 + a2);
        // −g'(a) = (1 − e^{−aL}(1 + aL))/a²
        let x = a * len;
        return (-(-x).exp_m1() - x * (-x).exp()) / (a * a);
    }
    (g(a2) - g(a1)) / (a1 - a2)
}

fn inner_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 2000,
    }
}

fn outer_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-9,
        max_intervals: 4000,
    }
}

/// ε²∫_{x0}^{x1}∫_{x0}^{y} kernel(x, y) dx dy over driver time
/// x0 = 2s/ε², x1 = 2t/ε².
fn nested<K>(kernel: K, s: f64, t: f64, epsilon: f64) -> Result<f64>
where
    K: Fn(f64, f64) -> Result<f64>,
{
    let scale = 2.0 / (epsilon * epsilon);
    let (x0, x1) = (s * scale, t * scale);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let outer = integrate(
        |y: f64| {
            let inner = integrate(
                |x: f64| match kernel(x, y) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                },
                x0,
                y,
                inner_opts(),
            );
            match inner {
                Ok(r) => r.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        x0,
        x1,
        outer_opts(),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(epsilon * epsilon * outer.value)
}

/// ε²∫∫_{x0<x<y<x1} ‖φ_{X_y−X_x}(θ)‖ dx dy.
pub fn h1_quadrature<L: IncrementLaw + ?Sized>(law: &L, theta: f64, s: f64, t: f64, epsilon: f64) -> Result<f64> {
    check_window(s, t, epsilon)?;
    nested(|x, y| Ok(law.increment_char(theta, x, y)?.norm()), s, t, epsilon)
}

/// ε²c²∫∫_{x0<y<x<x1} [φ_{X_x−X_y}(θ) + φ_{X_x−X_y}(−θ)] dy dx for a candidate c.
pub fn h2_quadrature<L: IncrementLaw + ?Sized>(
    law: &L,
    theta: f64,
    c_theta: f64,
    s: f64,
    t: f64,
    epsilon: f64,
) -> Result<f64> {
    check_window(s, t, epsilon)?;
    // In the nested form the outer variable is the later time.
    let v = nested(
        |y, x| Ok((law.increment_char(theta, y, x)? + law.increment_char(-theta, y, x)?).re),
        s,
        t,
        epsilon,
    )?;
    Ok(c_theta * c_theta * v)
}

/// ε²∫∫_{x0<x<y<x1} ‖φ_{X_y−X_x}(θ)‖·‖φ_{X_x−X_{x0}}(θ')‖ dx dy. With θ' = 2θ this
/// is the third hypothesis, with θ' = θ_j + c1·θ_h the cross hypothesis.
pub fn product_quadrature<L: IncrementLaw + ?Sized>(
    law: &L,
    theta: f64,
    theta_prime: f64,
    s: f64,
    t: f64,
    epsilon: f64,
) -> Result<f64> {
    check_window(s, t, epsilon)?;
    let x0 = 2.0 * s / (epsilon * epsilon);
    nested(
        |x, y| Ok(law.increment_char(theta, x, y)?.norm() * law.increment_char(theta_prime, x0, x)?.norm()),
        s,
        t,
        epsilon,
    )
}

fn driver_len(s: f64, t: f64, epsilon: f64) -> f64 {
    2.0 * (t - s) / (epsilon * epsilon)
}

pub fn h1_value(
    theta: f64,
    triplet: &LevyTriplet,
    s: f64,
    t: f64,
    epsilon: f64,
    mode: EvalMode,
) -> Result<HypothesisReport> {
    check_window(s, t, epsilon)?;
    let (closed_form, bound, bound_constant) = if mode.closed() {
        let a = positive_a(theta, triplet, "a(θ)")?;
        let k = 2.0 / a;
        let len = driver_len(s, t, epsilon);
        (Some(epsilon * epsilon * triangle_exp(a, len)), Some(k * (t - s)), Some(k))
    } else {
        let a = levy_exponent(theta, triplet)?.a_part;
        let k = (a > triplet.default_tolerance()).then(|| 2.0 / a);
        (None, k.map(|k| k * (t - s)), k)
    };
    let quadrature = if mode.quadrature() {
        Some(h1_quadrature(triplet, theta, s, t, epsilon)?)
    } else {
        None
    };
    let value = closed_form.or(quadrature).unwrap_or(0.0);
    Ok(HypothesisReport {
        which: Hypothesis::H1,
        theta,
        theta_h: None,
        c1: None,
        s,
        t,
        epsilon,
        closed_form,
        quadrature,
        limit_gap: bound.map_or(0.0, |b| (value - b).max(0.0)),
        bound,
        bound_constant,
    })
}

pub fn h2_value(
    theta: f64,
    triplet: &LevyTriplet,
    s: f64,
    t: f64,
    epsilon: f64,
    mode: EvalMode,
) -> Result<HypothesisReport> {
    check_window(s, t, epsilon)?;
    let e = levy_exponent(theta, triplet)?;
    if e.a_part <= triplet.default_tolerance() {
        return Err(Error::degenerate(theta, format!("a(θ) = {:e}, c(θ) is undefined", e.a_part)));
    }
    let c = e.normalization();
    let len = driver_len(s, t, epsilon);
    let z = e.psi();
    // Boundary term ε²c²·2Re[(1 − e^{−Lz})/z²]; the leading part is exactly 2(t−s).
    let boundary = if len == 0.0 {
        0.0
    } else {
        let w = -(-(z * len)).exp() + 1.0;
        epsilon * epsilon * c * c * 2.0 * (w / (z * z)).re
    };
    let closed_form = mode.closed().then_some(2.0 * (t - s) - boundary);
    let quadrature = if mode.quadrature() {
        Some(h2_quadrature(triplet, theta, c, s, t, epsilon)?)
    } else {
        None
    };
    let limit_gap = if mode.closed() {
        boundary.abs()
    } else {
        (quadrature.unwrap_or(0.0) - 2.0 * (t - s)).abs()
    };
    Ok(HypothesisReport {
        which: Hypothesis::H2,
        theta,
        theta_h: None,
        c1: None,
        s,
        t,
        epsilon,
        closed_form,
        quadrature,
        limit_gap,
        bound: None,
        bound_constant: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn product_report(
    which: Hypothesis,
    theta: f64,
    theta_h: Option<f64>,
    c1: Option<i8>,
    theta_prime: f64,
    second_label: &str,
    triplet: &LevyTriplet,
    s: f64,
    t: f64,
    epsilon: f64,
    mode: EvalMode,
) -> Result<HypothesisReport> {
    check_window(s, t, epsilon)?;
    let (closed_form, bound, bound_constant) = if mode.closed() {
        let a1 = positive_a(theta, triplet, "a(θ)")?;
        let a2 = positive_a(theta_prime, triplet, second_label)?;
        let k = 1.0 / (a1 * a2);
        let value = epsilon * epsilon * triangle_product(a1, a2, driver_len(s, t, epsilon));
        (Some(value), Some(epsilon * epsilon * k), Some(k))
    } else {
        (None, None, None)
    };
    let quadrature = if mode.quadrature() {
        Some(product_quadrature(triplet, theta, theta_prime, s, t, epsilon)?)
    } else {
        None
    };
    Ok(HypothesisReport {
        which,
        theta,
        theta_h,
        c1,
        s,
        t,
        epsilon,
        closed_form,
        quadrature,
        limit_gap: closed_form.or(quadrature).unwrap_or(0.0).abs(),
        bound,
        bound_constant,
    })
}

pub fn h3_value(
    theta: f64,
    triplet: &LevyTriplet,
    s: f64,
    t: f64,
    epsilon: f64,
    mode: EvalMode,
) -> Result<HypothesisReport> {
    product_report(Hypothesis::H3, theta, None, None, 2.0 * theta, "a(2θ)", triplet, s, t, epsilon, mode)
}

#[allow(clippy::too_many_arguments)]
pub fn hbar_cross_value(
    theta_j: f64,
    theta_h: f64,
    c1: i8,
    triplet: &LevyTriplet,
    s: f64,
    t: f64,
    epsilon: f64,
    mode: EvalMode,
) -> Result<HypothesisReport> {
    if c1 != 1 && c1 != -1 {
        return Err(Error::InvalidInput(format!("c1 must be ±1, got {c1}")));
    }
    let label = if c1 == 1 { "a(θj+θh)" } else { "a(θj−θh)" };
    product_report(
        Hypothesis::HBarCross,
        theta_j,
        Some(theta_h),
        Some(c1),
        theta_j + f64::from(c1) * theta_h,
        label,
        triplet,
        s,
        t,
        epsilon,
        mode,
    )
}

/// Least-squares slope of log(gap) against log(ε) over the positive gaps.
/// Returns +∞ when fewer than two gaps are positive (the gap vanishes faster
/// than any power, or underflows).
pub fn fit_gap_exponent(epsilons: &[f64], gaps: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = epsilons
        .iter()
        .zip(gaps)
        .filter(|(e, g)| **e > 0.0 && **g > 0.0 && g.is_finite())
        .map(|(e, g)| (e.ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Every hypothesis for every angle (and ordered pair for the cross terms)
/// over an ε-ladder. Entries that are degenerate are listed in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisScan {
    pub rows: Vec<HypothesisReport>,
    pub skipped: Vec<String>,
    /// Fitted ε-exponent of the H2 gap, one per angle.
    pub h2_exponents: Vec<(f64, f64)>,
}

pub fn hypothesis_scan(
    thetas: &[f64],
    triplet: &LevyTriplet,
    s: f64,
    t: f64,
    ladder: &[f64],
    mode: EvalMode,
) -> Result<HypothesisScan> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut h2_exponents = Vec::new();
    let mut keep = |r: Result<HypothesisReport>, what: String, rows: &mut Vec<HypothesisReport>| -> Result<()> {
        match r {
            Ok(row) => rows.push(row),
            Err(e @ Error::DegenerateTheta { .. }) => skipped.push(format!("{what}: {e}")),
            Err(e) => return Err(e),
        }
        Ok(())
    };
    for &theta in thetas {
        let mut gaps = Vec::new();
        let mut gap_eps = Vec::new();
        for &eps in ladder {
            keep(h1_value(theta, triplet, s, t, eps, mode), format!("H1 θ={theta} ε={eps}"), &mut rows)?;
            let before = rows.len();
            keep(h2_value(theta, triplet, s, t, eps, mode), format!("H2 θ={theta} ε={eps}"), &mut rows)?;
            if rows.len() > before {
                // Gaps at the rounding level of 2(t−s) carry no rate information.
                let noise = 16.0 * f64::EPSILON * 2.0 * (t - s);
                let gap = rows[before].limit_gap;
                gaps.push(if gap <= noise { 0.0 } else { gap });
                gap_eps.push(eps);
            }
            keep(h3_value(theta, triplet, s, t, eps, mode), format!("H3 θ={theta} ε={eps}"), &mut rows)?;
        }
        if !gaps.is_empty() {
            h2_exponents.push((theta, fit_gap_exponent(&gap_eps, &gaps)));
        }
    }
    for (j, &tj) in thetas.iter().enumerate() {
        for (h, &th) in thetas.iter().enumerate() {
            if j == h {
                continue;
            }
            for c1 in [1i8, -1] {
                for &eps in ladder {
                    keep(
                        hbar_cross_value(tj, th, c1, triplet, s, t, eps, mode),
                        format!("H̄ θj={tj} θh={th} c1={c1} ε={eps}"),
                        &mut rows,
                    )?;
                }
            }
        }
    }
    Ok(HypothesisScan {
        rows,
        skipped,
        h2_exponents,
    })
}
