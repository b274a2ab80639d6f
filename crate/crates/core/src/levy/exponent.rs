use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FamilyTag, LevyDensity, LevyTriplet};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_oscillatory_tail, QuadOptions};

/// ψ(u) split into its real part a(u) and imaginary part b(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentValue {
    pub u: f64,
    pub a_part: f64,
    pub b_part: f64,
}

impl ExponentValue {
    pub fn psi(&self) -> Complex64 {
        Complex64::new(self.a_part, self.b_part)
    }

    /// ‖ψ(u)‖².
    pub fn norm_sqr(&self) -> f64 {
        self.a_part * self.a_part + self.b_part * self.b_part
    }

    /// `sqrt(‖ψ‖² / (2a))`, without any degeneracy check.
    pub fn normalization(&self) -> f64 {
        (self.norm_sqr() / (2.0 * self.a_part)).sqrt()
    }
}

/// `2 sin²(y/2)`, i.e. `1 - cos y` without cancellation near 0.
fn one_minus_cos(y: f64) -> f64 {
    let s = (0.5 * y).sin();
    2.0 * s * s
}

/// `sin y - y` without cancellation near 0.
fn sin_minus_id(y: f64) -> f64 {
    if y.abs() < 0.1 {
        let y2 = y * y;
        // -y³/3! + y⁵/5! - y⁷/7! + y⁹/9! - y¹¹/11!
        let mut term = -y * y2 / 6.0;
        let mut sum = term;
        for k in 2..6 {
            term *= -y2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        sum
    } else {
        y.sin() - y
    }
}

fn atom_part(triplet: &LevyTriplet, u: f64) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for atom in &triplet.measure.atoms {
        let y = u * atom.location;
        a += atom.mass * one_minus_cos(y);
        if atom.location.abs() < 1.0 {
            b -= atom.mass * sin_minus_id(y);
        } else {
            b -= atom.mass * y.sin();
        }
    }
    (a, b)
}

/// Density contribution to (a(u), b(u)) for u > 0. The integral is split at
/// |x| = 1, matching the compensator indicator. The non-oscillating part of
/// the tail is mapped onto (0, 1] by x → 1/x; the oscillating part is summed
/// period by period.
fn density_part(density: &LevyDensity, u: f64) -> Result<(f64, f64)> {
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let even = |x: f64| density.eval(x) + density.eval(-x);
    let odd = |x: f64| density.eval(x) - density.eval(-x);

    let a_inner = integrate(|x: f64| one_minus_cos(u * x) * even(x), 0.0, 1.0, opts)?.value;
    let tail_mass = integrate(|y: f64| even(1.0 / y) / (y * y), 0.0, 1.0, opts)?.value;
    let tail_cos = integrate_oscillatory_tail(even, u, 1.0, false, opts)?;
    let a = a_inner + tail_mass - tail_cos;

    let b = if density.symmetric {
        0.0
    } else {
        let b_inner = integrate(|x: f64| sin_minus_id(u * x) * odd(x), 0.0, 1.0, opts)?.value;
        let tail_sin = integrate_oscillatory_tail(odd, u, 1.0, true, opts)?;
        -(b_inner + tail_sin)
    };
    Ok((a, b))
}

/// Evaluates ψ(u) for the triplet. Closed forms are used for the tagged
/// families; custom densities go through adaptive quadrature.
pub fn levy_exponent(u: f64, triplet: &LevyTriplet) -> Result<ExponentValue> {
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!("u = {u} is not finite")));
    }
    if u == 0.0 {
        return Ok(ExponentValue {
            u,
            a_part: 0.0,
            b_part: 0.0,
        });
    }
    if let FamilyTag::SymmetricStable { alpha, scale } = triplet.family {
        return Ok(ExponentValue {
            u,
            a_part: scale * u.abs().powf(alpha),
            b_part: 0.0,
        });
    }

    let sigma = triplet.diffusion;
    let mut a = 0.5 * sigma * sigma * u * u;
    let mut b = -triplet.drift * u;
    let (aa, ba) = atom_part(triplet, u);
    a += aa;
    b += ba;

    if let Some(density) = &triplet.measure.density {
        // a is even and b odd in u, so integrate for |u| only.
        let (ad, bd) = density_part(density, u.abs())?;
        a += ad;
        b += bd * u.signum();
    }
    Ok(ExponentValue {
        u,
        a_part: a.max(0.0),
        b_part: b,
    })
}

/// `E[exp(iuX_t)] = exp(-t ψ(u))`.
pub fn char_function(u: f64, t: f64, triplet: &LevyTriplet) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t = {t} must be finite and >= 0")));
    }
    let psi = levy_exponent(u, triplet)?.psi();
    Ok((-psi * t).exp())
}

/// c(θ) = sqrt(‖ψ(θ)‖² / (2 a(θ))).
pub fn normalization_constant(theta: f64, triplet: &LevyTriplet) -> Result<f64> {
    normalization_constant_with_tol(theta, triplet, triplet.default_tolerance())
}

pub fn normalization_constant_with_tol(theta: f64, triplet: &LevyTriplet, tol: f64) -> Result<f64> {
    let e = levy_exponent(theta, triplet)?;
    if e.a_part <= tol {
        return Err(Error::degenerate(
            theta,
            format!("a(θ) = {:e} <= {tol:e}, c(θ) is undefined", e.a_part),
        ));
    }
    Ok(e.normalization())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaClass {
    /// a(θ)·a(2θ) ≠ 0: the approximation converges to a complex Brownian motion.
    ComplexAdmissible,
    /// a(θ) > 0 = a(2θ) and the driver lives on the lattice where sin(θX) ≡ 0:
    /// the imaginary part vanishes and the real part is a Stroock-type functional.
    RealDegenerate,
    /// ψ(θ) = 0: e^{iθX} ≡ 1 and c(θ) is 0/0.
    NullDegenerate,
    Inadmissible(String),
}

impl ThetaClass {
    pub fn name(&self) -> &'static str {
        match self {
            ThetaClass::ComplexAdmissible => "ComplexAdmissible",
            ThetaClass::RealDegenerate => "RealDegenerate",
            ThetaClass::NullDegenerate => "NullDegenerate",
            ThetaClass::Inadmissible(_) => "Inadmissible",
        }
    }
}

impl fmt::Display for ThetaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaClass::Inadmissible(reason) => write!(f, "Inadmissible({reason})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Classifies θ against the admissibility condition a(θ)a(2θ) ≠ 0 and the
/// two degenerate lattice cases.
///
/// The lattice test is atom-wise: each atom must satisfy mass·sin²(θx) ≤ tol,
/// which is the same scale as a(2θ) = Σ 2·mass·sin²(θx). A vanishing b(θ)
/// alone is not enough since it can cancel between atoms.
pub fn classify_theta(theta: f64, triplet: &LevyTriplet, tol: f64) -> Result<ThetaClass> {
    let e = levy_exponent(theta, triplet)?;
    if e.norm_sqr().sqrt() <= tol {
        return Ok(ThetaClass::NullDegenerate);
    }
    if e.a_part <= tol {
        return Ok(ThetaClass::Inadmissible(format!(
            "a(θ) = {:e} <= {tol:e} while ψ(θ) ≠ 0",
            e.a_part
        )));
    }
    let e2 = levy_exponent(2.0 * theta, triplet)?;
    if e2.a_part > tol {
        return Ok(ThetaClass::ComplexAdmissible);
    }
    let on_lattice = triplet.measure.density.is_none()
        && triplet.measure.atoms.iter().all(|atom| {
            let s = (theta * atom.location).sin();
            atom.mass * s * s <= tol
        })
        && {
            let drift_phase = theta * triplet.net_drift();
            drift_phase * drift_phase <= tol
        };
    if on_lattice {
        Ok(ThetaClass::RealDegenerate)
    } else {
        Ok(ThetaClass::Inadmissible(format!(
            "a(2θ) = {:e} <= {tol:e} but sin(θX) does not vanish identically",
            e2.a_part
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCondition {
    /// Human-readable form, e.g. `a(θ1−θ2)`.
    pub label: String,
    pub argument: f64,
    pub a_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub thetas: Vec<f64>,
    pub classes: Vec<ThetaClass>,
    pub conditions: Vec<AdmissibilityCondition>,
    pub passed: bool,
}

impl AdmissibilityReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ThetaClass::ComplexAdmissible)
            .map(|(j, c)| format!("θ{} = {} is {}", j + 1, self.thetas[j], c))
            .collect();
        out.extend(self.conditions.iter().filter(|c| !c.passed).map(|c| {
            format!("{} = a({}) = {} is not > tol", c.label, c.argument, c.a_value)
        }));
        out
    }
}

/// Multi-angle admissibility: every θ_j is complex-admissible and
/// a(θ_j ± θ_h) > tol for every pair j ≠ h.
pub fn admissible_vector(thetas: &[f64], triplet: &LevyTriplet, tol: f64) -> Result<AdmissibilityReport> {
    if thetas.is_empty() {
        return Err(Error::InvalidInput("thetas must be non-empty".into()));
    }
    let classes = thetas
        .iter()
        .map(|&t| classify_theta(t, triplet, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut conditions = Vec::new();
    // a is even, so j < h covers both orderings.
    for j in 0..thetas.len() {
        for h in (j + 1)..thetas.len() {
            for (sign, symbol) in [(1.0, '+'), (-1.0, '−')] {
                let argument = thetas[j] + sign * thetas[h];
                let a_value = levy_exponent(argument, triplet)?.a_part;
                conditions.push(AdmissibilityCondition {
                    label: format!("a(θ{}{}θ{})", j + 1, symbol, h + 1),
                    argument,
                    a_value,
                    passed: a_value > tol,
                });
            }
        }
    }
    let passed = classes.iter().all(|c| *c == ThetaClass::ComplexAdmissible)
        && conditions.iter().all(|c| c.passed);
    Ok(AdmissibilityReport {
        thetas: thetas.to_vec(),
        classes,
        conditions,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{Atom, JumpLaw, LevyMeasure};
    use std::f64::consts::PI;

    fn poisson() -> LevyTriplet {
        LevyTriplet::poisson(1.0).unwrap()
    }

    #[test]
    fn poisson_at_pi() {
        let e = levy_exponent(PI, &poisson()).unwrap();
        assert!((e.a_part - 2.0).abs() < 1e-15);
        assert!(e.b_part.abs() < 1e-15);
    }

    #[test]
    fn zero_argument_is_zero_for_every_family() {
        let fams = [
            poisson(),
            LevyTriplet::brownian(1.3, 0.7).unwrap(),
            LevyTriplet::symmetric_stable(1.5, 2.0).unwrap(),
        ];
        for t in &fams {
            let e = levy_exponent(0.0, t).unwrap();
            assert_eq!((e.a_part, e.b_part), (0.0, 0.0));
        }
    }

    #[test]
    fn brownian_is_half_u_squared() {
        let e = levy_exponent(2.0, &LevyTriplet::brownian(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(e.a_part, 2.0);
        assert_eq!(e.b_part, 0.0);
    }

    #[test]
    fn compound_symmetric_at_pi() {
        let t = LevyTriplet::compound_poisson(2.0, JumpLaw::symmetric(1.0).unwrap()).unwrap();
        let e = levy_exponent(PI, &t).unwrap();
        // direct: -Σ m (cos(πx) - 1) over x = ±1, m = 1
        let direct: f64 = [-1.0f64, 1.0].iter().map(|x| -((PI * x).cos() - 1.0)).sum();
        assert!((e.a_part - 4.0).abs() < 1e-14);
        assert!((e.a_part - direct).abs() < 1e-14);
        assert!(e.b_part.abs() < 1e-14);
        // the same measure as a custom atom list
        let custom = LevyTriplet::custom(
            t.drift(),
            0.0,
            LevyMeasure::from_atoms(vec![
                Atom { location: -1.0, mass: 1.0 },
                Atom { location: 1.0, mass: 1.0 },
            ])
            .unwrap(),
        )
        .unwrap();
        let ec = levy_exponent(PI, &custom).unwrap();
        assert_eq!(e, ec);
    }

    #[test]
    fn char_function_values() {
        let p = poisson();
        let z = char_function(PI, 1.0, &p).unwrap();
        assert!((z.re - (-2.0f64).exp()).abs() < 1e-15 && z.im.abs() < 1e-15);
        assert_eq!(char_function(1.234, 0.0, &p).unwrap(), Complex64::new(1.0, 0.0));
        let bm = LevyTriplet::brownian(1.0, 0.0).unwrap();
        let z = char_function(1.0, 2.0, &bm).unwrap();
        assert!((z.re - (-1.0f64).exp()).abs() < 1e-15 && z.im == 0.0);
        assert!(char_function(1.0, -1.0, &p).is_err());
    }

    #[test]
    fn normalization_examples() {
        let p = poisson();
        assert!((normalization_constant(PI, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((normalization_constant(PI / 2.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            normalization_constant(0.0, &p),
            Err(Error::DegenerateTheta { .. })
        ));
        let bm = LevyTriplet::brownian(1.0, 0.0).unwrap();
        for u in [0.3, 1.0, -2.5, 7.0] {
            let c = normalization_constant(u, &bm).unwrap();
            assert!((c - u.abs() / 2.0).abs() < 1e-15 * u.abs());
        }
    }

    #[test]
    fn classification_examples() {
        let p = poisson();
        let tol = 1e-12;
        assert_eq!(classify_theta(PI / 2.0, &p, tol).unwrap(), ThetaClass::ComplexAdmissible);
        assert_eq!(classify_theta(PI, &p, tol).unwrap(), ThetaClass::RealDegenerate);
        assert_eq!(classify_theta(PI + 1e-8, &p, tol).unwrap(), ThetaClass::RealDegenerate);
        assert_eq!(classify_theta(2.0 * PI, &p, tol).unwrap(), ThetaClass::NullDegenerate);
        let bm = LevyTriplet::brownian(1.0, 0.0).unwrap();
        assert_eq!(classify_theta(3.0, &bm, tol).unwrap(), ThetaClass::ComplexAdmissible);
    }

    #[test]
    fn drifting_lattice_is_not_real_degenerate() {
        // Poisson plus a drift: a(2π) = 0 but ψ(π) has an imaginary drift term
        // and the path leaves the integer lattice.
        let t = LevyTriplet::custom(0.3, 0.0, LevyMeasure::from_atoms(vec![Atom { location: 1.0, mass: 1.0 }]).unwrap())
            .unwrap();
        assert!(matches!(classify_theta(PI, &t, 1e-12).unwrap(), ThetaClass::Inadmissible(_)));
        assert!(matches!(classify_theta(2.0 * PI, &t, 1e-12).unwrap(), ThetaClass::Inadmissible(_)));
    }

    #[test]
    fn admissible_vector_examples() {
        let p = poisson();
        let r = admissible_vector(&[PI / 2.0, PI / 3.0], &p, 1e-12).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        let r = admissible_vector(&[PI / 2.0, PI / 2.0], &p, 1e-12).unwrap();
        assert!(!r.passed);
        let f = r.failures();
        assert_eq!(f.len(), 1);
        assert!(f[0].contains("a(θ1−θ2)") && f[0].contains("a(0)"), "{f:?}");
        let bm = LevyTriplet::brownian(1.0, 0.0).unwrap();
        assert!(admissible_vector(&[1.0, 2.0], &bm, 1e-12).unwrap().passed);
        assert!(admissible_vector(&[], &bm, 1e-12).is_err());
    }

    #[test]
    fn series_helpers_match_direct_evaluation() {
        for y in [0.5, 0.09, -0.05, 1e-3, 2.0] {
            assert!((one_minus_cos(y) - (1.0 - y.cos())).abs() < 1e-15);
            let direct = y.sin() - y;
            assert!((sin_minus_id(y) - direct).abs() <= 1e-16 + 1e-9 * direct.abs(), "{y}");
        }
    }
}
