//! Lévy–Khinchine triplets and the quantities derived from their exponent.
//!
//! The exponent is taken in the convention `E[exp(iuX_t)] = exp(-t ψ(u))` with
//!
//! ```text
//! ψ(u) = -i·drift·u + ½σ²u² - ∫ (e^{iux} - 1 - iux·1{|x|<1}) η(dx)
//! ```
//!
//! so that `a(u) = Re ψ(u) ≥ 0` and `b(u) = Im ψ(u)`.

mod exponent;
mod json;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

pub use exponent::{
    admissible_vector, char_function, classify_theta, levy_exponent, normalization_constant,
    AdmissibilityCondition, AdmissibilityReport, ExponentValue, ThetaClass,
};
pub use json::{AtomDoc, JumpDoc, TripletDoc};

/// Degeneracy tolerance for closed-form families.
pub const CLOSED_FORM_TOL: f64 = 1e-12;
/// Degeneracy tolerance once a quadrature-backed density is involved.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// A point mass of the Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Discrete jump-size distribution of a compound Poisson process.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpLaw {
    outcomes: Vec<(f64, f64)>,
}

impl JumpLaw {
    /// Builds a law from `(size, probability)` pairs. Probabilities must be
    /// positive and sum to one within 1e-9; they are renormalized exactly.
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidTriplet("jump law has no outcomes".into()));
        }
        for &(x, p) in &outcomes {
            if !(x.is_finite() && x != 0.0) {
                return Err(Error::InvalidTriplet(format!("jump size {x} must be finite and non-zero")));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidTriplet(format!("jump probability {p} must be positive")));
            }
        }
        let total: f64 = outcomes.iter().map(|o| o.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTriplet(format!(
                "jump probabilities sum to {total}, expected 1"
            )));
        }
        let outcomes = outcomes.into_iter().map(|(x, p)| (x, p / total)).collect();
        Ok(JumpLaw { outcomes })
    }

    /// The unit jump of a standard Poisson process.
    pub fn unit() -> Self {
        JumpLaw {
            outcomes: vec![(1.0, 1.0)],
        }
    }

    /// Jumps of ±`size` with equal probability.
    pub fn symmetric(size: f64) -> Result<Self> {
        JumpLaw::new(vec![(-size, 0.5), (size, 0.5)])
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    fn atoms(&self, rate: f64) -> Vec<Atom> {
        if rate == 0.0 {
            return Vec::new();
        }
        self.outcomes
            .iter()
            .map(|&(x, p)| Atom {
                location: x,
                mass: rate * p,
            })
            .collect()
    }
}

/// Absolutely continuous part of a Lévy measure.
///
/// `near_zero_exponent` p declares `f(x) = O(|x|^{-p})` as x → 0 and must be
/// below 3; `tail_exponent` q declares `f(x) = O(|x|^{-q})` as |x| → ∞ and must
/// exceed 1 (use `f64::INFINITY` for faster-than-polynomial decay).
#[derive(Clone)]
pub struct LevyDensity {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub near_zero_exponent: f64,
    pub tail_exponent: f64,
    /// True when f(-x) = f(x), which lets b(u) vanish without quadrature.
    pub symmetric: bool,
}

impl LevyDensity {
    pub fn new<F>(f: F, near_zero_exponent: f64, tail_exponent: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(near_zero_exponent < 3.0) {
            return Err(Error::InvalidTriplet(format!(
                "near-zero exponent {near_zero_exponent} makes x^2 η(dx) non-integrable"
            )));
        }
        if !(tail_exponent > 1.0) {
            return Err(Error::InvalidTriplet(format!(
                "tail exponent {tail_exponent} makes η non-integrable away from 0"
            )));
        }
        Ok(LevyDensity {
            f: Arc::new(f),
            near_zero_exponent,
            tail_exponent,
            symmetric: false,
        })
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// `∫ min(x², 1) η(dx)` by quadrature.
    pub fn levy_integral(&self) -> Result<f64> {
        let opts = QuadOptions::default();
        let even = |x: f64| self.eval(x) + self.eval(-x);
        let inner = integrate(|x: f64| x * x * even(x), 0.0, 1.0, opts)?.value;
        let outer = integrate(|y: f64| even(1.0 / y) / (y * y), 0.0, 1.0, opts)?.value;
        Ok(inner + outer)
    }
}

impl fmt::Debug for LevyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyDensity")
            .field("near_zero_exponent", &self.near_zero_exponent)
            .field("tail_exponent", &self.tail_exponent)
            .field("symmetric", &self.symmetric)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LevyMeasure {
    pub atoms: Vec<Atom>,
    pub density: Option<LevyDensity>,
}

impl LevyMeasure {
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        let m = LevyMeasure {
            atoms,
            density: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_density(atoms: Vec<Atom>, density: LevyDensity) -> Result<Self> {
        let m = LevyMeasure {
            atoms,
            density: Some(density),
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if !(a.location.is_finite() && a.location != 0.0) {
                return Err(Error::InvalidTriplet(format!(
                    "atom location {} must be finite and non-zero",
                    a.location
                )));
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidTriplet(format!(
                    "atom mass {} must be positive",
                    a.mass
                )));
            }
        }
        if let Some(d) = &self.density {
            let integral = d.levy_integral().map_err(|e| {
                Error::InvalidTriplet(format!("cannot verify ∫min(x²,1)η(dx) < ∞: {e}"))
            })?;
            if !integral.is_finite() || integral < 0.0 {
                return Err(Error::InvalidTriplet(format!(
                    "∫min(x²,1)η(dx) = {integral} is not a finite non-negative number"
                )));
            }
        }
        Ok(())
    }

    /// Total mass of the atomic part (the jump intensity of its compound Poisson).
    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `∫_{|x|<1} x η(dx)` over the atoms.
    pub fn small_jump_mean(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location.abs() < 1.0)
            .map(|a| a.mass * a.location)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyTag {
    Poisson {
        rate: f64,
    },
    CompoundPoisson {
        rate: f64,
        jump_law: JumpLaw,
    },
    /// Drift plus Brownian part plus an independent compound Poisson. With
    /// `rate = 0` this is plain (drifted) Brownian motion.
    JumpDiffusion {
        drift: f64,
        sigma: f64,
        rate: f64,
        jump_law: JumpLaw,
    },
    /// Symmetric α-stable with `a(u) = scale·|u|^α`.
    SymmetricStable {
        alpha: f64,
        scale: f64,
    },
    Custom,
}

impl FamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::Poisson { .. } => "poisson",
            FamilyTag::CompoundPoisson { .. } => "compound_poisson",
            FamilyTag::JumpDiffusion { rate, .. } if *rate == 0.0 => "brownian",
            FamilyTag::JumpDiffusion { .. } => "jump_diffusion",
            FamilyTag::SymmetricStable { .. } => "symmetric_stable",
            FamilyTag::Custom => "custom",
        }
    }
}

/// `(drift, σ, η)` together with the family it was built from.
#[derive(Debug, Clone)]
pub struct LevyTriplet {
    drift: f64,
    diffusion: f64,
    measure: LevyMeasure,
    family: FamilyTag,
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTriplet(format!("rate {rate} must be finite and >= 0")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTriplet(format!("sigma {sigma} must be finite and >= 0")))
    }
}

/// `∫_0^∞ (1 - cos y) y^{-1-α} dy`.
fn stable_cosine_integral(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        std::f64::consts::FRAC_PI_2
    } else {
        statrs::function::gamma::gamma(1.0 - alpha) * (std::f64::consts::FRAC_PI_2 * alpha).cos()
            / alpha
    }
}

impl LevyTriplet {
    /// Standard Poisson process of the given intensity (η = rate·δ₁).
    pub fn poisson(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        let measure = LevyMeasure::from_atoms(JumpLaw::unit().atoms(rate))?;
        let drift = measure.small_jump_mean();
        Ok(LevyTriplet {
            drift,
            diffusion: 0.0,
            measure,
            family: FamilyTag::Poisson { rate },
        })
    }

    /// Uncompensated compound Poisson process; the triplet drift absorbs the
    /// small-jump compensator so that the process has no linear trend.
    pub fn compound_poisson(rate: f64, jump_law: JumpLaw) -> Result<Self> {
        check_rate(rate)?;
        let measure = LevyMeasure::from_atoms(jump_law.atoms(rate))?;
        let drift = measure.small_jump_mean();
        Ok(LevyTriplet {
            drift,
            diffusion: 0.0,
            measure,
            family: FamilyTag::CompoundPoisson { rate, jump_law },
        })
    }

    /// `X_t = drift·t + σW_t + compound Poisson(rate, jump_law)`.
    pub fn jump_diffusion(drift: f64, sigma: f64, rate: f64, jump_law: JumpLaw) -> Result<Self> {
        check_rate(rate)?;
        check_sigma(sigma)?;
        if !drift.is_finite() {
            return Err(Error::InvalidTriplet("drift must be finite".into()));
        }
        let measure = LevyMeasure::from_atoms(jump_law.atoms(rate))?;
        let triplet_drift = drift + measure.small_jump_mean();
        Ok(LevyTriplet {
            drift: triplet_drift,
            diffusion: sigma,
            measure,
            family: FamilyTag::JumpDiffusion {
                drift,
                sigma,
                rate,
                jump_law,
            },
        })
    }

    pub fn brownian(sigma: f64, drift: f64) -> Result<Self> {
        Self::jump_diffusion(drift, sigma, 0.0, JumpLaw::unit())
    }

    /// Symmetric α-stable, α ∈ (0, 2], with `a(u) = scale·|u|^α`. For α = 2 this is
    /// Brownian motion with σ² = 2·scale.
    pub fn symmetric_stable(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidTriplet(format!("alpha {alpha} must lie in (0, 2]")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidTriplet(format!("scale {scale} must be positive")));
        }
        let family = FamilyTag::SymmetricStable { alpha, scale };
        if alpha == 2.0 {
            return Ok(LevyTriplet {
                drift: 0.0,
                diffusion: (2.0 * scale).sqrt(),
                measure: LevyMeasure::default(),
                family,
            });
        }
        Ok(LevyTriplet {
            drift: 0.0,
            diffusion: 0.0,
            measure: LevyMeasure::with_density(Vec::new(), Self::stable_density(alpha, scale)?)?,
            family,
        })
    }

    /// The Lévy density `C·|x|^{-1-α}` of a symmetric stable law with exponent
    /// `scale·|u|^α`.
    pub fn stable_density(alpha: f64, scale: f64) -> Result<LevyDensity> {
        let constant = scale / (2.0 * stable_cosine_integral(alpha));
        Ok(LevyDensity::new(
            move |x: f64| constant * x.abs().powf(-1.0 - alpha),
            1.0 + alpha,
            1.0 + alpha,
        )?
        .symmetric())
    }

    /// A triplet given directly by its components. Exponents of custom
    /// densities are evaluated by adaptive quadrature.
    pub fn custom(drift: f64, sigma: f64, measure: LevyMeasure) -> Result<Self> {
        check_sigma(sigma)?;
        if !drift.is_finite() {
            return Err(Error::InvalidTriplet("drift must be finite".into()));
        }
        measure.validate()?;
        Ok(LevyTriplet {
            drift,
            diffusion: sigma,
            measure,
            family: FamilyTag::Custom,
        })
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    pub fn family(&self) -> &FamilyTag {
        &self.family
    }

    /// Linear trend of the sampled process: the triplet drift minus the
    /// small-jump compensator of the atoms.
    pub fn net_drift(&self) -> f64 {
        self.drift - self.measure.small_jump_mean()
    }

    /// Whether the exponent is evaluated by quadrature.
    pub fn uses_quadrature(&self) -> bool {
        matches!(self.family, FamilyTag::Custom) && self.measure.density.is_some()
    }

    pub fn default_tolerance(&self) -> f64 {
        if self.uses_quadrature() {
            QUADRATURE_TOL
        } else {
            CLOSED_FORM_TOL
        }
    }
}
