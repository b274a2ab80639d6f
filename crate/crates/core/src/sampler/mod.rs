//! Realizations of the Lévy driver as piecewise-constant skeletons.
//!
//! Finite-activity pure-jump drivers are sampled exactly. Anything with a
//! Brownian part, a linear trend or a stable part goes onto a uniform grid,
//! with the finite-activity jumps superposed at their exact times.

mod seed;

use std::io::Write;

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{FamilyTag, JumpLaw, LevyTriplet};

pub use seed::SamplerSeed;
use seed::{GRID_STREAM, JUMP_STREAM};

pub const DEFAULT_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exactness {
    ExactJump,
    GridApprox { step: f64 },
}

/// Piecewise-constant path: X equals `values[k]` on
/// `[breakpoints[k], breakpoints[k + 1])`, and the last level holds up to the
/// horizon. `terminal` is X at the horizon itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub terminal: f64,
    pub horizon: f64,
    pub exactness: Exactness,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// X_t for t in [0, horizon].
    pub fn value_at(&self, t: f64) -> f64 {
        if t >= self.horizon {
            return self.terminal;
        }
        let k = self.breakpoints.partition_point(|&b| b <= t);
        self.values[k.saturating_sub(1)]
    }

    /// Writes the skeleton as `t,X` rows, closing with the horizon.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,X")?;
        for (t, x) in self.breakpoints.iter().zip(&self.values) {
            writeln!(w, "{t},{x}")?;
        }
        writeln!(w, "{},{}", self.horizon, self.terminal)
    }

    fn check(&self) {
        debug_assert_eq!(self.breakpoints.len(), self.values.len());
        debug_assert_eq!(self.breakpoints.first(), Some(&0.0));
        debug_assert_eq!(self.values.first(), Some(&0.0));
        debug_assert!(self.breakpoints.windows(2).all(|w| w[0] < w[1]));
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("horizon {horizon} must be finite and positive")))
    }
}

/// Jump intensity and size law of the atomic part, if any.
fn jump_component(triplet: &LevyTriplet) -> Result<Option<(f64, JumpLaw)>> {
    let atoms = &triplet.measure().atoms;
    if atoms.is_empty() {
        return Ok(None);
    }
    let rate = triplet.measure().atom_mass();
    let law = JumpLaw::new(atoms.iter().map(|a| (a.location, a.mass / rate)).collect())?;
    Ok(Some((rate, law)))
}

/// Jump times in (0, horizon) with their sizes, in time order.
fn draw_jumps<R: Rng>(rate: f64, law: &JumpLaw, horizon: f64, rng: &mut R) -> Vec<(f64, f64)> {
    let mut jumps = Vec::new();
    if rate <= 0.0 {
        return jumps;
    }
    let interarrival = Exp::new(rate).expect("positive rate");
    let outcomes = law.outcomes();
    let picker = if outcomes.len() > 1 {
        Some(WeightedIndex::new(outcomes.iter().map(|o| o.1)).expect("validated law"))
    } else {
        None
    };
    let mut t = 0.0;
    loop {
        t += interarrival.sample(rng);
        if t >= horizon {
            break;
        }
        let size = match &picker {
            Some(p) => outcomes[p.sample(rng)].0,
            None => outcomes[0].0,
        };
        jumps.push((t, size));
    }
    jumps
}

/// Exact compound Poisson path: exponential(rate) interarrivals and sizes
/// drawn from `jump_law`. A zero rate gives the constant zero path.
pub fn sample_exact_jump(rate: f64, jump_law: &JumpLaw, horizon: f64, seed: SamplerSeed) -> Result<PathSample> {
    check_horizon(horizon)?;
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::InvalidInput(format!("rate {rate} must be finite and >= 0")));
    }
    let mut rng = seed.rng(JUMP_STREAM);
    let jumps = draw_jumps(rate, jump_law, horizon, &mut rng);
    let mut breakpoints = Vec::with_capacity(jumps.len() + 1);
    let mut values = Vec::with_capacity(jumps.len() + 1);
    breakpoints.push(0.0);
    values.push(0.0);
    let mut level = 0.0;
    for (t, size) in jumps {
        level += size;
        if t > *breakpoints.last().unwrap() {
            breakpoints.push(t);
            values.push(level);
        } else {
            // Coincident arrival (zero interarrival draw): fold into the last level.
            *values.last_mut().unwrap() = level;
        }
    }
    let path = PathSample {
        breakpoints,
        values,
        terminal: level,
        horizon,
        exactness: Exactness::ExactJump,
    };
    path.check();
    Ok(path)
}

/// Standard symmetric α-stable variate with `E[e^{iuS}] = e^{-|u|^α}`, from
/// one uniform angle and one unit exponential.
fn standard_symmetric_stable<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let v = std::f64::consts::PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    let cos_v = v.cos();
    (alpha * v).sin() / cos_v.powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Grid path with cell width `step`. The continuous part is held at its
/// left-endpoint value within each cell; atomic jumps are inserted at their
/// exact times.
pub fn sample_grid(triplet: &LevyTriplet, horizon: f64, step: f64, seed: SamplerSeed) -> Result<PathSample> {
    check_horizon(horizon)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(format!("step {step} must be finite and positive")));
    }
    if step > horizon {
        return Err(Error::StepTooCoarse { step, horizon });
    }
    if triplet.measure().density.is_some() && !matches!(triplet.family(), FamilyTag::SymmetricStable { .. }) {
        return Err(Error::UnsampleableFamily(
            "custom density measures have no finite-activity decomposition".into(),
        ));
    }
    let (increments, jumps) = grid_parts(triplet, horizon, step, seed)?;
    let path = merge_grid(&increments, &jumps, horizon, step);
    path.check();
    Ok(path)
}

/// Continuous-part increments per cell and the atomic jumps as (time, size).
type GridParts = (Vec<f64>, Vec<(f64, f64)>);

pub(crate) fn grid_parts(
    triplet: &LevyTriplet,
    horizon: f64,
    step: f64,
    seed: SamplerSeed,
) -> Result<GridParts> {
    let cells = (horizon / step).ceil() as usize;
    let mu = triplet.net_drift();
    let sigma = triplet.diffusion();
    let stable = match *triplet.family() {
        FamilyTag::SymmetricStable { alpha, scale } if alpha < 2.0 => Some((alpha, scale)),
        _ => None,
    };
    let mut rng = seed.rng(GRID_STREAM);
    let mut increments = Vec::with_capacity(cells);
    for k in 0..cells {
        let start = k as f64 * step;
        let h = if k + 1 == cells { horizon - start } else { step };
        let noise = match stable {
            Some((alpha, scale)) => (scale * h).powf(1.0 / alpha) * standard_symmetric_stable(alpha, &mut rng),
            None if sigma > 0.0 => {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * h.sqrt() * z
            }
            None => 0.0,
        };
        increments.push(mu * h + noise);
    }
    let jumps = match jump_component(triplet)? {
        Some((rate, law)) => draw_jumps(rate, &law, horizon, &mut seed.rng(JUMP_STREAM)),
        None => Vec::new(),
    };
    Ok((increments, jumps))
}

fn merge_grid(increments: &[f64], jumps: &[(f64, f64)], horizon: f64, step: f64) -> PathSample {
    let cells = increments.len();
    let mut breakpoints = Vec::with_capacity(cells + jumps.len());
    let mut values = Vec::with_capacity(cells + jumps.len());
    let mut grid_level = 0.0;
    let mut jump_level = 0.0;
    let mut j = 0;
    for (k, inc) in increments.iter().enumerate() {
        let start = k as f64 * step;
        let end = if k + 1 == cells { horizon } else { (k + 1) as f64 * step };
        // Jumps landing exactly on the grid time belong to this breakpoint.
        while j < jumps.len() && jumps[j].0 <= start {
            jump_level += jumps[j].1;
            j += 1;
        }
        breakpoints.push(start);
        values.push(grid_level + jump_level);
        while j < jumps.len() && jumps[j].0 < end {
            jump_level += jumps[j].1;
            breakpoints.push(jumps[j].0);
            values.push(grid_level + jump_level);
            j += 1;
        }
        grid_level += inc;
    }
    while j < jumps.len() {
        jump_level += jumps[j].1;
        j += 1;
    }
    PathSample {
        breakpoints,
        values,
        terminal: grid_level + jump_level,
        horizon,
        exactness: Exactness::GridApprox { step },
    }
}

/// Samples the driver on `[0, horizon]` with the default grid step.
pub fn sample_path(triplet: &LevyTriplet, horizon: f64, seed: SamplerSeed) -> Result<PathSample> {
    sample_path_with_step(triplet, horizon, seed, DEFAULT_GRID_STEP)
}

/// Dispatches to the exact jump sampler when the driver is a pure
/// finite-activity jump process, otherwise to the grid sampler.
pub fn sample_path_with_step(
    triplet: &LevyTriplet,
    horizon: f64,
    seed: SamplerSeed,
    step: f64,
) -> Result<PathSample> {
    check_horizon(horizon)?;
    let measure = triplet.measure();
    if measure.density.is_some() && !matches!(triplet.family(), FamilyTag::SymmetricStable { .. }) {
        return Err(Error::UnsampleableFamily(
            "custom density measures have no finite-activity decomposition".into(),
        ));
    }
    let pure_jump = measure.density.is_none() && triplet.diffusion() == 0.0 && triplet.net_drift() == 0.0;
    if pure_jump {
        return match jump_component(triplet)? {
            Some((rate, law)) => sample_exact_jump(rate, &law, horizon, seed),
            None => sample_exact_jump(0.0, &JumpLaw::unit(), horizon, seed),
        };
    }
    sample_grid(triplet, horizon, step.min(horizon), seed)
}
