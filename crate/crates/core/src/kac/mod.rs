//! The approximation processes
//!
//! ```text
//! x(t) = c(θ)·ε·∫_0^{2t/ε²} exp(iθ X_s) ds
//! ```
//!
//! evaluated exactly over a piecewise-constant driver.

mod config;

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{admissible_vector, classify_theta, levy_exponent, ThetaClass};
use crate::sampler::{sample_path_with_step, Exactness, PathSample, SamplerSeed};

pub use config::{load_config, ConfigDoc, ExperimentConfig, LoadedConfig, DEFAULT_N_OUT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub epsilon: f64,
    pub theta: f64,
    pub c_theta: f64,
    pub classification: ThetaClass,
    pub driver_exactness: Exactness,
}

/// x_ε^θ sampled on an output time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexPath {
    pub times: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub meta: PathMeta,
}

impl ComplexPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of grid time `t`, matched to a relative 1e-9.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let scale = self.times.last().copied().unwrap_or(1.0).abs().max(1.0);
        let k = self.times.partition_point(|&s| s < t - 1e-9 * scale);
        (k < self.times.len() && (self.times[k] - t).abs() <= 1e-9 * scale).then_some(k)
    }

    /// Writes `t,re,im` rows, or `component,t,re,im` when `component` is given.
    pub fn write_csv<W: Write>(&self, mut w: W, component: Option<usize>, header: bool) -> std::io::Result<()> {
        match (component, header) {
            (Some(_), true) => writeln!(w, "component,t,re,im")?,
            (None, true) => writeln!(w, "t,re,im")?,
            _ => {}
        }
        for k in 0..self.times.len() {
            match component {
                Some(j) => writeln!(w, "{j},{},{},{}", self.times[k], self.re[k], self.im[k])?,
                None => writeln!(w, "{},{},{}", self.times[k], self.re[k], self.im[k])?,
            }
        }
        Ok(())
    }
}

/// Writes many replicas as one table: `replica,t,re,im`, or
/// `replica,component,t,re,im` when there is more than one component.
/// `replicas` is indexed `[replica][component]`.
pub fn write_paths_csv<W: Write>(mut w: W, first_replica: u64, replicas: &[Vec<ComplexPath>]) -> std::io::Result<()> {
    let multi = replicas.first().is_some_and(|r| r.len() > 1);
    if multi {
        writeln!(w, "replica,component,t,re,im")?;
    } else {
        writeln!(w, "replica,t,re,im")?;
    }
    for (r, components) in replicas.iter().enumerate() {
        let r = first_replica + r as u64;
        for (j, p) in components.iter().enumerate() {
            for k in 0..p.times.len() {
                if multi {
                    writeln!(w, "{r},{j},{},{},{}", p.times[k], p.re[k], p.im[k])?;
                } else {
                    writeln!(w, "{r},{},{},{}", p.times[k], p.re[k], p.im[k])?;
                }
            }
        }
    }
    Ok(())
}

/// `exp(iφ)` with `φ = θ·v`. Phases that are exact multiples of π/2 (up to a
/// few rounding errors in forming θ·v) return exact unit values, so lattice
/// drivers such as Poisson at θ = π produce an identically zero imaginary part.
pub(crate) fn unit_phase(theta: f64, level: f64) -> (f64, f64) {
    let phase = theta * level;
    let quarter = phase / FRAC_PI_2;
    let nearest = quarter.round();
    if (quarter - nearest).abs() <= 8.0 * f64::EPSILON * quarter.abs().max(1.0) {
        return match nearest.rem_euclid(4.0) as u8 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let (s, c) = phase.sin_cos();
    (c, s)
}

fn integrate_path(
    path: &PathSample,
    theta: f64,
    c_theta: f64,
    epsilon: f64,
    out_times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} must be positive")));
    }
    if out_times.windows(2).any(|w| w[1] < w[0]) || out_times.iter().any(|t| *t < 0.0) {
        return Err(Error::InvalidInput("output times must be non-negative and ascending".into()));
    }
    let time_scale = 2.0 / (epsilon * epsilon);
    if let Some(&last) = out_times.last() {
        let required = time_scale * last;
        if required > path.horizon * (1.0 + 1e-12) {
            return Err(Error::HorizonTooShort {
                horizon: path.horizon,
                required,
            });
        }
    }
    let scale = c_theta * epsilon;
    let bp = &path.breakpoints;
    let phases: Vec<(f64, f64)> = path.values.iter().map(|&v| unit_phase(theta, v)).collect();
    let mut re = Vec::with_capacity(out_times.len());
    let mut im = Vec::with_capacity(out_times.len());
    // acc holds ∫_0^{bp[k]} e^{iθX}; one forward pass serves every output time.
    let mut k = 0usize;
    let (mut acc_re, mut acc_im) = (0.0f64, 0.0f64);
    for &t in out_times {
        let upper = (time_scale * t).min(path.horizon);
        while k + 1 < bp.len() && bp[k + 1] <= upper {
            let len = bp[k + 1] - bp[k];
            acc_re += len * phases[k].0;
            acc_im += len * phases[k].1;
            k += 1;
        }
        let partial = upper - bp[k];
        re.push(scale * (acc_re + partial * phases[k].0));
        im.push(scale * (acc_im + partial * phases[k].1));
    }
    Ok((re, im))
}

/// Integrates an exact jump skeleton. No quadrature error: each segment
/// contributes its overlap with `[0, 2t/ε²]` times `e^{iθv}`.
pub fn integrate_exact(
    path: &PathSample,
    theta: f64,
    c_theta: f64,
    epsilon: f64,
    out_times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if path.exactness != Exactness::ExactJump {
        return Err(Error::InvalidInput("integrate_exact needs an ExactJump path".into()));
    }
    integrate_path(path, theta, c_theta, epsilon, out_times)
}

/// Same sum over the cells of a grid path (left-point values).
pub fn integrate_grid(
    path: &PathSample,
    theta: f64,
    c_theta: f64,
    epsilon: f64,
    out_times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !matches!(path.exactness, Exactness::GridApprox { .. }) {
        return Err(Error::InvalidInput("integrate_grid needs a GridApprox path".into()));
    }
    integrate_path(path, theta, c_theta, epsilon, out_times)
}

/// Integrates whichever kind of path it is given.
pub fn integrate(
    path: &PathSample,
    theta: f64,
    c_theta: f64,
    epsilon: f64,
    out_times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    integrate_path(path, theta, c_theta, epsilon, out_times)
}

/// c(θ) and the class for one angle, refusing the cases where the
/// approximation is undefined or (without override) not covered by the limit
/// theorem.
pub(crate) fn resolve_theta(config: &ExperimentConfig, theta: f64) -> Result<(f64, ThetaClass)> {
    let tol = config.tolerance();
    let class = classify_theta(theta, &config.triplet, tol)?;
    match &class {
        ThetaClass::NullDegenerate => {
            return Err(Error::degenerate(
                theta,
                "NullDegenerate: ψ(θ) = 0 so c(θ) is 0/0 and the approximation is undefined",
            ))
        }
        ThetaClass::Inadmissible(reason) if !config.allow_degenerate => {
            return Err(Error::degenerate(theta, format!("Inadmissible: {reason}")))
        }
        _ => {}
    }
    let e = levy_exponent(theta, &config.triplet)?;
    if e.a_part <= tol {
        return Err(Error::degenerate(theta, format!("a(θ) = {:e}, c(θ) is undefined", e.a_part)));
    }
    Ok((e.normalization(), class))
}

fn zero_path(config: &ExperimentConfig, theta: f64, c_theta: f64, class: ThetaClass) -> ComplexPath {
    let times = config.output_times();
    let n = times.len();
    ComplexPath {
        times,
        re: vec![0.0; n],
        im: vec![0.0; n],
        meta: PathMeta {
            epsilon: config.epsilon,
            theta,
            c_theta,
            classification: class,
            driver_exactness: Exactness::ExactJump,
        },
    }
}

/// The driver path a replica uses, on [0, 2T/ε²].
pub fn sample_driver(config: &ExperimentConfig, replica_index: u64) -> Result<PathSample> {
    let seed = SamplerSeed::new(config.master_seed, replica_index);
    sample_path_with_step(&config.triplet, config.driver_horizon(), seed, config.effective_grid_step())
}

fn component(
    config: &ExperimentConfig,
    driver: &PathSample,
    theta: f64,
    c_theta: f64,
    class: ThetaClass,
) -> Result<ComplexPath> {
    let times = config.output_times();
    let (re, im) = integrate(driver, theta, c_theta, config.epsilon, &times)?;
    Ok(ComplexPath {
        times,
        re,
        im,
        meta: PathMeta {
            epsilon: config.epsilon,
            theta,
            c_theta,
            classification: class,
            driver_exactness: driver.exactness,
        },
    })
}

/// One replica of the one-dimensional approximation.
pub fn build_approximation(config: &ExperimentConfig, replica_index: u64) -> Result<ComplexPath> {
    if config.thetas.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "build_approximation needs exactly one theta, got {}",
            config.thetas.len()
        )));
    }
    let theta = config.thetas[0];
    let (c_theta, class) = resolve_theta(config, theta)?;
    if config.t_max == 0.0 {
        return Ok(zero_path(config, theta, c_theta, class));
    }
    let driver = sample_driver(config, replica_index)?;
    component(config, &driver, theta, c_theta, class)
}

/// One replica of the m-dimensional approximation: a single shared driver
/// integrated against every θ_j.
pub fn build_approximation_md(config: &ExperimentConfig, replica_index: u64) -> Result<Vec<ComplexPath>> {
    if config.thetas.len() >= 2 && !config.allow_degenerate {
        let report = admissible_vector(&config.thetas, &config.triplet, config.tolerance())?;
        if !report.passed {
            return Err(Error::AdmissibilityFailure(report.failures()));
        }
    }
    let resolved = config
        .thetas
        .iter()
        .map(|&t| resolve_theta(config, t).map(|(c, class)| (t, c, class)))
        .collect::<Result<Vec<_>>>()?;
    if config.t_max == 0.0 {
        return Ok(resolved
            .into_iter()
            .map(|(t, c, class)| zero_path(config, t, c, class))
            .collect());
    }
    let driver = sample_driver(config, replica_index)?;
    resolved
        .into_iter()
        .map(|(t, c, class)| component(config, &driver, t, c, class))
        .collect()
}
