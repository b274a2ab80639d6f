use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{admissible_vector, classify_theta, levy_exponent, LevyTriplet, ThetaClass, TripletDoc};
use crate::sampler::DEFAULT_GRID_STEP;

pub const DEFAULT_N_OUT: usize = 256;

/// Looser tolerance used only to flag angles that sit close to a degenerate class.
const NEAR_DEGENERATE_TOL: f64 = 1e-4;

/// One experiment: a driver, angles, scale and replica budget.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub triplet: LevyTriplet,
    pub thetas: Vec<f64>,
    pub epsilon: f64,
    pub t_max: f64,
    pub n_out: usize,
    pub replicas: u64,
    pub master_seed: u64,
    pub grid_step: Option<f64>,
    /// Run Inadmissible angles anyway. NullDegenerate angles are always refused.
    pub allow_degenerate: bool,
    /// Cells of the uniform partition used by the quadratic-variation check.
    pub qv_cells: Option<usize>,
    pub tolerance: Option<f64>,
}

/// JSON form, pinned by `schemas/config.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub triplet: TripletDoc,
    pub thetas: Vec<f64>,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    #[serde(default = "default_n_out")]
    pub n_out: usize,
    pub replicas: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qv_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn default_n_out() -> usize {
    DEFAULT_N_OUT
}

/// A parsed config plus admissibility warnings.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// Defaults: n_out 256, 1000 replicas, seed 0.
    pub fn new(triplet: LevyTriplet, thetas: Vec<f64>, epsilon: f64, t_max: f64) -> Self {
        ExperimentConfig {
            triplet,
            thetas,
            epsilon,
            t_max,
            n_out: DEFAULT_N_OUT,
            replicas: 1000,
            master_seed: 0,
            grid_step: None,
            allow_degenerate: false,
            qv_cells: None,
            tolerance: None,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| self.triplet.default_tolerance())
    }

    /// Driver horizon 2T/ε².
    pub fn driver_horizon(&self) -> f64 {
        2.0 * self.t_max / (self.epsilon * self.epsilon)
    }

    pub fn effective_grid_step(&self) -> f64 {
        self.grid_step
            .unwrap_or_else(|| DEFAULT_GRID_STEP.min(self.epsilon * self.epsilon / 20.0))
    }

    /// Uniform grid t_k = kT/n_out, k = 0..=n_out.
    pub fn output_times(&self) -> Vec<f64> {
        let n = self.n_out as f64;
        (0..=self.n_out).map(|k| k as f64 * self.t_max / n).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::validation("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::validation("T", format!("must be non-negative, got {}", self.t_max)));
        }
        if self.n_out < 2 {
            return Err(Error::validation("n_out", format!("must be at least 2, got {}", self.n_out)));
        }
        if self.thetas.is_empty() {
            return Err(Error::validation("thetas", "at least one angle is required"));
        }
        if let Some(t) = self.thetas.iter().find(|t| !t.is_finite()) {
            return Err(Error::validation("thetas", format!("{t} is not finite")));
        }
        if let Some(step) = self.grid_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::validation("grid_step", format!("must be positive, got {step}")));
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0) {
                return Err(Error::validation("tolerance", format!("must be positive, got {tol}")));
            }
        }
        if self.qv_cells == Some(0) {
            return Err(Error::validation("qv_cells", "must be at least 1"));
        }
        Ok(())
    }

    /// Classification problems worth reporting before a run. Never fails on
    /// degenerate angles so that degenerate studies stay scriptable.
    pub fn admissibility_warnings(&self) -> Result<Vec<String>> {
        let tol = self.tolerance();
        let mut out = Vec::new();
        for &theta in &self.thetas {
            let class = classify_theta(theta, &self.triplet, tol)?;
            if class != ThetaClass::ComplexAdmissible {
                out.push(format!("θ = {theta} is {class}"));
                continue;
            }
            let loose = classify_theta(theta, &self.triplet, NEAR_DEGENERATE_TOL.max(tol))?;
            if loose != ThetaClass::ComplexAdmissible {
                let e = levy_exponent(theta, &self.triplet)?;
                let e2 = levy_exponent(2.0 * theta, &self.triplet)?;
                out.push(format!(
                    "θ = {theta} is within {NEAR_DEGENERATE_TOL:e} of {} (a(θ) = {:e}, a(2θ) = {:e}); results may be unstable",
                    loose.name(),
                    e.a_part,
                    e2.a_part
                ));
            }
        }
        if self.thetas.len() >= 2 {
            let report = admissible_vector(&self.thetas, &self.triplet, tol)?;
            out.extend(
                report
                    .conditions
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| format!("{} = a({}) = {:e} is not > tol", c.label, c.argument, c.a_value)),
            );
        }
        Ok(out)
    }

    pub fn from_doc(doc: &ConfigDoc) -> Result<Self> {
        let cfg = ExperimentConfig {
            triplet: LevyTriplet::from_doc(&doc.triplet)?,
            thetas: doc.thetas.clone(),
            epsilon: doc.epsilon,
            t_max: doc.t_max,
            n_out: doc.n_out,
            replicas: doc.replicas,
            master_seed: doc.master_seed,
            grid_step: doc.grid_step,
            allow_degenerate: doc.allow_degenerate,
            qv_cells: doc.qv_cells,
            tolerance: doc.tolerance,
        };
        cfg.validate()?;
        if cfg.t_max == 0.0 {
            return Err(Error::validation("T", "must be positive"));
        }
        if cfg.replicas == 0 {
            return Err(Error::validation("replicas", "must be positive"));
        }
        Ok(cfg)
    }

    pub fn to_doc(&self) -> Result<ConfigDoc> {
        Ok(ConfigDoc {
            triplet: self.triplet.to_doc()?,
            thetas: self.thetas.clone(),
            epsilon: self.epsilon,
            t_max: self.t_max,
            n_out: self.n_out,
            replicas: self.replicas,
            master_seed: self.master_seed,
            grid_step: self.grid_step,
            allow_degenerate: self.allow_degenerate,
            qv_cells: self.qv_cells,
            tolerance: self.tolerance,
        })
    }

    pub fn from_json(text: &str) -> Result<LoadedConfig> {
        let doc: ConfigDoc = serde_json::from_str(text)?;
        let config = Self::from_doc(&doc)?;
        let warnings = config.admissibility_warnings()?;
        Ok(LoadedConfig { config, warnings })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc()?).expect("config documents serialize"))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    ExperimentConfig::from_json(&text)
}
