//! JSON document form of a triplet:
//! `{family, params, drift, sigma, atoms: [{x, mass}]}`.
//!
//! For tagged families `params` is authoritative and `drift`/`sigma`/`atoms`
//! are an echo that, when present on input, must agree with the derived
//! triplet. For `custom` the three explicit fields define the triplet.
//! The field names are pinned by `schemas/triplet.schema.json`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Atom, FamilyTag, JumpLaw, LevyMeasure, LevyTriplet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub x: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDoc {
    pub x: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletDoc {
    pub family: String,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomDoc>>,
}

fn empty_object() -> Value {
    json!({})
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RateParams {
    rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompoundParams {
    rate: f64,
    jumps: Vec<JumpDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpDiffusionParams {
    #[serde(default)]
    drift: f64,
    sigma: f64,
    rate: f64,
    jumps: Vec<JumpDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BrownianParams {
    sigma: f64,
    #[serde(default)]
    drift: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StableParams {
    alpha: f64,
    scale: f64,
}

fn params<T: for<'de> Deserialize<'de>>(v: &Value, family: &str) -> Result<T> {
    serde_json::from_value(v.clone())
        .map_err(|e| Error::validation("params", format!("{family}: {e}")))
}

fn jump_law(jumps: &[JumpDoc]) -> Result<JumpLaw> {
    JumpLaw::new(jumps.iter().map(|j| (j.x, j.prob)).collect())
        .map_err(|e| Error::validation("params.jumps", e.to_string()))
}

fn law_doc(law: &JumpLaw) -> Vec<Value> {
    law.outcomes()
        .iter()
        .map(|&(x, prob)| json!({"x": x, "prob": prob}))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl LevyTriplet {
    pub fn from_doc(doc: &TripletDoc) -> Result<Self> {
        let invalid = |e: Error| match e {
            Error::InvalidTriplet(m) => Error::validation("triplet", m),
            other => other,
        };
        let triplet = match doc.family.as_str() {
            "poisson" => {
                let p: RateParams = params(&doc.params, "poisson")?;
                LevyTriplet::poisson(p.rate).map_err(invalid)?
            }
            "compound_poisson" => {
                let p: CompoundParams = params(&doc.params, "compound_poisson")?;
                LevyTriplet::compound_poisson(p.rate, jump_law(&p.jumps)?).map_err(invalid)?
            }
            "jump_diffusion" => {
                let p: JumpDiffusionParams = params(&doc.params, "jump_diffusion")?;
                LevyTriplet::jump_diffusion(p.drift, p.sigma, p.rate, jump_law(&p.jumps)?)
                    .map_err(invalid)?
            }
            "brownian" => {
                let p: BrownianParams = params(&doc.params, "brownian")?;
                LevyTriplet::brownian(p.sigma, p.drift).map_err(invalid)?
            }
            "symmetric_stable" => {
                let p: StableParams = params(&doc.params, "symmetric_stable")?;
                LevyTriplet::symmetric_stable(p.alpha, p.scale).map_err(invalid)?
            }
            "custom" => {
                let atoms = doc
                    .atoms
                    .iter()
                    .flatten()
                    .map(|a| Atom {
                        location: a.x,
                        mass: a.mass,
                    })
                    .collect();
                let measure = LevyMeasure::from_atoms(atoms).map_err(invalid)?;
                return LevyTriplet::custom(doc.drift.unwrap_or(0.0), doc.sigma.unwrap_or(0.0), measure)
                    .map_err(invalid);
            }
            other => {
                return Err(Error::validation(
                    "family",
                    format!("unknown family `{other}`"),
                ))
            }
        };
        // Echoed fields must agree with what the family implies.
        if let Some(d) = doc.drift {
            if !close(d, triplet.drift) {
                return Err(Error::validation(
                    "drift",
                    format!("{d} disagrees with the {} family's drift {}", doc.family, triplet.drift),
                ));
            }
        }
        if let Some(s) = doc.sigma {
            if !close(s, triplet.diffusion) {
                return Err(Error::validation(
                    "sigma",
                    format!("{s} disagrees with the {} family's sigma {}", doc.family, triplet.diffusion),
                ));
            }
        }
        if let Some(atoms) = &doc.atoms {
            let derived = &triplet.measure.atoms;
            let same = atoms.len() == derived.len()
                && atoms
                    .iter()
                    .zip(derived)
                    .all(|(a, b)| close(a.x, b.location) && close(a.mass, b.mass));
            if !same {
                return Err(Error::validation(
                    "atoms",
                    format!("atoms disagree with the {} family's measure", doc.family),
                ));
            }
        }
        Ok(triplet)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TripletDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    /// Document form. Custom triplets with a density part cannot be written.
    pub fn to_doc(&self) -> Result<TripletDoc> {
        let params = match &self.family {
            FamilyTag::Poisson { rate } => json!({ "rate": rate }),
            FamilyTag::CompoundPoisson { rate, jump_law } => {
                json!({ "rate": rate, "jumps": law_doc(jump_law) })
            }
            FamilyTag::JumpDiffusion {
                drift,
                sigma,
                rate,
                jump_law,
            } => {
                if *rate == 0.0 {
                    json!({ "sigma": sigma, "drift": drift })
                } else {
                    json!({ "drift": drift, "sigma": sigma, "rate": rate, "jumps": law_doc(jump_law) })
                }
            }
            FamilyTag::SymmetricStable { alpha, scale } => json!({ "alpha": alpha, "scale": scale }),
            FamilyTag::Custom => {
                if self.measure.density.is_some() {
                    return Err(Error::InvalidInput(
                        "custom triplets with a density cannot be serialized".into(),
                    ));
                }
                json!({})
            }
        };
        Ok(TripletDoc {
            family: self.family.name().to_string(),
            params,
            drift: Some(self.drift),
            sigma: Some(self.diffusion),
            atoms: Some(
                self.measure
                    .atoms
                    .iter()
                    .map(|a| AtomDoc {
                        x: a.location,
                        mass: a.mass,
                    })
                    .collect(),
            ),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc()?).expect("triplet documents serialize"))
    }
}
