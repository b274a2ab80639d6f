//! Scenario configs shipped with the crate.

use crate::error::{Error, Result};
use crate::kac::{ExperimentConfig, LoadedConfig};

pub const PRESETS: [(&str, &str); 6] = [
    ("poisson-pi-half", include_str!("../presets/poisson-pi-half.json")),
    ("poisson-pi", include_str!("../presets/poisson-pi.json")),
    ("brownian-theta1", include_str!("../presets/brownian-theta1.json")),
    ("compound-poisson-symmetric", include_str!("../presets/compound-poisson-symmetric.json")),
    ("stable-alpha1.5", include_str!("../presets/stable-alpha1.5.json")),
    ("md-poisson-2d", include_str!("../presets/md-poisson-2d.json")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Result<LoadedConfig> {
    let text = preset_text(name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        Error::InvalidInput(format!("unknown preset `{name}` (known: {})", known.join(", ")))
    })?;
    ExperimentConfig::from_json(text)
}
