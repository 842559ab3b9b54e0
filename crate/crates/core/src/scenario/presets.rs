//! Scenario presets shipped with the crate. The two 39-bus presets carry
//! parameter values that are illustrative defaults where the standard
//! test-system data sheet does not pin them (per-unit switching loads,
//! DEA placements, per-mode parameter sets); analyses on them rely on
//! structural and spectral properties, not on specific trajectories.

use crate::error::{Error, Result};
use crate::scenario::schema::Scenario;

pub const EXAMPLE1: &str = include_str!("../../presets/example1.json");
pub const IEEE39_AGGREGATE: &str = include_str!("../../presets/ieee39-aggregate.json");
pub const IEEE39_FULL: &str = include_str!("../../presets/ieee39-full.json");

pub const PRESET_NAMES: [&str; 3] = ["example1", "ieee39-aggregate", "ieee39-full"];

/// Raw JSON text of a named preset.
pub fn preset_text(name: &str) -> Result<&'static str> {
    match name {
        "example1" => Ok(EXAMPLE1),
        "ieee39-aggregate" => Ok(IEEE39_AGGREGATE),
        "ieee39-full" => Ok(IEEE39_FULL),
        other => Err(Error::Config {
            path: "/preset".into(),
            message: format!(
                "unknown preset '{other}'; available: {}",
                PRESET_NAMES.join(", ")
            ),
        }),
    }
}

/// Parsed scenario of a named preset.
pub fn preset_scenario(name: &str) -> Result<Scenario> {
    Scenario::from_json(preset_text(name)?)
}
