use super::ScenarioConfig;
use crate::error::{Error, Result};

/// Stable preset identifiers, one per reproduced figure.
pub const PRESET_NAMES: [&str; 6] = [
    "fig2a-dr",
    "fig2b-eit",
    "fig3-dual",
    "fig4-delay",
    "fig5-repump",
    "fig6-vg",
];

const SOURCES: [&str; 6] = [
    include_str!("../../presets/fig2a-dr.toml"),
    include_str!("../../presets/fig2b-eit.toml"),
    include_str!("../../presets/fig3-dual.toml"),
    include_str!("../../presets/fig4-delay.toml"),
    include_str!("../../presets/fig5-repump.toml"),
    include_str!("../../presets/fig6-vg.toml"),
];

/// The embedded configuration of preset `name`.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let i = PRESET_NAMES.iter().position(|&n| n == name).ok_or_else(|| {
        Error::Validation(vec![format!(
            "unknown preset '{name}'; expected one of {}",
            PRESET_NAMES.join(", ")
        )])
    })?;
    ScenarioConfig::from_toml(SOURCES[i])
}
