//! Hyperfine repumping into the Λ ground level.
//!
//! Without repumping the target level holds its thermal share `s` of the
//! isotope. A repumper of intensity `I` transfers the other level at a rate
//! `γ_hf·I/I_sat` against ground hyperfine relaxation `γ_hf`, giving
//!
//! ```text
//! N_eff = N·(1 − (1 − s)/(1 + I/I_sat))
//! ```

use crate::atomkit::{self, AtomSpecies};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RepumpConfig {
    /// mW/cm²
    pub intensity: f64,
    pub species: AtomSpecies,
    /// Ground level the repumper fills.
    pub target_f: u32,
}

impl RepumpConfig {
    /// Repumper on Rb87 filling F = 2.
    pub fn rb87(intensity: f64) -> Self {
        RepumpConfig {
            intensity,
            species: AtomSpecies::rb87(),
            target_f: 2,
        }
    }

    /// Repumper Rabi frequency, rad/s.
    pub fn rabi_frequency(&self) -> Result<f64> {
        atomkit::rabi_from_intensity(self.intensity, &self.species)
    }
}

/// Density in the target level, given the isotope's total density (cm⁻³).
pub fn repumper_effective_density(isotope_density: f64, r: &RepumpConfig) -> Result<f64> {
    if !(isotope_density >= 0.0) {
        return Err(Error::Domain(format!(
            "density must be >= 0 (got {isotope_density})"
        )));
    }
    if !(r.intensity >= 0.0) {
        return Err(Error::Domain(format!(
            "repump intensity must be >= 0 (got {})",
            r.intensity
        )));
    }
    let share = r.species.thermal_share(r.target_f)?;
    let saturation = atomkit::constants().model.repump_saturation;
    Ok(isotope_density * (1.0 - (1.0 - share) / (1.0 + r.intensity / saturation)))
}
