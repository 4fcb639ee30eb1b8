//! Physical constants, Rb isotope data and the conversions between
//! experimental knobs (temperature, intensity, field) and model parameters
//! (number density, Rabi frequency, Zeeman splitting).
//!
//! All numbers come from `data/constants.toml`, parsed once on first use.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CONSTANTS_TOML: &str = include_str!("../data/constants.toml");

static CONSTANTS: Lazy<Constants> = Lazy::new(|| {
    toml::from_str(CONSTANTS_TOML).expect("bundled constants table must parse")
});

/// The parsed constants table.
pub fn constants() -> &'static Constants {
    &CONSTANTS
}

/// Raw text of the bundled constants table.
pub fn constants_source() -> &'static str {
    CONSTANTS_TOML
}

#[derive(Debug, Clone, Deserialize)]
pub struct Constants {
    pub physical: PhysicalConstants,
    pub vapor: VaporConstants,
    pub d1: D1Constants,
    pub species: BTreeMap<String, SpeciesEntry>,
    pub model: ModelConstants,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PhysicalConstants {
    #[serde(rename = "boltzmann_J_per_K")]
    pub boltzmann: f64,
    #[serde(rename = "planck_J_s")]
    pub planck: f64,
    #[serde(rename = "hbar_J_s")]
    pub hbar: f64,
    #[serde(rename = "speed_of_light_m_per_s")]
    pub speed_of_light: f64,
    #[serde(rename = "vacuum_permittivity_F_per_m")]
    pub vacuum_permittivity: f64,
    #[serde(rename = "atomic_mass_unit_kg")]
    pub atomic_mass_unit: f64,
    #[serde(rename = "bohr_magneton_Hz_per_G")]
    pub bohr_magneton_hz_per_gauss: f64,
    #[serde(rename = "standard_atmosphere_Pa")]
    pub standard_atmosphere: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VaporConstants {
    pub antoine_a: f64,
    #[serde(rename = "antoine_b_K")]
    pub antoine_b: f64,
    #[serde(rename = "anchor_temperature_C")]
    pub anchor_temperature: f64,
    #[serde(rename = "anchor_density_cm3")]
    pub anchor_density: f64,
    #[serde(rename = "min_temperature_C")]
    pub min_temperature: f64,
    #[serde(rename = "max_temperature_C")]
    pub max_temperature: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct D1Constants {
    #[serde(rename = "wavelength_m")]
    pub wavelength: f64,
    #[serde(rename = "effective_dipole_C_m")]
    pub effective_dipole: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SpeciesEntry {
    #[serde(rename = "atomic_mass_u")]
    pub atomic_mass: f64,
    pub abundance: f64,
    #[serde(rename = "excited_decay_rate_rad_s")]
    pub excited_decay_rate: f64,
    pub ground_hyperfine: Vec<HyperfineEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct HyperfineEntry {
    #[serde(rename = "F")]
    pub f: u32,
    #[serde(rename = "lande_gF")]
    pub lande_gf: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelConstants {
    pub control_line_strength: f64,
    pub probe_line_strength: f64,
    pub trapping_events_per_photon: f64,
    pub trapping_depth_scale: f64,
    #[serde(rename = "offresonant_level_detuning_rad_s")]
    pub offresonant_level_detuning: f64,
    #[serde(rename = "repump_saturation_mW_cm2")]
    pub repump_saturation: f64,
    pub dr_contrast: f64,
}

/// Rb isotope label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Isotope {
    Rb85,
    Rb87,
}

impl Isotope {
    pub fn label(self) -> &'static str {
        match self {
            Isotope::Rb85 => "Rb85",
            Isotope::Rb87 => "Rb87",
        }
    }
}

impl std::str::FromStr for Isotope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Rb85" | "rb85" | "85" => Ok(Isotope::Rb85),
            "Rb87" | "rb87" | "87" => Ok(Isotope::Rb87),
            other => Err(Error::Domain(format!(
                "unknown isotope '{other}', expected Rb85 or Rb87"
            ))),
        }
    }
}

/// One ground hyperfine level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperfineLevel {
    pub f: u32,
    pub degeneracy: u32,
    pub lande_gf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    pub isotope: Isotope,
    /// kg
    pub atomic_mass: f64,
    pub abundance: f64,
    /// m
    pub d1_wavelength: f64,
    /// Excited-state decay rate Γ, rad/s.
    pub excited_decay_rate: f64,
    pub ground_hyperfine: Vec<HyperfineLevel>,
}

impl AtomSpecies {
    pub fn new(isotope: Isotope) -> Self {
        let c = constants();
        let entry = &c.species[isotope.label()];
        AtomSpecies {
            isotope,
            atomic_mass: entry.atomic_mass * c.physical.atomic_mass_unit,
            abundance: entry.abundance,
            d1_wavelength: c.d1.wavelength,
            excited_decay_rate: entry.excited_decay_rate,
            ground_hyperfine: entry
                .ground_hyperfine
                .iter()
                .map(|h| HyperfineLevel {
                    f: h.f,
                    degeneracy: 2 * h.f + 1,
                    lande_gf: h.lande_gf,
                })
                .collect(),
        }
    }

    pub fn rb85() -> Self {
        Self::new(Isotope::Rb85)
    }

    pub fn rb87() -> Self {
        Self::new(Isotope::Rb87)
    }

    pub fn level(&self, f: u32) -> Result<&HyperfineLevel> {
        self.ground_hyperfine.iter().find(|l| l.f == f).ok_or_else(|| {
            Error::Domain(format!(
                "{} has no ground hyperfine level F={f}",
                self.isotope.label()
            ))
        })
    }

    /// Fraction of this isotope's atoms in level `f` at thermal equilibrium
    /// (ground hyperfine splitting ≪ k_B T, so proportional to 2F+1).
    pub fn thermal_share(&self, f: u32) -> Result<f64> {
        let level = self.level(f)?;
        let total: u32 = self.ground_hyperfine.iter().map(|l| l.degeneracy).sum();
        Ok(level.degeneracy as f64 / total as f64)
    }

    /// Carrier wavenumber k = 2π/λ, 1/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.d1_wavelength
    }

    /// Carrier angular frequency, rad/s.
    pub fn carrier_frequency(&self) -> f64 {
        self.wavenumber() * constants().physical.speed_of_light
    }
}

/// Beam geometry and intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    /// m
    pub diameter: f64,
    /// mW/cm²
    pub total_intensity: f64,
    pub probe_to_control_ratio: f64,
}

impl BeamConfig {
    /// Largest probe/control intensity ratio accepted by default (weak probe).
    pub const MAX_PROBE_RATIO: f64 = 0.1;

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.diameter > 0.0) {
            problems.push(format!("beam diameter must be > 0 (got {})", self.diameter));
        }
        if !(self.total_intensity >= 0.0) {
            problems.push(format!(
                "total intensity must be >= 0 (got {})",
                self.total_intensity
            ));
        }
        if !(0.0..=Self::MAX_PROBE_RATIO).contains(&self.probe_to_control_ratio) {
            problems.push(format!(
                "probe/control ratio must lie in [0, {}] (got {})",
                Self::MAX_PROBE_RATIO,
                self.probe_to_control_ratio
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn control_intensity(&self) -> f64 {
        self.total_intensity / (1.0 + self.probe_to_control_ratio)
    }

    pub fn probe_intensity(&self) -> f64 {
        self.total_intensity * self.probe_to_control_ratio / (1.0 + self.probe_to_control_ratio)
    }
}

fn check_vapor_temperature(temperature_c: f64) -> Result<()> {
    let v = &constants().vapor;
    if !(v.min_temperature..=v.max_temperature).contains(&temperature_c) {
        return Err(Error::Domain(format!(
            "temperature {temperature_c} °C outside the vapor-pressure range [{}, {}] °C",
            v.min_temperature, v.max_temperature
        )));
    }
    Ok(())
}

/// Uncalibrated total density from the Antoine formula, cm⁻³.
fn antoine_density(temperature_c: f64) -> f64 {
    let c = constants();
    let t = temperature_c + 273.15;
    let pressure = 10f64.powf(c.vapor.antoine_a - c.vapor.antoine_b / t)
        * c.physical.standard_atmosphere;
    pressure / (c.physical.boltzmann * t) * 1e-6
}

static CALIBRATION: Lazy<f64> = Lazy::new(|| {
    let v = &constants().vapor;
    v.anchor_density / antoine_density(v.anchor_temperature)
});

/// Total natural-abundance Rb number density, cm⁻³.
pub fn natural_vapor_density(temperature_c: f64) -> Result<f64> {
    check_vapor_temperature(temperature_c)?;
    Ok(antoine_density(temperature_c) * *CALIBRATION)
}

/// Number density of one isotope in natural-abundance vapor, cm⁻³.
pub fn vapor_density(temperature_c: f64, species: &AtomSpecies) -> Result<f64> {
    Ok(natural_vapor_density(temperature_c)? * species.abundance)
}

/// Most probable speed √(2 k_B T / m), m/s.
pub fn thermal_speed(temperature_c: f64, species: &AtomSpecies) -> Result<f64> {
    let t = temperature_c + 273.15;
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "temperature {temperature_c} °C is at or below absolute zero"
        )));
    }
    Ok((2.0 * constants().physical.boltzmann * t / species.atomic_mass).sqrt())
}

/// Doppler full width at half maximum of the D1 line, rad/s.
pub fn doppler_fwhm(temperature_c: f64, species: &AtomSpecies) -> Result<f64> {
    let v = thermal_speed(temperature_c, species)?;
    // Gaussian in k·v with 1/e half width k·v_p.
    Ok(2.0 * (2f64.ln()).sqrt() * species.wavenumber() * v)
}

/// Rabi frequency Ω = d·E/ħ for a beam of `intensity` mW/cm², using the
/// effective D1 dipole of the constants table. rad/s.
pub fn rabi_from_intensity(intensity: f64, _species: &AtomSpecies) -> Result<f64> {
    if !(intensity >= 0.0) {
        return Err(Error::Domain(format!(
            "intensity must be >= 0 mW/cm² (got {intensity})"
        )));
    }
    let c = constants();
    let si = intensity * 10.0; // mW/cm² -> W/m²
    let field = (2.0 * si / (c.physical.speed_of_light * c.physical.vacuum_permittivity)).sqrt();
    Ok(c.d1.effective_dipole * field / c.physical.hbar)
}

/// Zeeman splitting ν = Δm·g_F·μ_B·B/h for a field in gauss, Hz.
pub fn zeeman_splitting(field_gauss: f64, lande_gf: f64, delta_m: u32) -> Result<f64> {
    if !(1..=2).contains(&delta_m) {
        return Err(Error::Domain(format!(
            "Δm = {delta_m} unsupported, expected 1 or 2"
        )));
    }
    Ok(delta_m as f64 * lande_gf * constants().physical.bohr_magneton_hz_per_gauss * field_gauss)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from an independent evaluation of the calibrated Antoine formula.
    const NATURAL_DENSITY_70C: f64 = 532867746193.45044;
    const RABI_3P5_MW_CM2: f64 = 22556227.909983072;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn species_table_invariants() {
        let rb85 = AtomSpecies::rb85();
        let rb87 = AtomSpecies::rb87();
        assert_eq!(rb85.abundance, 0.72);
        for s in [&rb85, &rb87] {
            assert!((s.d1_wavelength - 795e-9).abs() < 1e-9);
            for level in &s.ground_hyperfine {
                assert_eq!(level.degeneracy, 2 * level.f + 1);
            }
        }
        assert!((rb87.thermal_share(2).unwrap() - 5.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn density_anchor_and_golden() {
        assert!(rel(natural_vapor_density(36.0).unwrap(), 3e10) < 0.1);
        assert!(rel(natural_vapor_density(70.0).unwrap(), NATURAL_DENSITY_70C) < 1e-12);
        let rb87 = AtomSpecies::rb87();
        let share = vapor_density(70.0, &rb87).unwrap() / natural_vapor_density(70.0).unwrap();
        assert!((share - 0.28).abs() < 1e-12);
    }

    #[test]
    fn density_monotone_on_unit_grid() {
        let mut prev = natural_vapor_density(-50.0).unwrap();
        for t in -49..=150 {
            let n = natural_vapor_density(t as f64).unwrap();
            assert!(n > prev, "not increasing at {t}");
            prev = n;
        }
    }

    #[test]
    fn density_rejects_out_of_range() {
        let err = natural_vapor_density(151.0).unwrap_err();
        assert!(err.to_string().contains("[-50, 150]"));
        assert!(natural_vapor_density(-60.0).is_err());
    }

    #[test]
    fn thermal_speed_values() {
        let rb85 = AtomSpecies::rb85();
        let rb87 = AtomSpecies::rb87();
        assert!(rel(thermal_speed(48.0, &rb87).unwrap(), 248.0) < 0.005);
        let near_zero = thermal_speed(-273.15 + 1e-9, &rb87).unwrap();
        assert!(near_zero < 1e-2);
        let ratio = thermal_speed(20.0, &rb85).unwrap() / thermal_speed(20.0, &rb87).unwrap();
        let mass_ratio = (86.909180527f64 / 84.911789738).sqrt();
        assert!(rel(ratio, mass_ratio) < 1e-12);
        assert!(thermal_speed(-274.0, &rb87).is_err());
    }

    #[test]
    fn rabi_scaling() {
        let s = AtomSpecies::rb87();
        assert_eq!(rabi_from_intensity(0.0, &s).unwrap(), 0.0);
        assert!(rel(rabi_from_intensity(3.5, &s).unwrap(), RABI_3P5_MW_CM2) < 1e-12);
        for i in [0.01, 0.3, 7.0, 60.0] {
            let r = rabi_from_intensity(2.0 * i, &s).unwrap() / rabi_from_intensity(i, &s).unwrap();
            assert!(rel(r, 2f64.sqrt()) < 1e-12);
        }
        assert!(rabi_from_intensity(-1.0, &s).is_err());
    }

    #[test]
    fn zeeman_values() {
        assert_eq!(zeeman_splitting(0.0, 0.5, 1).unwrap(), 0.0);
        let nu = zeeman_splitting(0.038, 1.0 / 3.0, 1).unwrap();
        assert!(rel(nu, 17.7e3) < 0.005);
        let one = zeeman_splitting(0.05, 0.5, 1).unwrap();
        let two = zeeman_splitting(0.05, 0.5, 2).unwrap();
        assert_eq!(two, 2.0 * one);
        assert!(zeeman_splitting(0.05, 0.5, 3).is_err());
        assert!(zeeman_splitting(0.05, 0.5, 0).is_err());
    }

    #[test]
    fn conversions_are_pure() {
        let s = AtomSpecies::rb85();
        assert_eq!(
            natural_vapor_density(55.5).unwrap().to_bits(),
            natural_vapor_density(55.5).unwrap().to_bits()
        );
        assert_eq!(
            rabi_from_intensity(1.7, &s).unwrap().to_bits(),
            rabi_from_intensity(1.7, &s).unwrap().to_bits()
        );
    }

    #[test]
    fn beam_validation() {
        let ok = BeamConfig {
            diameter: 2e-3,
            total_intensity: 1.0,
            probe_to_control_ratio: 0.1,
        };
        ok.validate().unwrap();
        assert!((ok.control_intensity() + ok.probe_intensity() - 1.0).abs() < 1e-15);
        let bad = BeamConfig {
            diameter: 0.0,
            total_intensity: -1.0,
            probe_to_control_ratio: 0.5,
        };
        match bad.validate().unwrap_err() {
            Error::Validation(p) => assert_eq!(p.len(), 3),
            e => panic!("unexpected {e}"),
        }
    }
}
