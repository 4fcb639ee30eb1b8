//! Coated-cell physics on top of the Λ-system model.
//!
//! The probe sees two ensembles sharing one line centre:
//!
//! - the **pedestal**: coherence built during a single transit of the beam,
//!   with ground half width `γ_t + γ_int + γ_rt`, where `γ_t = v_p/(2d)` is
//!   the transit rate, and the full control Rabi frequency;
//! - the **narrow peak**: coherence carried between passes by atoms returning
//!   from the walls, with half width `γ_int + γ_rt` and a control pumping rate
//!   reduced by the in-beam fraction `f_in = (d/2R)²` (the atom is only pumped
//!   while it is inside the beam).
//!
//! Their weights are `f_b = s / (1 + γ_t·t_in)` and `f_t = 1 − f_b`. Here `s`
//! is the probability that an atom returns to the beam with its coherence
//! intact within one coherence lifetime, and `1/(1 + γ_t·t_in)` is the part of
//! the in-beam coherence inherited from earlier passes rather than rebuilt
//! during the current one (exponential dwell with mean `t_in`). For the
//! thermal mean dwell `t_in = (π/4)d/⟨v_⊥⟩` the product `γ_t·t_in = √π/4`
//! does not depend on geometry.

mod montecarlo;
mod repump;
mod trapping;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::atomkit::{self, AtomSpecies, BeamConfig, Isotope};
use crate::error::{Error, Result};
use crate::lambda_solver::{self, LambdaParams};
use crate::spectrum::{Spectrum, SpectrumValues};

pub use montecarlo::{simulate_trajectories, simulate_trajectories_with_workers, TransitStatistics};
pub use repump::{repumper_effective_density, RepumpConfig};
pub use trapping::{radiation_trapping_decoherence, trapping_map, TRAPPING_MAX_ITERATIONS};

/// Geometry, temperature and coating quality of one vapor cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellConfig {
    /// m
    pub cell_radius: f64,
    /// m
    pub cell_length: f64,
    /// °C
    pub temperature: f64,
    pub beam: BeamConfig,
    /// Probability that ground coherence survives one wall collision.
    pub wall_survival: f64,
    /// Half width (Hz) a field gradient imposes on a Δm = 1 coherence.
    pub field_gradient_width: f64,
    /// Isotope abundances of the filling.
    pub species_mix: BTreeMap<Isotope, f64>,
    /// Frozen narrow-ensemble weight; `None` evaluates the analytic estimate.
    pub narrow_weight: Option<f64>,
}

impl CellConfig {
    pub fn natural_mix() -> BTreeMap<Isotope, f64> {
        [Isotope::Rb85, Isotope::Rb87]
            .into_iter()
            .map(|i| (i, AtomSpecies::new(i).abundance))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = match self.beam.validate() {
            Ok(()) => Vec::new(),
            Err(Error::Validation(p)) => p,
            Err(e) => vec![e.to_string()],
        };
        if !(self.cell_radius > 0.0) {
            problems.push(format!("cell radius must be > 0 (got {})", self.cell_radius));
        }
        if !(self.cell_length > 0.0) {
            problems.push(format!("cell length must be > 0 (got {})", self.cell_length));
        }
        if self.beam.diameter > 2.0 * self.cell_radius {
            problems.push(format!(
                "beam diameter {} m exceeds cell diameter {} m",
                self.beam.diameter,
                2.0 * self.cell_radius
            ));
        }
        if !(0.0..=1.0).contains(&self.wall_survival) {
            problems.push(format!(
                "wall coherence survival must lie in [0, 1] (got {})",
                self.wall_survival
            ));
        }
        if !(self.field_gradient_width >= 0.0) {
            problems.push(format!(
                "field gradient width must be >= 0 (got {})",
                self.field_gradient_width
            ));
        }
        if let Some(w) = self.narrow_weight {
            if !(0.0..=1.0).contains(&w) {
                problems.push(format!("narrow weight must lie in [0, 1] (got {w})"));
            }
        }
        if self.species_mix.values().any(|&a| !(a >= 0.0)) {
            problems.push("species abundances must be >= 0".into());
        }
        if let Err(e) = atomkit::natural_vapor_density(self.temperature) {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Number density of `isotope` in this cell, cm⁻³.
    pub fn isotope_density(&self, isotope: Isotope) -> Result<f64> {
        let share = self.species_mix.get(&isotope).copied().unwrap_or(0.0);
        Ok(atomkit::natural_vapor_density(self.temperature)? * share)
    }

    /// Most probable speed of Rb87 at the cell temperature, m/s.
    pub fn thermal_speed(&self) -> f64 {
        atomkit::thermal_speed(self.temperature, &AtomSpecies::rb87()).unwrap_or(0.0)
    }

    /// Fraction of the cell cross-section covered by the beam.
    pub fn in_beam_fraction(&self) -> f64 {
        let a = 0.5 * self.beam.diameter / self.cell_radius;
        a * a
    }

    /// Mean wall collision rate ⟨v⟩·S/(4V), 1/s.
    pub fn wall_collision_rate(&self) -> f64 {
        let mean_speed = 2.0 * self.thermal_speed() / PI.sqrt();
        let surface_to_volume = 2.0 / self.cell_radius + 2.0 / self.cell_length;
        mean_speed * surface_to_volume / 4.0
    }

    /// Wall-induced ground decoherence (1 − p_w)·ν_wall as a half width, Hz.
    pub fn wall_decoherence_rate(&self) -> f64 {
        (1.0 - self.wall_survival) * self.wall_collision_rate() / (2.0 * PI)
    }

    /// Intrinsic ground half width (wall + gradient) for a Δm coherence, rad/s.
    pub fn intrinsic_decoherence(&self, delta_m: u32) -> Result<f64> {
        let gradient = lambda_solver::gradient_broadening(delta_m, self.field_gradient_width)?;
        Ok(2.0 * PI * (self.wall_decoherence_rate() + gradient))
    }

    /// Transit half width γ_t = v_p/(2d), rad/s.
    pub fn transit_rate(&self) -> f64 {
        self.thermal_speed() / (2.0 * self.beam.diameter)
    }

    /// Mean duration of one beam crossing, (π/4)d/⟨v_⊥⟩, s.
    pub fn mean_crossing_time(&self) -> f64 {
        let mean_transverse = 0.5 * PI.sqrt() * self.thermal_speed();
        0.25 * PI * self.beam.diameter / mean_transverse
    }

    /// Mean time between leaving the beam and re-entering it, s.
    pub fn mean_dark_time(&self) -> f64 {
        let f = self.in_beam_fraction();
        self.mean_crossing_time() * (1.0 - f) / f
    }

    /// Probability of returning to the beam with coherence intact within one
    /// coherence lifetime `1/γ` (γ in rad/s), from mean-value geometry.
    pub fn coherent_return_probability(&self, gamma: f64) -> f64 {
        let dark = self.mean_dark_time();
        let bounces = (dark * self.wall_collision_rate()).max(1.0);
        let in_time = if gamma > 0.0 {
            1.0 - (-1.0 / (gamma * dark)).exp()
        } else {
            1.0
        };
        self.wall_survival.powf(bounces) * in_time
    }

    /// Fraction of in-beam coherence inherited from earlier passes.
    pub fn memory_fraction(&self) -> f64 {
        1.0 / (1.0 + self.transit_rate() * self.mean_crossing_time())
    }

    /// Λ parameters for Rb87 EIT in this cell at the given F = 2 density
    /// (cm⁻³). Rabi frequencies include the line strength of each Λ arm.
    pub fn eit_params(&self, density: f64) -> Result<LambdaParams> {
        let species = AtomSpecies::rb87();
        let m = &atomkit::constants().model;
        let mut p = LambdaParams::rb87(
            atomkit::rabi_from_intensity(self.beam.control_intensity(), &species)? * m.control_line_strength.sqrt(),
            0.0,
            density,
            self.cell_length,
        );
        p.omega_p = atomkit::rabi_from_intensity(self.beam.probe_intensity(), &species)? * m.probe_line_strength.sqrt();
        p.doppler_width = atomkit::doppler_fwhm(self.temperature, &species)?;
        p.gamma_ground = self.intrinsic_decoherence(p.transition.delta_m)?;
        Ok(p)
    }

    /// Thermal F = 2 density of Rb87 without repumping, cm⁻³.
    pub fn thermal_eit_density(&self) -> Result<f64> {
        let species = AtomSpecies::rb87();
        Ok(self.isotope_density(Isotope::Rb87)? * species.thermal_share(2)?)
    }

    /// Narrow-ensemble weight f_b.
    pub fn narrow_weight(&self, delta_m: u32) -> Result<f64> {
        match self.narrow_weight {
            Some(w) => Ok(w),
            None => Ok(self.coherent_return_probability(self.intrinsic_decoherence(delta_m)?)
                * self.memory_fraction()),
        }
    }
}

/// Narrow-ensemble weight estimated from Monte Carlo transit statistics.
pub fn narrow_weight_from_transits(stats: &TransitStatistics, cell: &CellConfig) -> f64 {
    stats.coherent_return_probability * cell.memory_fraction()
}

/// Full width of the transit-time broadening, v_p/(2π·d), Hz.
pub fn transit_linewidth(cell: &CellConfig) -> Result<f64> {
    if !(cell.beam.diameter > 0.0) {
        return Err(Error::Domain("beam diameter must be > 0".into()));
    }
    Ok(cell.thermal_speed() / (2.0 * PI * cell.beam.diameter))
}

/// Switches for the coated-cell medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumOptions {
    pub radiation_trapping: bool,
}

impl Default for MediumOptions {
    fn default() -> Self {
        MediumOptions {
            radiation_trapping: true,
        }
    }
}

/// The two-ensemble coated-cell medium for one set of Λ parameters.
///
/// `base.gamma_ground` is ignored: the ground widths come from the cell.
#[derive(Debug, Clone)]
pub struct CoatedCellMedium {
    pub pedestal: LambdaParams,
    pub narrow: LambdaParams,
    pub pedestal_weight: f64,
    pub narrow_weight: f64,
    /// Radiation-trapping decoherence added to both ensembles, rad/s.
    pub trapping_rate: f64,
    pub length: f64,
    wavenumber: f64,
}

impl CoatedCellMedium {
    pub fn new(base: &LambdaParams, cell: &CellConfig, options: MediumOptions) -> Result<Self> {
        base.validate()?;
        cell.validate()?;
        let delta_m = base.transition.delta_m;
        let intrinsic = cell.intrinsic_decoherence(delta_m)?;
        let trapping_rate = if options.radiation_trapping {
            let mut p = base.clone();
            p.gamma_ground = intrinsic;
            radiation_trapping_decoherence(&p, cell)?
        } else {
            0.0
        };
        let narrow_weight = cell.narrow_weight(delta_m)?;
        let pedestal = LambdaParams {
            gamma_ground: cell.transit_rate() + intrinsic + trapping_rate,
            two_photon_detuning: 0.0,
            ..base.clone()
        };
        let narrow = LambdaParams {
            gamma_ground: intrinsic + trapping_rate,
            omega_c: base.omega_c * cell.in_beam_fraction().sqrt(),
            two_photon_detuning: 0.0,
            ..base.clone()
        };
        Ok(CoatedCellMedium {
            pedestal,
            narrow,
            pedestal_weight: 1.0 - narrow_weight,
            narrow_weight,
            trapping_rate,
            length: base.length,
            wavenumber: base.wavenumber(),
        })
    }

    /// χ at two-photon detuning `delta` (rad/s).
    pub fn susceptibility(&self, delta: f64) -> Result<Complex64> {
        let t = lambda_solver::steady_state_susceptibility(&self.pedestal.with_two_photon_detuning(delta))?;
        let b = lambda_solver::steady_state_susceptibility(&self.narrow.with_two_photon_detuning(delta))?;
        Ok(t * self.pedestal_weight + b * self.narrow_weight)
    }

    /// Field transfer function exp(i·k·L·χ/2).
    pub fn field_response(&self, delta: f64) -> Result<Complex64> {
        let chi = self.susceptibility(delta)?;
        Ok((Complex64::i() * (0.5 * self.wavenumber * self.length) * chi).exp())
    }

    pub fn transmission(&self, delta: f64) -> Result<f64> {
        let chi = self.susceptibility(delta)?;
        Ok((-self.wavenumber * self.length * chi.im).exp())
    }

    /// Narrowband group delay (k·L/2)·d Re χ/dδ at line centre, s.
    pub fn group_delay(&self) -> Result<f64> {
        let d = susceptibility_slope(&self.pedestal)? * self.pedestal_weight
            + susceptibility_slope(&self.narrow)? * self.narrow_weight;
        Ok(0.5 * self.wavenumber * self.length * d.re)
    }

    /// Group velocity L/τ_g, m/s (infinite when there is no delay).
    pub fn group_velocity(&self) -> Result<f64> {
        let tau = self.group_delay()?;
        Ok(if tau > 0.0 { self.length / tau } else { f64::INFINITY })
    }

    /// Narrowband energy transmission |H(0)|².
    pub fn energy_transmission(&self) -> Result<f64> {
        self.transmission(0.0)
    }

    /// Pedestal full width, Hz.
    pub fn pedestal_fwhm_hz(&self) -> f64 {
        2.0 * self.pedestal.transparency_half_width() / (2.0 * PI)
    }

    /// Narrow-peak full width, Hz.
    pub fn narrow_fwhm_hz(&self) -> f64 {
        2.0 * self.narrow.transparency_half_width() / (2.0 * PI)
    }
}

/// dχ/dδ of the weak-probe susceptibility at δ = 0.
pub fn susceptibility_slope(p: &LambdaParams) -> Result<Complex64> {
    let i = Complex64::i();
    let ground = Complex64::new(p.gamma_ground, 0.0);
    let omega2 = p.omega_c * p.omega_c / 4.0;
    let coupling = if p.omega_c == 0.0 { Complex64::new(0.0, 0.0) } else { omega2 / ground };
    let denom = Complex64::new(p.optical_width() / 2.0, -p.one_photon_detuning) + coupling;
    if denom.norm() == 0.0 || (p.omega_c > 0.0 && p.gamma_ground == 0.0) {
        return Err(Error::Domain("group delay undefined for an ideal dark state".into()));
    }
    let ddenom = -i + if p.omega_c == 0.0 { Complex64::new(0.0, 0.0) } else { omega2 * i / (ground * ground) };
    Ok(-p.coupling_scale() * i * ddenom / (denom * denom))
}

/// Transmission of the two-ensemble medium over a detuning grid in Hz.
pub fn dual_structure_spectrum(
    cell: &CellConfig,
    p: &LambdaParams,
    grid_hz: &[f64],
    options: MediumOptions,
) -> Result<Spectrum> {
    let medium = CoatedCellMedium::new(p, cell, options)?;
    if grid_hz.len() < 3 {
        return Err(Error::Range("detuning grid needs at least 3 points".into()));
    }
    let span = grid_hz[grid_hz.len() - 1] - grid_hz[0];
    let needed = 5.0 * medium.pedestal_fwhm_hz();
    if span < needed {
        return Err(Error::Range(format!(
            "detuning grid spans {span:.4e} Hz but the pedestal needs at least {needed:.4e} Hz"
        )));
    }
    let values = grid_hz
        .iter()
        .map(|&hz| medium.transmission(2.0 * PI * hz))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(grid_hz.to_vec(), SpectrumValues::Transmission(values))
}

#[cfg(test)]
mod tests;
