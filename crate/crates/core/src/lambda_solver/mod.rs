//! Three-level Λ-system: weak-probe susceptibility, EIT transmission and
//! linewidth, the optical-pumping double-resonance lineshape, and a density
//! matrix integrator used as the independent check of the closed form.
//!
//! Level labels: |1⟩ is the probe ground state, |2⟩ the control ground state,
//! |3⟩ the common excited state. All rates and detunings are angular (rad/s);
//! spectra are reported against detuning in Hz.
//!
//! The weak-probe susceptibility, first order in Ω_P with all population in
//! |1⟩, is
//!
//! ```text
//! χ(δ) = A · i / [ Γ_opt/2 − iΔ_p + (Ω_C²/4) / (γ₁₂ − iδ) ],   Δ_p = Δ + δ
//! A    = N · S · d² / (ε₀ ħ)
//! ```
//!
//! with `S` the relative line strength of the Λ arms, `d` the effective D1
//! dipole and `Γ_opt = Γ + W_D` the effective optical width. For `W_D = 0`
//! this is the exact homogeneous result; for a Doppler-broadened vapor the
//! Lorentzian replacement `Γ → Γ + W_D` is the Doppler-narrowed effective
//! form used for everything on the two-photon axis. [`doppler_averaged_susceptibility`]
//! performs the full Gaussian convolution over Δ when the one-photon lineshape
//! itself is wanted.
//!
//! On two-photon resonance the transparency is a Lorentzian of half width
//! `w = γ₁₂ + Ω_C²/(2 Γ_opt)`, i.e. FWHM `2γ₁₂ + Ω_C²/Γ_opt`.

mod bloch;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::atomkit::{self, AtomSpecies};
use crate::error::{Error, Result};
use crate::spectrum::{Spectrum, SpectrumValues};

pub use bloch::{integrate_bloch, BlochOptions, DensityMatrix, Trajectory};

/// Which pair of Zeeman sublevels forms the Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpec {
    pub species: AtomSpecies,
    pub ground_f: u32,
    pub excited_f: u32,
    pub mf_pair: (i32, i32),
    pub delta_m: u32,
}

impl TransitionSpec {
    pub fn new(species: AtomSpecies, ground_f: u32, excited_f: u32, mf_pair: (i32, i32)) -> Result<Self> {
        let delta_m = (mf_pair.1 - mf_pair.0).unsigned_abs();
        if !(1..=2).contains(&delta_m) {
            return Err(Error::Domain(format!(
                "sublevel pair {:?} gives Δm = {delta_m}, expected 1 or 2",
                mf_pair
            )));
        }
        species.level(ground_f)?;
        Ok(TransitionSpec {
            species,
            ground_f,
            excited_f,
            mf_pair,
            delta_m,
        })
    }

    /// F=2 → F'=1 of Rb87 on m_F = 0 and +2 (Δm = 2), the EIT configuration.
    pub fn rb87_eit() -> Self {
        Self::new(AtomSpecies::rb87(), 2, 1, (0, 2)).expect("valid built-in transition")
    }

    /// F=3 Zeeman pair of Rb85 (Δm = 1), the double-resonance configuration.
    pub fn rb85_double_resonance() -> Self {
        Self::new(AtomSpecies::rb85(), 3, 3, (2, 3)).expect("valid built-in transition")
    }

    pub fn lande_gf(&self) -> f64 {
        self.species
            .level(self.ground_f)
            .map(|l| l.lande_gf)
            .unwrap_or(0.0)
    }
}

/// All parameters of one Λ-system interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaParams {
    /// Ω_C, rad/s
    pub omega_c: f64,
    /// Ω_P, rad/s
    pub omega_p: f64,
    /// Γ, rad/s
    pub gamma_excited: f64,
    /// γ₁₂ (half width of the ground coherence), rad/s
    pub gamma_ground: f64,
    /// Δ, rad/s
    pub one_photon_detuning: f64,
    /// δ, rad/s
    pub two_photon_detuning: f64,
    /// Doppler FWHM W_D, rad/s
    pub doppler_width: f64,
    /// Interacting atoms, cm⁻³
    pub density: f64,
    /// Medium length, m
    pub length: f64,
    /// m
    pub wavelength: f64,
    pub transition: TransitionSpec,
}

impl LambdaParams {
    /// Resonant Rb87 EIT with the given rates; other fields take simple defaults.
    pub fn rb87(omega_c: f64, gamma_ground: f64, density: f64, length: f64) -> Self {
        let transition = TransitionSpec::rb87_eit();
        LambdaParams {
            omega_c,
            omega_p: 0.0,
            gamma_excited: transition.species.excited_decay_rate,
            gamma_ground,
            one_photon_detuning: 0.0,
            two_photon_detuning: 0.0,
            doppler_width: 0.0,
            density,
            length,
            wavelength: transition.species.d1_wavelength,
            transition,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, v) in [
            ("omega_c", self.omega_c),
            ("omega_p", self.omega_p),
            ("gamma_excited", self.gamma_excited),
            ("gamma_ground", self.gamma_ground),
            ("doppler_width", self.doppler_width),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                problems.push(format!("{name} must be a finite rate >= 0 (got {v})"));
            }
        }
        for (name, v) in [
            ("density", self.density),
            ("length", self.length),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                problems.push(format!("{name} must be > 0 (got {v})"));
            }
        }
        if !self.one_photon_detuning.is_finite() || !self.two_photon_detuning.is_finite() {
            problems.push("detunings must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn with_two_photon_detuning(&self, delta: f64) -> Self {
        LambdaParams {
            two_photon_detuning: delta,
            ..self.clone()
        }
    }

    /// Γ_opt = Γ + W_D, the effective optical width, rad/s.
    pub fn optical_width(&self) -> f64 {
        self.gamma_excited + self.doppler_width
    }

    /// A = N·S_p·d²/(ε₀ħ), rad/s, with S_p the probe-arm line strength.
    pub fn coupling_scale(&self) -> f64 {
        let c = atomkit::constants();
        let d = c.d1.effective_dipole;
        self.density * 1e6 * c.model.probe_line_strength * d * d
            / (c.physical.vacuum_permittivity * c.physical.hbar)
    }

    /// Power-broadening rate Ω_C²/(2Γ_opt), rad/s.
    pub fn pumping_rate(&self) -> f64 {
        self.omega_c * self.omega_c / (2.0 * self.optical_width())
    }

    /// Half width of the transparency on resonance, w = γ₁₂ + Ω_C²/(2Γ_opt).
    pub fn transparency_half_width(&self) -> f64 {
        self.gamma_ground + self.pumping_rate()
    }

    /// Carrier wavenumber, 1/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Two-level resonant intensity optical depth k·L·Im χ (Ω_C = 0, Δ = 0).
    pub fn resonant_optical_depth(&self) -> f64 {
        self.wavenumber() * self.length * 2.0 * self.coupling_scale() / self.optical_width()
    }
}

/// Weak-probe susceptibility at δ = `p.two_photon_detuning`.
pub fn steady_state_susceptibility(p: &LambdaParams) -> Result<Complex64> {
    susceptibility_with_width(p, p.optical_width())
}

fn susceptibility_with_width(p: &LambdaParams, optical_width: f64) -> Result<Complex64> {
    if p.omega_c == 0.0 && p.gamma_ground == 0.0 && optical_width == 0.0 {
        return Err(Error::Domain(
            "degenerate Λ system: all decay rates and fields are zero".into(),
        ));
    }
    let i = Complex64::i();
    let delta = p.two_photon_detuning;
    let ground = Complex64::new(p.gamma_ground, -delta);
    let coupling = if p.omega_c == 0.0 {
        Complex64::new(0.0, 0.0)
    } else if ground.norm() == 0.0 {
        // Ideal dark state: the denominator diverges and the probe sees nothing.
        return Ok(Complex64::new(0.0, 0.0));
    } else {
        p.omega_c * p.omega_c / 4.0 / ground
    };
    let denom = Complex64::new(optical_width / 2.0, -(p.one_photon_detuning + delta)) + coupling;
    if denom.norm() == 0.0 {
        return Err(Error::Domain("susceptibility denominator vanishes".into()));
    }
    Ok(p.coupling_scale() * i / denom)
}

/// Homogeneous (Γ only) susceptibility averaged over a Gaussian distribution
/// of one-photon detunings with FWHM `p.doppler_width`.
///
/// Trapezoidal quadrature over ±5σ with a step no coarser than Γ/8.
pub fn doppler_averaged_susceptibility(p: &LambdaParams) -> Result<Complex64> {
    if p.doppler_width == 0.0 {
        return susceptibility_with_width(p, p.gamma_excited);
    }
    let sigma = p.doppler_width / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let half = 5.0 * sigma;
    let step_max = (p.gamma_excited / 8.0).max(half / 20_000.0);
    let n = ((2.0 * half / step_max).ceil() as usize).max(64) | 1;
    let h = 2.0 * half / (n - 1) as f64;
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let mut acc = Complex64::new(0.0, 0.0);
    let mut shifted = p.clone();
    for k in 0..n {
        let shift = -half + h * k as f64;
        let weight = norm * (-(shift * shift) / (2.0 * sigma * sigma)).exp();
        let trap = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        shifted.one_photon_detuning = p.one_photon_detuning + shift;
        acc += susceptibility_with_width(&shifted, p.gamma_excited)? * (weight * trap * h);
    }
    Ok(acc)
}

/// Intensity transmission exp(−k·L·Im χ) at δ = `p.two_photon_detuning`.
pub fn transmission(p: &LambdaParams) -> Result<f64> {
    let chi = steady_state_susceptibility(p)?;
    Ok((-p.wavenumber() * p.length * chi.im).exp())
}

/// Transmission spectrum over a two-photon detuning grid in Hz.
pub fn eit_spectrum(p: &LambdaParams, detuning_grid_hz: &[f64]) -> Result<Spectrum> {
    p.validate()?;
    let values = detuning_grid_hz
        .iter()
        .map(|&hz| transmission(&p.with_two_photon_detuning(2.0 * PI * hz)))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(detuning_grid_hz.to_vec(), SpectrumValues::Transmission(values))
}

/// Complex susceptibility spectrum over a two-photon detuning grid in Hz.
pub fn susceptibility_spectrum(p: &LambdaParams, detuning_grid_hz: &[f64]) -> Result<Spectrum> {
    p.validate()?;
    let values = detuning_grid_hz
        .iter()
        .map(|&hz| steady_state_susceptibility(&p.with_two_photon_detuning(2.0 * PI * hz)))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(detuning_grid_hz.to_vec(), SpectrumValues::Susceptibility(values))
}

/// Full width at half height of a transparency feature `f(δ)` whose peak sits
/// at δ = 0, measured against the far-wing level `f(∞)`.
///
/// The crossing on each side is bracketed by doubling from `guess` (rad/s) and
/// refined by bisection. Result in rad/s.
pub(crate) fn feature_fwhm<F>(f: F, guess: f64, far: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let peak = f(0.0)?;
    let height = peak - far;
    if !(height.abs() > 1e-15 * peak.abs().max(far.abs()).max(1e-300)) {
        return Err(Error::Range(
            "no transparency feature: peak equals the far-wing level".into(),
        ));
    }
    let half = far + 0.5 * height;
    let above = |x: f64| -> Result<bool> { Ok((f(x)? - half) * height.signum() > 0.0) };
    let mut width = 0.0;
    for side in [1.0, -1.0] {
        let mut lo = 0.0;
        let mut hi = guess.max(f64::MIN_POSITIVE);
        let mut expansions = 0;
        while above(side * hi)? {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Range(
                    "no half-maximum crossing found; widen the detuning span".into(),
                ));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if above(side * mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        width += 0.5 * (lo + hi);
    }
    Ok(width)
}

/// FWHM of the EIT transparency in Hz.
pub fn eit_fwhm(p: &LambdaParams) -> Result<f64> {
    p.validate()?;
    let far_params = LambdaParams {
        omega_c: 0.0,
        ..p.clone()
    };
    let far = transmission(&far_params)?;
    let centre = p.with_two_photon_detuning(0.0);
    let w = feature_fwhm(
        |d| transmission(&centre.with_two_photon_detuning(d)),
        p.transparency_half_width(),
        far,
    )?;
    Ok(w / (2.0 * PI))
}

/// How a gradient width combines with an intrinsic width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthCombination {
    #[default]
    Linear,
    Quadrature,
}

/// Broadening from a field gradient for a Δm coherence, given the width the
/// same gradient produces for Δm = 1.
pub fn gradient_broadening(delta_m: u32, gradient_width: f64) -> Result<f64> {
    if !(1..=2).contains(&delta_m) {
        return Err(Error::Domain(format!(
            "Δm = {delta_m} unsupported, expected 1 or 2"
        )));
    }
    Ok(delta_m as f64 * gradient_width)
}

/// Total width of an intrinsic width plus gradient broadening.
pub fn combine_widths(intrinsic: f64, gradient: f64, how: WidthCombination) -> f64 {
    match how {
        WidthCombination::Linear => intrinsic + gradient,
        WidthCombination::Quadrature => intrinsic.hypot(gradient),
    }
}

/// Optical-pumping double resonance (rf-driven Zeeman mixing).
#[derive(Debug, Clone, PartialEq)]
pub struct DRParams {
    /// rf Rabi frequency, rad/s
    pub omega_rf: f64,
    /// Static longitudinal field, G
    pub static_field: f64,
    /// rf detuning at which `double_resonance_response` is evaluated, rad/s
    pub rf_detuning: f64,
    /// mW/cm²
    pub pump_intensity: f64,
    /// rad/s (half width)
    pub gamma_ground: f64,
    /// Landé g_F of the pumped level
    pub lande_gf: f64,
    /// Effective optical width used for the pumping rate, rad/s
    pub optical_width: f64,
}

impl DRParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.omega_rf >= 0.0) {
            problems.push(format!("omega_rf must be >= 0 (got {})", self.omega_rf));
        }
        if !(self.pump_intensity >= 0.0) {
            problems.push(format!("pump intensity must be >= 0 (got {})", self.pump_intensity));
        }
        if !(self.gamma_ground >= 0.0) {
            problems.push(format!("gamma_ground must be >= 0 (got {})", self.gamma_ground));
        }
        if !(self.optical_width > 0.0) {
            problems.push(format!("optical width must be > 0 (got {})", self.optical_width));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Resonance frequency ν₀ = g_F μ_B B / h, Hz.
    pub fn center_hz(&self) -> f64 {
        atomkit::zeeman_splitting(self.static_field, self.lande_gf, 1).unwrap_or(0.0)
    }

    /// Optical pumping rate from the pump beam, rad/s.
    pub fn pumping_rate(&self) -> f64 {
        let c = atomkit::constants();
        let rabi = atomkit::rabi_from_intensity(self.pump_intensity, &AtomSpecies::rb85()).unwrap_or(0.0);
        c.model.control_line_strength * rabi * rabi / (2.0 * self.optical_width)
    }

    /// Half width of the dip including rf and optical broadening, rad/s.
    pub fn half_width(&self) -> f64 {
        let relax = self.gamma_ground + self.pumping_rate();
        (relax * relax + self.omega_rf * self.omega_rf).sqrt()
    }

    /// Full width of the dip, Hz.
    pub fn fwhm_hz(&self) -> f64 {
        2.0 * self.half_width() / (2.0 * PI)
    }
}

/// Transmission at rf detuning `detuning` (rad/s) from the Zeeman resonance.
///
/// Steady state of the rf-driven two-level Bloch equations: the absorbed
/// fraction is `C · Ω_rf² / (Δ² + γ² + Ω_rf²)`.
pub fn double_resonance_response(d: &DRParams, detuning: f64) -> f64 {
    let relax = d.gamma_ground + d.pumping_rate();
    let rf2 = d.omega_rf * d.omega_rf;
    let denom = detuning * detuning + relax * relax + rf2;
    if denom == 0.0 {
        return 1.0;
    }
    1.0 - atomkit::constants().model.dr_contrast * rf2 / denom
}

/// Transmission versus rf frequency (Hz).
pub fn double_resonance_spectrum(d: &DRParams, rf_grid_hz: &[f64]) -> Result<Spectrum> {
    d.validate()?;
    let centre = d.center_hz();
    let values = rf_grid_hz
        .iter()
        .map(|&nu| double_resonance_response(d, 2.0 * PI * (nu - centre)))
        .collect();
    Spectrum::new(rf_grid_hz.to_vec(), SpectrumValues::Transmission(values))
}
