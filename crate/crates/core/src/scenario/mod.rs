//! Scenario files, presets, sweeps and artifact output.
//!
//! A scenario is one TOML document. Every dimensional key carries its unit in
//! the name (`temperature_C`, `diameter_mm`, `intensity_mW_cm2`). A scenario
//! names a pipeline:
//!
//! - `spectrum`: a two-photon (or rf) spectrum, optionally fitted
//! - `pulse`: one Gaussian pulse through the coated-cell medium
//! - `sweep`: the coated-cell metrics over a grid of parameter axes
//! - `fit`: a lineshape fit of an external spectrum or pulse file
//!
//! Running a scenario produces an [`ArtifactSet`]: the CSV outputs plus a
//! manifest holding the fully resolved configuration, so the manifest alone
//! reproduces every file byte for byte.

mod fit;
mod presets;
mod run;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atomkit::{self, BeamConfig, Isotope};
use crate::coated_cell::{CellConfig, MediumOptions, RepumpConfig};
use crate::error::{Error, Result};
use crate::lambda_solver::TransitionSpec;

pub use fit::{fit_file, FitArtifact, FitModel};
pub use presets::{preset, PRESET_NAMES};
pub use run::{
    replay_manifest, run_scenario, sweep, Artifact, ArtifactSet, RunOptions, METRIC_COLUMNS,
    PULSE_METRIC_COLUMNS,
};

/// Default cap on the number of sweep cells.
pub const DEFAULT_SWEEP_CAP: usize = 10_000;

/// Sweepable parameter names.
pub const AXIS_NAMES: [&str; 12] = [
    "temperature_C",
    "total_intensity_mW_cm2",
    "control_intensity_mW_cm2",
    "probe_intensity_mW_cm2",
    "probe_to_control_ratio",
    "beam_diameter_mm",
    "pulse_fwhm_us",
    "repump_intensity_mW_cm2",
    "gradient_width_Hz",
    "wall_survival",
    "radiation_trapping",
    "one_photon_detuning_MHz",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Spectrum,
    Pulse,
    Sweep,
    Fit,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Spectrum => "spectrum",
            Pipeline::Pulse => "pulse",
            Pipeline::Sweep => "sweep",
            Pipeline::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub pipeline: Pipeline,
    #[serde(default = "default_species")]
    pub species: String,
    /// Master seed for every random stream of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub cell: CellSection,
    #[serde(default)]
    pub beam: BeamSection,
    #[serde(default)]
    pub lambda: LambdaOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repump: Option<RepumpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dr: Option<DrSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
}

fn default_species() -> String {
    "Rb87".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    #[serde(default = "default_radius")]
    pub radius_mm: f64,
    #[serde(default = "default_length")]
    pub length_mm: f64,
    #[serde(default = "default_temperature")]
    pub temperature_C: f64,
    #[serde(default = "default_survival")]
    pub wall_survival: f64,
    #[serde(default = "default_gradient")]
    pub gradient_width_Hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub narrow_weight: Option<f64>,
    /// Estimate the narrow weight from this many Monte Carlo atoms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo_atoms: Option<usize>,
}

fn default_radius() -> f64 {
    10.0
}
fn default_length() -> f64 {
    75.0
}
fn default_temperature() -> f64 {
    50.0
}
fn default_survival() -> f64 {
    0.9999
}
fn default_gradient() -> f64 {
    12.0
}

impl Default for CellSection {
    fn default() -> Self {
        CellSection {
            radius_mm: default_radius(),
            length_mm: default_length(),
            temperature_C: default_temperature(),
            wall_survival: default_survival(),
            gradient_width_Hz: default_gradient(),
            narrow_weight: None,
            monte_carlo_atoms: None,
        }
    }
}

/// Either a total intensity split by `probe_to_control_ratio`, or a control
/// intensity with a fixed probe intensity (or ratio).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    #[serde(default = "default_diameter")]
    pub diameter_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_intensity_mW_cm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_intensity_mW_cm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_intensity_mW_cm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_to_control_ratio: Option<f64>,
}

fn default_diameter() -> f64 {
    2.0
}

const DEFAULT_RATIO: f64 = 0.05;
const DEFAULT_TOTAL_INTENSITY: f64 = 1.0;

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            diameter_mm: default_diameter(),
            total_intensity_mW_cm2: None,
            control_intensity_mW_cm2: None,
            probe_intensity_mW_cm2: None,
            probe_to_control_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaOverrides {
    /// Ground half width, Hz. Only the `lambda` and `dr` spectrum models use
    /// it; the coated cell derives its widths from wall and gradient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ground_Hz: Option<f64>,
    #[serde(default)]
    pub one_photon_detuning_MHz: f64,
    #[serde(default = "default_delta_m")]
    pub delta_m: u32,
    #[serde(default = "default_true")]
    pub radiation_trapping: bool,
}

fn default_delta_m() -> u32 {
    2
}
fn default_true() -> bool {
    true
}

impl Default for LambdaOverrides {
    fn default() -> Self {
        LambdaOverrides {
            gamma_ground_Hz: None,
            one_photon_detuning_MHz: 0.0,
            delta_m: default_delta_m(),
            radiation_trapping: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepumpSection {
    pub intensity_mW_cm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrSection {
    #[serde(default = "default_field")]
    pub static_field_mG: f64,
    #[serde(default = "default_rf")]
    pub rf_rabi_Hz: f64,
}

fn default_field() -> f64 {
    38.0
}
fn default_rf() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumModel {
    /// Single Λ system with the full control Rabi frequency.
    Lambda,
    /// Two-ensemble coated-cell medium.
    Coated,
    /// Optical-pumping double resonance versus rf frequency.
    Dr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub model: SpectrumModel,
    pub half_span_Hz: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_fit_model")]
    pub fit: FitModel,
}

fn default_points() -> usize {
    2001
}
fn default_fit_model() -> FitModel {
    FitModel::Lorentzian
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub fwhm_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub axis: Vec<Axis>,
}

fn default_cap() -> usize {
    DEFAULT_SWEEP_CAP
}

/// One sweep axis: explicit `values`, or `points` samples from `from` to
/// `to` (log-spaced when `log = true`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            if self.from.is_some() || self.to.is_some() || self.points.is_some() {
                return Err(Error::Validation(vec![format!(
                    "axis '{}': give either values or from/to/points, not both",
                    self.name
                )]));
            }
            return Ok(v.clone());
        }
        let (Some(a), Some(b), Some(n)) = (self.from, self.to, self.points) else {
            return Err(Error::Validation(vec![format!(
                "axis '{}': needs values or all of from, to, points",
                self.name
            )]));
        };
        if n == 0 {
            return Ok(Vec::new());
        }
        if self.log && !(a > 0.0 && b > 0.0) {
            return Err(Error::Validation(vec![format!(
                "axis '{}': log spacing needs positive from and to",
                self.name
            )]));
        }
        Ok((0..n)
            .map(|k| {
                let t = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                if self.log {
                    (a.ln() + t * (b.ln() - a.ln())).exp()
                } else {
                    a + t * (b - a)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub input: String,
    #[serde(default = "default_fit_model")]
    pub model: FitModel,
}

/// Physics inputs of one scenario point.
#[derive(Debug, Clone)]
pub struct ResolvedPoint {
    pub cell: CellConfig,
    pub repump: Option<RepumpConfig>,
    pub options: MediumOptions,
    pub transition: TransitionSpec,
    /// rad/s
    pub one_photon_detuning: f64,
    /// rad/s
    pub gamma_override: Option<f64>,
    /// s
    pub pulse_fwhm: Option<f64>,
}

impl ScenarioConfig {
    /// Parse a scenario document. Syntax and type errors carry the line.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn isotope(&self) -> Result<Isotope> {
        self.species.parse()
    }

    pub fn uses_monte_carlo(&self) -> bool {
        self.cell.monte_carlo_atoms.is_some()
    }

    /// The sweep axes with their expanded values, in nesting order.
    pub fn axes(&self) -> Result<Vec<(String, Vec<f64>)>> {
        match &self.sweep {
            Some(s) => s.axis.iter().map(|a| Ok((a.name.clone(), a.values()?))).collect(),
            None => Ok(Vec::new()),
        }
    }

    pub fn grid_size(&self) -> Result<usize> {
        Ok(self.axes()?.iter().map(|(_, v)| v.len()).product())
    }

    /// Copy of the config with one sweep parameter set to `value`.
    pub fn with_axis_value(&self, name: &str, value: f64) -> Result<ScenarioConfig> {
        let mut c = self.clone();
        match name {
            "temperature_C" => c.cell.temperature_C = value,
            "total_intensity_mW_cm2" => {
                c.beam.total_intensity_mW_cm2 = Some(value);
                c.beam.control_intensity_mW_cm2 = None;
                c.beam.probe_intensity_mW_cm2 = None;
            }
            "control_intensity_mW_cm2" => {
                c.beam.control_intensity_mW_cm2 = Some(value);
                c.beam.total_intensity_mW_cm2 = None;
            }
            "probe_intensity_mW_cm2" => {
                c.beam.probe_intensity_mW_cm2 = Some(value);
                c.beam.probe_to_control_ratio = None;
            }
            "probe_to_control_ratio" => {
                c.beam.probe_to_control_ratio = Some(value);
                c.beam.probe_intensity_mW_cm2 = None;
            }
            "beam_diameter_mm" => c.beam.diameter_mm = value,
            "pulse_fwhm_us" => c.pulse = Some(PulseSection { fwhm_us: value }),
            "repump_intensity_mW_cm2" => {
                c.repump = (value != 0.0).then_some(RepumpSection {
                    intensity_mW_cm2: value,
                })
            }
            "gradient_width_Hz" => c.cell.gradient_width_Hz = value,
            "wall_survival" => c.cell.wall_survival = value,
            "radiation_trapping" => {
                c.lambda.radiation_trapping = match value {
                    0.0 => false,
                    1.0 => true,
                    v => {
                        return Err(Error::Validation(vec![format!(
                            "axis 'radiation_trapping' takes 0 or 1 (got {v})"
                        )]))
                    }
                }
            }
            "one_photon_detuning_MHz" => c.lambda.one_photon_detuning_MHz = value,
            other => {
                return Err(Error::Validation(vec![format!(
                    "unknown sweep axis '{other}'; expected one of {}",
                    AXIS_NAMES.join(", ")
                )]))
            }
        }
        Ok(c)
    }

    /// Beam intensities as (total, ratio).
    fn beam_split(&self) -> (f64, f64) {
        let b = &self.beam;
        match b.control_intensity_mW_cm2 {
            Some(control) => {
                let probe = b
                    .probe_intensity_mW_cm2
                    .unwrap_or(control * b.probe_to_control_ratio.unwrap_or(DEFAULT_RATIO));
                let ratio = if control > 0.0 { probe / control } else { 0.0 };
                (control + probe, ratio)
            }
            None => (
                b.total_intensity_mW_cm2.unwrap_or(DEFAULT_TOTAL_INTENSITY),
                b.probe_to_control_ratio.unwrap_or(DEFAULT_RATIO),
            ),
        }
    }

    /// Field problems of this point, without the sweep.
    fn point_problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                p.push(msg);
            }
        };
        let c = &self.cell;
        need(c.radius_mm > 0.0, format!("cell.radius_mm must be > 0 (got {})", c.radius_mm));
        need(c.length_mm > 0.0, format!("cell.length_mm must be > 0 (got {})", c.length_mm));
        need(
            (0.0..=1.0).contains(&c.wall_survival),
            format!("cell.wall_survival must lie in [0, 1] (got {})", c.wall_survival),
        );
        need(
            c.gradient_width_Hz >= 0.0,
            format!("cell.gradient_width_Hz must be >= 0 (got {})", c.gradient_width_Hz),
        );
        if let Some(w) = c.narrow_weight {
            need((0.0..=1.0).contains(&w), format!("cell.narrow_weight must lie in [0, 1] (got {w})"));
        }
        if let Some(n) = c.monte_carlo_atoms {
            need(n > 0, "cell.monte_carlo_atoms must be >= 1".into());
            need(
                self.seed.is_some(),
                "seed is required when cell.monte_carlo_atoms is set".into(),
            );
        }
        if let Err(e) = atomkit::natural_vapor_density(c.temperature_C) {
            need(false, format!("cell.temperature_C: {e}"));
        }

        let b = &self.beam;
        need(b.diameter_mm > 0.0, format!("beam.diameter_mm must be > 0 (got {})", b.diameter_mm));
        if b.diameter_mm > 2.0 * c.radius_mm {
            need(false, format!(
                "beam.diameter_mm {} exceeds the cell diameter {} mm",
                b.diameter_mm,
                2.0 * c.radius_mm
            ));
        }
        if b.total_intensity_mW_cm2.is_some() && b.control_intensity_mW_cm2.is_some() {
            need(false, "beam: give total_intensity_mW_cm2 or control_intensity_mW_cm2, not both".into());
        }
        if b.probe_intensity_mW_cm2.is_some() && b.probe_to_control_ratio.is_some() {
            need(false, "beam: give probe_intensity_mW_cm2 or probe_to_control_ratio, not both".into());
        }
        if b.probe_intensity_mW_cm2.is_some() && b.control_intensity_mW_cm2.is_none() {
            need(false, "beam.probe_intensity_mW_cm2 needs beam.control_intensity_mW_cm2".into());
        }
        for (key, v) in [
            ("total_intensity_mW_cm2", b.total_intensity_mW_cm2),
            ("control_intensity_mW_cm2", b.control_intensity_mW_cm2),
            ("probe_intensity_mW_cm2", b.probe_intensity_mW_cm2),
        ] {
            if let Some(v) = v {
                need(v >= 0.0, format!("beam.{key} must be >= 0 (got {v})"));
            }
        }
        let (_, ratio) = self.beam_split();
        need(
            (0.0..=BeamConfig::MAX_PROBE_RATIO).contains(&ratio),
            format!(
                "beam: probe/control intensity ratio must lie in [0, {}] (got {ratio})",
                BeamConfig::MAX_PROBE_RATIO
            ),
        );

        let l = &self.lambda;
        if let Some(g) = l.gamma_ground_Hz {
            need(g >= 0.0, format!("lambda.gamma_ground_Hz must be >= 0 (got {g})"));
        }
        need(
            l.one_photon_detuning_MHz.is_finite(),
            "lambda.one_photon_detuning_MHz must be finite".into(),
        );
        need(
            (1..=2).contains(&l.delta_m),
            format!("lambda.delta_m must be 1 or 2 (got {})", l.delta_m),
        );
        if let Some(r) = &self.repump {
            need(
                r.intensity_mW_cm2 >= 0.0,
                format!("repump.intensity_mW_cm2 must be >= 0 (got {})", r.intensity_mW_cm2),
            );
        }
        if let Some(d) = &self.dr {
            need(d.static_field_mG >= 0.0, format!("dr.static_field_mG must be >= 0 (got {})", d.static_field_mG));
            need(d.rf_rabi_Hz >= 0.0, format!("dr.rf_rabi_Hz must be >= 0 (got {})", d.rf_rabi_Hz));
        }
        if let Some(pulse) = &self.pulse {
            need(pulse.fwhm_us > 0.0, format!("pulse.fwhm_us must be > 0 (got {})", pulse.fwhm_us));
        }
        p
    }

    /// Check the whole configuration, reporting every offending field.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.id.trim().is_empty() {
            problems.push("id must not be empty".into());
        }
        let isotope = match self.isotope() {
            Ok(i) => Some(i),
            Err(e) => {
                problems.push(format!("species: {e}"));
                None
            }
        };
        problems.extend(self.point_problems());

        match self.pipeline {
            Pipeline::Spectrum => match &self.spectrum {
                None => problems.push("pipeline 'spectrum' needs a [spectrum] section".into()),
                Some(s) => {
                    if !(s.half_span_Hz > 0.0) {
                        problems.push(format!("spectrum.half_span_Hz must be > 0 (got {})", s.half_span_Hz));
                    }
                    let min = match s.fit {
                        FitModel::DualLorentzian => 24,
                        _ => 8,
                    };
                    if s.points < min {
                        problems.push(format!("spectrum.points must be >= {min} (got {})", s.points));
                    }
                    if s.model != SpectrumModel::Dr && isotope == Some(Isotope::Rb85) {
                        problems.push("the lambda and coated models describe Rb87; use species = \"Rb87\"".into());
                    }
                    if s.model == SpectrumModel::Coated && self.lambda.gamma_ground_Hz.is_some() {
                        problems.push(
                            "lambda.gamma_ground_Hz does not apply to the coated model (wall and gradient set it)".into(),
                        );
                    }
                }
            },
            Pipeline::Pulse => {
                if self.pulse.is_none() {
                    problems.push("pipeline 'pulse' needs a [pulse] section".into());
                }
            }
            Pipeline::Sweep => match &self.sweep {
                Some(s) if !s.axis.is_empty() => {}
                _ => problems.push("pipeline 'sweep' needs at least one [[sweep.axis]]".into()),
            },
            Pipeline::Fit => {
                if self.fit.is_none() {
                    problems.push("pipeline 'fit' needs a [fit] section".into());
                }
            }
        }
        if matches!(self.pipeline, Pipeline::Pulse | Pipeline::Sweep) {
            if isotope == Some(Isotope::Rb85) {
                problems.push("pulse and sweep pipelines describe Rb87; use species = \"Rb87\"".into());
            }
            if self.lambda.gamma_ground_Hz.is_some() {
                problems.push(
                    "lambda.gamma_ground_Hz does not apply to the coated-cell medium (wall and gradient set it)".into(),
                );
            }
        }

        if let Some(s) = &self.sweep {
            let base = self.point_problems();
            let mut seen = Vec::new();
            for axis in &s.axis {
                if seen.contains(&axis.name) {
                    problems.push(format!("sweep axis '{}' appears twice", axis.name));
                }
                seen.push(axis.name.clone());
                if !AXIS_NAMES.contains(&axis.name.as_str()) {
                    problems.push(format!(
                        "unknown sweep axis '{}'; expected one of {}",
                        axis.name,
                        AXIS_NAMES.join(", ")
                    ));
                    continue;
                }
                let values = match axis.values() {
                    Ok(v) => v,
                    Err(Error::Validation(list)) => {
                        problems.extend(list);
                        continue;
                    }
                    Err(e) => {
                        problems.push(e.to_string());
                        continue;
                    }
                };
                if values.is_empty() {
                    problems.push(format!("sweep axis '{}' has no values", axis.name));
                }
                for v in values {
                    if !v.is_finite() {
                        problems.push(format!("sweep axis '{}' has a non-finite value", axis.name));
                        continue;
                    }
                    match self.with_axis_value(&axis.name, v) {
                        Ok(c) => {
                            for msg in c.point_problems() {
                                if !base.contains(&msg) {
                                    problems.push(format!("sweep axis '{}' = {v}: {msg}", axis.name));
                                }
                            }
                        }
                        Err(Error::Validation(list)) => problems.extend(list),
                        Err(e) => problems.push(e.to_string()),
                    }
                }
            }
            if let Ok(n) = self.grid_size() {
                if n > s.cap {
                    problems.push(format!("sweep grid has {n} cells, above the cap of {}", s.cap));
                }
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Physics inputs for this configuration as a single point.
    pub fn resolve(&self) -> Result<ResolvedPoint> {
        let isotope = self.isotope()?;
        let (total, ratio) = self.beam_split();
        let cell = CellConfig {
            cell_radius: self.cell.radius_mm * 1e-3,
            cell_length: self.cell.length_mm * 1e-3,
            temperature: self.cell.temperature_C,
            beam: BeamConfig {
                diameter: self.beam.diameter_mm * 1e-3,
                total_intensity: total,
                probe_to_control_ratio: ratio,
            },
            wall_survival: self.cell.wall_survival,
            field_gradient_width: self.cell.gradient_width_Hz,
            species_mix: CellConfig::natural_mix(),
            narrow_weight: self.cell.narrow_weight,
        };
        let species = atomkit::AtomSpecies::new(isotope);
        let transition = match (isotope, self.lambda.delta_m) {
            (Isotope::Rb87, 2) => TransitionSpec::rb87_eit(),
            (Isotope::Rb87, dm) => TransitionSpec::new(species, 2, 1, (2 - dm as i32, 2))?,
            (Isotope::Rb85, 1) => TransitionSpec::rb85_double_resonance(),
            (Isotope::Rb85, dm) => TransitionSpec::new(species, 3, 3, (3 - dm as i32, 3))?,
        };
        Ok(ResolvedPoint {
            cell,
            repump: self.repump.as_ref().map(|r| RepumpConfig::rb87(r.intensity_mW_cm2)),
            options: MediumOptions {
                radiation_trapping: self.lambda.radiation_trapping,
            },
            transition,
            one_photon_detuning: 2.0 * PI * 1e6 * self.lambda.one_photon_detuning_MHz,
            gamma_override: self.lambda.gamma_ground_Hz.map(|g| 2.0 * PI * g),
            pulse_fwhm: self.pulse.as_ref().map(|p| p.fwhm_us * 1e-6),
        })
    }
}
