use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fit::{fit_file, FitArtifact, FitModel};
use super::{Pipeline, ResolvedPoint, ScenarioConfig, SpectrumModel};
use crate::atomkit::{self, AtomSpecies, Isotope};
use crate::coated_cell::{
    narrow_weight_from_transits, repumper_effective_density, simulate_trajectories, CoatedCellMedium,
};
use crate::csvio;
use crate::error::{Error, Result};
use crate::lambda_solver::{self, DRParams, LambdaParams};
use crate::pulsewave::{propagate, PropagationResult, Pulse};
use crate::spectrum::{symmetric_grid, Spectrum, SpectrumValues};

/// Narrowband metrics reported for every coated-cell point.
pub const METRIC_COLUMNS: [&str; 8] = [
    "group_delay_s",
    "group_velocity_m_s",
    "energy_transmission",
    "narrow_fwhm_Hz",
    "pedestal_fwhm_Hz",
    "narrow_weight",
    "trapping_rate_Hz",
    "optical_depth",
];

/// Extra metrics when a pulse is propagated.
pub const PULSE_METRIC_COLUMNS: [&str; 3] = [
    "fractional_delay",
    "fractional_reshaping",
    "pulse_energy_transmission",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads for sweeps; `None` uses the global pool.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Output files of one run, manifest last.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactSet {
    pub files: Vec<Artifact>,
}

impl ArtifactSet {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|a| a.name == name).map(|a| a.contents.as_str())
    }

    pub fn manifest(&self) -> &str {
        self.get(MANIFEST_NAME).unwrap_or_default()
    }

    /// Write every file into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
        let mut paths = Vec::new();
        for a in &self.files {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.contents)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    manifest: ManifestHeader,
    config: ScenarioConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestHeader {
    scenario: String,
    pipeline: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    code_version: String,
    constants_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_sha256: Option<String>,
    artifact: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Execute the scenario's pipeline and collect its artifacts.
pub fn run_scenario(config: &ScenarioConfig, options: &RunOptions) -> Result<ArtifactSet> {
    config.validate()?;
    let ctx = format!("scenario '{}'", config.id);
    let mut input_sha256 = None;
    let files = match config.pipeline {
        Pipeline::Spectrum => spectrum_artifacts(config),
        Pipeline::Pulse => pulse_artifacts(config),
        Pipeline::Sweep => sweep(config, options).map(|t| vec![artifact("sweep.csv", t)]),
        Pipeline::Fit => {
            let f = config.fit.as_ref().expect("validated");
            let path = Path::new(&f.input);
            input_sha256 = std::fs::read(path).ok().map(|b| sha256_hex(&b));
            fit_file(path, f.model).map(|a| fit_artifacts(&a))
        }
    }
    .map_err(|e| e.context(&ctx))?;

    let mut recorded = config.clone();
    recorded.output_dir = None;
    let manifest = Manifest {
        manifest: ManifestHeader {
            scenario: config.id.clone(),
            pipeline: config.pipeline.name().into(),
            seed: config.seed,
            code_version: code_version(),
            constants_sha256: sha256_hex(atomkit::constants_source().as_bytes()),
            input_sha256,
            artifact: files
                .iter()
                .map(|a| ManifestEntry {
                    name: a.name.clone(),
                    bytes: a.contents.len(),
                    sha256: sha256_hex(a.contents.as_bytes()),
                })
                .collect(),
        },
        config: recorded,
    };
    let mut files = files;
    files.push(artifact(
        MANIFEST_NAME,
        toml::to_string(&manifest).expect("manifest always serializes"),
    ));
    Ok(ArtifactSet { files })
}

/// Rerun the scenario recorded in a manifest and check every artifact
/// against the recorded digests.
pub fn replay_manifest(text: &str, options: &RunOptions) -> Result<ArtifactSet> {
    let m: Manifest = toml::from_str(text).map_err(|e| Error::Parse {
        line: e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1),
        message: e.message().to_string(),
    })?;
    let set = run_scenario(&m.config, options)?;
    for entry in &m.manifest.artifact {
        let got = set
            .get(&entry.name)
            .ok_or_else(|| Error::numerical(format!("replay did not produce {}", entry.name)))?;
        if sha256_hex(got.as_bytes()) != entry.sha256 {
            return Err(Error::numerical(format!(
                "replayed {} differs from the manifest digest",
                entry.name
            )));
        }
    }
    Ok(set)
}

fn artifact(name: &str, contents: String) -> Artifact {
    Artifact {
        name: name.into(),
        contents,
    }
}

fn fit_artifacts(a: &FitArtifact) -> Vec<Artifact> {
    vec![artifact("fit.csv", a.result_csv()), artifact("fit_curve.csv", a.curve_csv())]
}

/// Λ parameters of a resolved point, with the narrow weight from Monte
/// Carlo when requested.
fn point_params(config: &ScenarioConfig, pt: &ResolvedPoint) -> Result<(LambdaParams, crate::coated_cell::CellConfig)> {
    let mut cell = pt.cell.clone();
    if let Some(n) = config.cell.monte_carlo_atoms {
        let seed = config
            .seed
            .ok_or_else(|| Error::Validation(vec!["seed is required when cell.monte_carlo_atoms is set".into()]))?;
        let stats = simulate_trajectories(&cell, n, seed)?;
        cell.narrow_weight = Some(narrow_weight_from_transits(&stats, &cell));
    }
    let density = match &pt.repump {
        Some(r) => repumper_effective_density(cell.isotope_density(Isotope::Rb87)?, r)?,
        None => cell.thermal_eit_density()?,
    };
    let mut p = cell.eit_params(density)?;
    p.transition = pt.transition.clone();
    p.one_photon_detuning = pt.one_photon_detuning;
    p.gamma_ground = match pt.gamma_override {
        Some(g) => g,
        None => cell.intrinsic_decoherence(p.transition.delta_m)?,
    };
    Ok((p, cell))
}

fn point_medium(config: &ScenarioConfig) -> Result<CoatedCellMedium> {
    let pt = config.resolve()?;
    let (p, cell) = point_params(config, &pt)?;
    CoatedCellMedium::new(&p, &cell, pt.options)
}

fn spectrum_artifacts(config: &ScenarioConfig) -> Result<Vec<Artifact>> {
    let s = config.spectrum.as_ref().expect("validated");
    let pt = config.resolve()?;
    let grid = symmetric_grid(s.half_span_Hz, s.points);
    let spectrum = match s.model {
        SpectrumModel::Lambda => {
            let (p, _) = point_params(config, &pt)?;
            lambda_solver::eit_spectrum(&p, &grid)?
        }
        SpectrumModel::Coated => {
            let (p, cell) = point_params(config, &pt)?;
            let medium = CoatedCellMedium::new(&p, &cell, pt.options)?;
            let values = grid
                .iter()
                .map(|&hz| medium.transmission(2.0 * PI * hz))
                .collect::<Result<Vec<_>>>()?;
            Spectrum::new(grid, SpectrumValues::Transmission(values))?
        }
        SpectrumModel::Dr => {
            let d = dr_params(config, &pt)?;
            let centre = d.center_hz();
            let rf: Vec<f64> = grid.iter().map(|x| centre + x).collect();
            lambda_solver::double_resonance_spectrum(&d, &rf)?
        }
    };
    let mut files = vec![artifact("spectrum.csv", spectrum.to_csv())];
    if s.fit != FitModel::None {
        let a = FitArtifact::new(s.fit, spectrum.detuning_hz().to_vec(), spectrum.real_values(), "detuning_Hz")?;
        files.extend(fit_artifacts(&a));
    }
    Ok(files)
}

/// Double-resonance parameters. The pump acts on an atom only while it is in
/// the beam, so its time-averaged intensity is scaled by the in-beam fraction.
fn dr_params(config: &ScenarioConfig, pt: &ResolvedPoint) -> Result<DRParams> {
    let dr = config.dr.clone().unwrap_or(super::DrSection {
        static_field_mG: super::default_field(),
        rf_rabi_Hz: super::default_rf(),
    });
    let species = AtomSpecies::new(config.isotope()?);
    let cell = &pt.cell;
    let gamma = match pt.gamma_override {
        Some(g) => g,
        None => cell.intrinsic_decoherence(pt.transition.delta_m)?,
    };
    let d = DRParams {
        omega_rf: 2.0 * PI * dr.rf_rabi_Hz,
        static_field: dr.static_field_mG * 1e-3,
        rf_detuning: 0.0,
        pump_intensity: cell.beam.total_intensity * cell.in_beam_fraction(),
        gamma_ground: gamma,
        lande_gf: pt.transition.lande_gf(),
        optical_width: species.excited_decay_rate + 2.0 * PI * atomkit::doppler_fwhm(cell.temperature, &species)?,
    };
    d.validate()?;
    Ok(d)
}

fn has_pulse(config: &ScenarioConfig) -> bool {
    config.pulse.is_some()
        || config
            .sweep
            .as_ref()
            .is_some_and(|s| s.axis.iter().any(|a| a.name == "pulse_fwhm_us"))
}

/// Metric fields of one point, in column order, and the propagated pulse.
fn evaluate(config: &ScenarioConfig, with_pulse: bool) -> Result<(Vec<f64>, Option<PropagationResult>)> {
    let medium = point_medium(config)?;
    let mut row = vec![
        medium.group_delay()?,
        medium.group_velocity()?,
        medium.energy_transmission()?,
        medium.narrow_fwhm_hz(),
        medium.pedestal_fwhm_hz(),
        medium.narrow_weight,
        medium.trapping_rate / (2.0 * PI),
        medium.pedestal.resonant_optical_depth(),
    ];
    if with_pulse {
        let fwhm = config.resolve()?.pulse_fwhm.ok_or_else(|| Error::Domain("no pulse width".into()))?;
        let r = propagate(&Pulse::gaussian(fwhm)?, &medium)?;
        row.extend([r.fractional_delay, r.fractional_reshaping, r.energy_transmission]);
        return Ok((row, Some(r)));
    }
    Ok((row, None))
}

fn metric_header(with_pulse: bool) -> Vec<String> {
    let mut h: Vec<String> = METRIC_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_pulse {
        h.extend(PULSE_METRIC_COLUMNS.iter().map(|s| s.to_string()));
    }
    h
}

fn pulse_artifacts(config: &ScenarioConfig) -> Result<Vec<Artifact>> {
    let (row, r) = evaluate(config, true)?;
    let mut metrics = String::new();
    csvio::write_row(&mut metrics, &metric_header(true));
    metrics.push_str(&csvio::float_row(&row));
    let trace = r.expect("pulse requested").to_csv();
    Ok(vec![artifact("pulse.csv", trace), artifact("metrics.csv", metrics)])
}

/// Long-format table of the metrics over every grid cell, first axis
/// outermost. Failed cells keep their row with the reason in `error`.
pub fn sweep(config: &ScenarioConfig, options: &RunOptions) -> Result<String> {
    let axes = config.axes()?;
    if axes.is_empty() {
        return Err(Error::Validation(vec!["sweep needs at least one axis".into()]));
    }
    let size: usize = axes.iter().map(|(_, v)| v.len()).product();
    let cap = config.sweep.as_ref().map_or(super::DEFAULT_SWEEP_CAP, |s| s.cap);
    if size > cap {
        return Err(Error::Validation(vec![format!(
            "sweep grid has {size} cells, above the cap of {cap}"
        )]));
    }
    config.validate()?;
    let with_pulse = has_pulse(config);

    let cells: Vec<Vec<f64>> = (0..size)
        .map(|mut k| {
            let mut idx = vec![0.0; axes.len()];
            for (j, (_, values)) in axes.iter().enumerate().rev() {
                idx[j] = values[k % values.len()];
                k /= values.len();
            }
            idx
        })
        .collect();
    let eval = |point: &Vec<f64>| -> std::result::Result<Vec<f64>, String> {
        let mut c = config.clone();
        for ((name, _), &v) in axes.iter().zip(point) {
            c = c.with_axis_value(name, v).map_err(|e| e.to_string())?;
        }
        evaluate(&c, with_pulse).map(|(row, _)| row).map_err(|e| e.to_string())
    };
    let results: Vec<_> = match options.workers {
        Some(n) => {
            if n == 0 {
                return Err(Error::Validation(vec!["workers must be >= 1".into()]));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::numerical(format!("cannot start worker pool: {e}")))?
                .install(|| cells.par_iter().map(eval).collect())
        }
        None => cells.par_iter().map(eval).collect(),
    };

    let mut header: Vec<String> = axes.iter().map(|(n, _)| n.clone()).collect();
    let metrics = metric_header(with_pulse);
    let n_metrics = metrics.len();
    header.extend(metrics);
    header.push("error".into());
    let mut out = String::new();
    csvio::write_row(&mut out, &header);
    for (point, result) in cells.iter().zip(results) {
        let mut fields: Vec<String> = point.iter().map(|v| csvio::fmt_f64(*v)).collect();
        match result {
            Ok(row) => {
                fields.extend(row.iter().map(|v| csvio::fmt_f64(*v)));
                fields.push(String::new());
            }
            Err(msg) => {
                fields.extend(std::iter::repeat_n(String::new(), n_metrics));
                fields.push(csvio::sanitize(&msg));
            }
        }
        csvio::write_row(&mut out, &fields);
    }
    Ok(out)
}
