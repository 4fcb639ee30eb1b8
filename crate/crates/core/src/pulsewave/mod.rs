//! Linear propagation of probe pulses through a dispersive medium.
//!
//! The slowly varying field envelope is `E(t) = √I(t)` and the medium acts
//! on it through a field transfer function `H(ω)` of the detuning from the
//! carrier, with the `e^{−iωt}` sign convention so that `H = e^{iωτ}` is a
//! pure delay by `τ`. Propagation is an FFT product on a zero-padded grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::coated_cell::{CellConfig, CoatedCellMedium, MediumOptions, RepumpConfig};
use crate::csvio::{self, Table};
use crate::error::{Error, Result};
use crate::fitlab::{pulse_metrics, PulseMetrics};
use crate::lambda_solver::{self, LambdaParams};
use crate::spectrum::Spectrum;

/// Samples per input FWHM used by [`Pulse::gaussian`].
pub const SAMPLES_PER_FWHM: f64 = 16.0;

/// Largest FFT accepted by [`propagate`].
pub const MAX_FFT_POINTS: usize = 1 << 22;

/// Fraction of spectral energy allowed in the outer eighth of the FFT band.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

/// Minimum number of samples in a pulse trace.
pub const MIN_SAMPLES: usize = 16;

/// Intensity trace on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    /// Time of the first sample, s.
    pub t0: f64,
    /// s
    pub dt: f64,
    /// Intensity, arbitrary units, ≥ 0.
    pub samples: Vec<f64>,
    pub label: String,
}

impl Pulse {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "a pulse needs at least {MIN_SAMPLES} samples (got {})",
                samples.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(Error::Domain(format!("pulse time step must be > 0 (got {dt})")));
        }
        if samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("pulse intensity must be finite and >= 0".into()));
        }
        if !samples.iter().any(|&v| v > 0.0) {
            return Err(Error::Domain("pulse has no positive sample".into()));
        }
        Ok(Pulse {
            t0,
            dt,
            samples,
            label: label.into(),
        })
    }

    /// Gaussian of unit peak and the given intensity FWHM (s), centred at 0,
    /// sampled over ±4 FWHM at `samples_per_fwhm`.
    pub fn gaussian_sampled(fwhm: f64, samples_per_fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return Err(Error::Domain(format!("pulse width must be > 0 (got {fwhm})")));
        }
        let dt = fwhm / samples_per_fwhm;
        let half = (4.0 * samples_per_fwhm).ceil() as i64;
        let sigma = fwhm / (8.0 * 2f64.ln()).sqrt();
        let samples = (-half..=half)
            .map(|k| (-0.5 * (k as f64 * dt / sigma).powi(2)).exp())
            .collect();
        Pulse::new(-(half as f64) * dt, dt, samples, format!("gaussian {fwhm:e} s"))
    }

    pub fn gaussian(fwhm: f64) -> Result<Self> {
        Self::gaussian_sampled(fwhm, SAMPLES_PER_FWHM)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|k| self.t0 + k as f64 * self.dt).collect()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.dt
    }

    pub fn metrics(&self) -> Result<PulseMetrics> {
        pulse_metrics(&self.times(), &self.samples)
    }

    /// Header comment with the exact grid, then `time_s,intensity` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# t0_s={} dt_s={}\ntime_s,intensity\n",
            csvio::fmt_f64(self.t0),
            csvio::fmt_f64(self.dt)
        );
        for (t, i) in self.times().iter().zip(&self.samples) {
            out.push_str(&csvio::float_row(&[*t, *i]));
        }
        out
    }

    /// Parse a two-column pulse CSV; the time column must be uniform.
    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let table = Table::parse(text)?;
        if table.header.len() != 2 {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected 2 columns, found {}", table.header.len()),
            });
        }
        let times = table.floats(0)?;
        let samples = table.floats(1)?;
        let bad = |message: String| Error::Parse { line: 1, message };
        if times.len() < 2 {
            return Err(bad("pulse file has fewer than 2 rows".into()));
        }
        let n = times.len();
        let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
        for (k, t) in times.iter().enumerate() {
            if ((t - times[0]) - k as f64 * dt).abs() > 1e-6 * dt {
                return Err(Error::Parse {
                    line: table.rows[k].0,
                    message: "pulse times must be uniformly spaced".into(),
                });
            }
        }
        let (t0, dt) = grid_comment(text).unwrap_or((times[0], dt));
        Pulse::new(t0, dt, samples, label).map_err(|e| bad(e.to_string()))
    }
}

/// Exact (t0, dt) from a leading `# t0_s=… dt_s=…` comment.
fn grid_comment(text: &str) -> Option<(f64, f64)> {
    let line = text.lines().next()?.strip_prefix('#')?;
    let mut t0 = None;
    let mut dt = None;
    for field in line.split_whitespace() {
        match field.split_once('=') {
            Some(("t0_s", v)) => t0 = v.parse().ok(),
            Some(("dt_s", v)) => dt = v.parse().ok(),
            _ => {}
        }
    }
    Some((t0?, dt?))
}

/// Field response of a medium versus detuning from the carrier (rad/s).
pub trait TransferFunction: Sync {
    fn response(&self, omega: f64) -> Result<Complex64>;

    /// Half width of the narrowest spectral feature, rad/s. Sets how long the
    /// medium rings and hence the time window.
    fn feature_half_width(&self) -> f64;

    /// Medium length, m.
    fn length(&self) -> f64;

    /// Detuning range (rad/s) over which `response` is defined.
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Narrowband group delay dφ/dω at line centre, s. The default is a
    /// Richardson-extrapolated central difference of arg H.
    fn group_delay(&self) -> Result<f64> {
        let h = 1e-2 * self.feature_half_width();
        let slope = |s: f64| -> Result<f64> { Ok((self.response(s)? / self.response(-s)?).arg() / (2.0 * s)) };
        Ok((4.0 * slope(0.5 * h)? - slope(h)?) / 3.0)
    }

    /// Narrowband energy transmission |H(0)|².
    fn energy_transmission(&self) -> Result<f64> {
        Ok(self.response(0.0)?.norm_sqr())
    }
}

/// Homogeneous Λ medium of length `p.length`.
#[derive(Debug, Clone)]
pub struct LambdaMedium(pub LambdaParams);

impl TransferFunction for LambdaMedium {
    fn response(&self, omega: f64) -> Result<Complex64> {
        let chi = lambda_solver::steady_state_susceptibility(&self.0.with_two_photon_detuning(omega))?;
        Ok((Complex64::i() * (0.5 * self.0.wavenumber() * self.0.length) * chi).exp())
    }

    fn feature_half_width(&self) -> f64 {
        self.0.transparency_half_width()
    }

    fn group_delay(&self) -> Result<f64> {
        let d = crate::coated_cell::susceptibility_slope(&self.0)?;
        Ok(0.5 * self.0.wavenumber() * self.0.length * d.re)
    }

    fn length(&self) -> f64 {
        self.0.length
    }
}

impl TransferFunction for CoatedCellMedium {
    fn response(&self, omega: f64) -> Result<Complex64> {
        self.field_response(omega)
    }

    fn feature_half_width(&self) -> f64 {
        self.narrow.transparency_half_width()
    }

    fn length(&self) -> f64 {
        self.length
    }

    fn group_delay(&self) -> Result<f64> {
        CoatedCellMedium::group_delay(self)
    }
}

/// Transfer function interpolated from a sampled susceptibility spectrum.
#[derive(Debug, Clone)]
pub struct SampledMedium {
    spectrum: Spectrum,
    wavenumber: f64,
    length: f64,
    feature: f64,
}

impl TransferFunction for SampledMedium {
    fn response(&self, omega: f64) -> Result<Complex64> {
        let hz = omega / (2.0 * PI);
        let chi = self.spectrum.interpolate_susceptibility(hz).ok_or_else(|| {
            Error::Range(format!("detuning {hz:.4e} Hz is outside the sampled spectrum"))
        })?;
        Ok((Complex64::i() * (0.5 * self.wavenumber * self.length) * chi).exp())
    }

    fn feature_half_width(&self) -> f64 {
        self.feature
    }

    fn length(&self) -> f64 {
        self.length
    }

    fn support(&self) -> (f64, f64) {
        let x = self.spectrum.detuning_hz();
        (2.0 * PI * x[0], 2.0 * PI * x[x.len() - 1])
    }
}

/// Build a transfer function from a susceptibility spectrum for a medium of
/// length `length` (m) at carrier wavenumber `wavenumber` (1/m).
pub fn transfer_function(spectrum: &Spectrum, wavenumber: f64, length: f64) -> Result<SampledMedium> {
    let chi = spectrum
        .susceptibility_values()
        .ok_or_else(|| Error::Domain("a transfer function needs a susceptibility spectrum".into()))?;
    let x = spectrum.detuning_hz();
    // Narrowest feature: half the spacing-resolved width of the Im χ dip.
    let im: Vec<f64> = chi.iter().map(|c| c.im).collect();
    let (imin, _) = im.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let far = im[0].max(im[im.len() - 1]);
    let half = 0.5 * (far + im[imin]);
    let mut hi = imin;
    while hi + 1 < im.len() && im[hi] < half {
        hi += 1;
    }
    let feature = 2.0 * PI * (x[hi] - x[imin]).max(x[1] - x[0]);
    Ok(SampledMedium {
        spectrum: spectrum.clone(),
        wavenumber,
        length,
        feature,
    })
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub input: Pulse,
    pub output: Pulse,
    pub input_metrics: PulseMetrics,
    pub output_metrics: PulseMetrics,
    /// Narrowband group delay of the medium, s.
    pub group_delay: f64,
    /// length / group delay, m/s (infinite without delay).
    pub group_velocity: f64,
    /// Output peak shift over the input FWHM.
    pub fractional_delay: f64,
    /// (FWHM_out − FWHM_in)/FWHM_in; negative when the output is narrower.
    pub fractional_reshaping: f64,
    /// Output/input energy from the traces.
    pub energy_transmission: f64,
}

impl PropagationResult {
    /// Time, input and output intensity on the output grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,input_intensity,output_intensity\n");
        for (k, (t, o)) in self.output.times().iter().zip(&self.output.samples).enumerate() {
            let i = self.input.samples.get(k).copied().unwrap_or(0.0);
            out.push_str(&csvio::float_row(&[*t, i, *o]));
        }
        out
    }
}

/// (peak time of output − peak time of input) / FWHM of input.
pub fn fractional_delay(input: &Pulse, output: &Pulse) -> Result<f64> {
    let a = input.metrics()?;
    let b = output.metrics()?;
    Ok((b.peak_time - a.peak_time) / a.fwhm)
}

/// (FWHM_out − FWHM_in)/FWHM_in.
///
/// The wording "input minus output width, normalized to the input width"
/// gives the opposite sign; this convention makes narrowing negative.
pub fn fractional_reshaping(input: &Pulse, output: &Pulse) -> Result<f64> {
    let a = input.metrics()?;
    let b = output.metrics()?;
    Ok((b.fwhm - a.fwhm) / a.fwhm)
}

/// Angular frequency of FFT bin `k` of `n` at spacing `dt`.
fn bin_omega(k: usize, n: usize, dt: f64) -> f64 {
    let k = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * k / (n as f64 * dt)
}

/// Propagate `pulse` through `medium`.
pub fn propagate(pulse: &Pulse, medium: &dyn TransferFunction) -> Result<PropagationResult> {
    let input_metrics = pulse.metrics()?;
    let dt = pulse.dt;
    let tau = medium.group_delay()?;
    let w = medium.feature_half_width();
    if !(w > 0.0) {
        return Err(Error::Domain("medium has no finite spectral feature".into()));
    }
    let span = dt * (pulse.len() - 1) as f64;
    let window = span + 12.0 * tau.abs() + 40.0 / w + 8.0 * input_metrics.fwhm;
    let needed = (window / dt).ceil() as usize;
    // Zero padding of at least 4x the trace keeps the output from wrapping.
    let n = needed.max(4 * pulse.len()).next_power_of_two();
    if n > MAX_FFT_POINTS {
        return Err(Error::Range(format!(
            "propagation would need {n} FFT points (limit {MAX_FFT_POINTS}); \
             the pulse is too short for the medium's narrowest feature"
        )));
    }

    let mut field: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    for (k, i) in pulse.samples.iter().enumerate() {
        field[k] = Complex64::new(i.sqrt(), 0.0);
    }
    let mut planner = FftPlanner::new();
    // Analysis Ẽ(ω) = Σ E(t)·e^{+iωt}: the inverse-direction transform.
    planner.plan_fft_inverse(n).process(&mut field);

    let total: f64 = field.iter().map(|c| c.norm_sqr()).sum();
    let outer: f64 = (0..n)
        .filter(|&k| {
            let m = if k < n / 2 { k } else { n - k };
            m >= 3 * n / 8
        })
        .map(|k| field[k].norm_sqr())
        .sum();
    if outer > LEAKAGE_LIMIT * total {
        return Err(Error::numerical(
            "pulse spectrum leaks past the FFT band edge; use a longer pulse or a finer time grid",
        ));
    }
    let (lo, hi) = medium.support();
    for (k, f) in field.iter_mut().enumerate() {
        let omega = bin_omega(k, n, dt);
        if omega < lo || omega > hi {
            if f.norm_sqr() > 1e-12 * total {
                return Err(Error::Range(format!(
                    "pulse bandwidth exceeds the medium's spectral support at {:.4e} Hz",
                    omega / (2.0 * PI)
                )));
            }
            *f = Complex64::new(0.0, 0.0);
            continue;
        }
        *f *= medium.response(omega)?;
    }
    planner.plan_fft_forward(n).process(&mut field);
    let scale = 1.0 / n as f64;
    let out_intensity: Vec<f64> = field.iter().map(|c| (c * scale).norm_sqr()).collect();

    let peak = out_intensity.iter().cloned().fold(0.0, f64::max);
    let tail = &out_intensity[n - n / 16..];
    if tail.iter().any(|&v| v > 1e-6 * peak) {
        return Err(Error::numerical(
            "output wraps around the FFT window; the medium rings longer than expected",
        ));
    }
    let keep = out_intensity
        .iter()
        .rposition(|&v| v > 1e-12 * peak)
        .map_or(pulse.len(), |k| (k + 1).max(pulse.len()));
    let output = Pulse {
        t0: pulse.t0,
        dt,
        samples: out_intensity[..keep].to_vec(),
        label: format!("{} (output)", pulse.label),
    };
    let output_metrics = output.metrics()?;
    let energy_transmission = out_intensity.iter().sum::<f64>() / pulse.samples.iter().sum::<f64>();
    let length = medium.length();
    Ok(PropagationResult {
        input: pulse.clone(),
        group_velocity: if tau > 0.0 { length / tau } else { f64::INFINITY },
        fractional_delay: (output_metrics.peak_time - input_metrics.peak_time) / input_metrics.fwhm,
        fractional_reshaping: (output_metrics.fwhm - input_metrics.fwhm) / input_metrics.fwhm,
        output,
        input_metrics,
        output_metrics,
        energy_transmission,
        group_delay: tau,
    })
}

/// One point of a group-velocity curve.
#[derive(Debug, Clone, PartialEq)]
pub struct VgPoint {
    /// °C
    pub temperature: f64,
    /// mW/cm²
    pub intensity: f64,
    /// m/s
    pub group_velocity: f64,
    pub energy_transmission: f64,
    pub error: Option<String>,
}

/// Narrowband group velocity and transmission over a temperature ×
/// intensity grid, sorted by temperature then intensity.
pub fn group_velocity_curve(
    cell: &CellConfig,
    temperatures: &[f64],
    intensities: &[f64],
    repump: Option<&RepumpConfig>,
    options: MediumOptions,
) -> Vec<VgPoint> {
    let mut ts = temperatures.to_vec();
    ts.sort_by(f64::total_cmp);
    let mut is = intensities.to_vec();
    is.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(ts.len() * is.len());
    for &t in &ts {
        for &i in &is {
            let point = (|| -> Result<(f64, f64)> {
                let medium = build_medium(cell, t, i, repump, options)?;
                Ok((medium.group_velocity()?, medium.energy_transmission()?))
            })();
            out.push(match point {
                Ok((v, e)) => VgPoint {
                    temperature: t,
                    intensity: i,
                    group_velocity: v,
                    energy_transmission: e,
                    error: None,
                },
                Err(e) => VgPoint {
                    temperature: t,
                    intensity: i,
                    group_velocity: f64::NAN,
                    energy_transmission: f64::NAN,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    out
}

pub fn vg_table_csv(points: &[VgPoint]) -> String {
    let mut out = String::from("temperature_C,intensity_mW_cm2,group_velocity_m_s,energy_transmission,error\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csvio::fmt_f64(p.temperature),
            csvio::fmt_f64(p.intensity),
            csvio::fmt_f64(p.group_velocity),
            csvio::fmt_f64(p.energy_transmission),
            p.error.as_deref().map(csvio::sanitize).unwrap_or_default()
        ));
    }
    out
}

/// Coated-cell medium at a given temperature and total beam intensity.
pub fn build_medium(
    cell: &CellConfig,
    temperature: f64,
    intensity: f64,
    repump: Option<&RepumpConfig>,
    options: MediumOptions,
) -> Result<CoatedCellMedium> {
    let mut c = cell.clone();
    c.temperature = temperature;
    c.beam.total_intensity = intensity;
    let density = match repump {
        Some(r) => crate::coated_cell::repumper_effective_density(
            c.isotope_density(crate::atomkit::Isotope::Rb87)?,
            r,
        )?,
        None => c.thermal_eit_density()?,
    };
    let p = c.eit_params(density)?;
    CoatedCellMedium::new(&p, &c, options)
}
