//! Lineshape fits and pulse metrology.
//!
//! Fits use a self-contained Levenberg–Marquardt loop with analytic
//! Jacobians. Parameter uncertainties are the square roots of the diagonal of
//! `s²·(JᵀJ)⁻¹` at the optimum, `s²` being the residual variance.

mod lm;
mod pulse;

use std::fmt::Write as _;

use crate::csvio;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

pub use lm::{levenberg_marquardt, LmOptions, LmOutcome};
pub use pulse::{pulse_metrics, PulseMetrics};

/// Width ratio below which two Lorentzians are not told apart.
pub const MIN_WIDTH_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Residual rms after each accepted step, starting with the initial guess.
    pub rms_history: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.uncertainties[i])
    }

    /// `key=value` lines, one per parameter and uncertainty.
    pub fn to_key_values(&self) -> String {
        let mut out = format!("model={}\n", self.model);
        for ((n, v), u) in self.names.iter().zip(&self.values).zip(&self.uncertainties) {
            let _ = writeln!(out, "{n}={}", csvio::fmt_f64(*v));
            let _ = writeln!(out, "{n}_err={}", csvio::fmt_f64(*u));
        }
        let _ = writeln!(out, "residual_rms={}", csvio::fmt_f64(self.residual_rms));
        let _ = writeln!(out, "converged={}", self.converged);
        let _ = writeln!(out, "iterations={}", self.iterations);
        out
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["model".to_string()];
        for n in &self.names {
            cols.push(n.clone());
            cols.push(format!("{n}_err"));
        }
        cols.push("residual_rms".into());
        cols.push("converged".into());
        cols.push("iterations".into());
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.model.clone()];
        for (v, u) in self.values.iter().zip(&self.uncertainties) {
            cols.push(csvio::fmt_f64(*v));
            cols.push(csvio::fmt_f64(*u));
        }
        cols.push(csvio::fmt_f64(self.residual_rms));
        cols.push(self.converged.to_string());
        cols.push(self.iterations.to_string());
        cols.join(",")
    }
}

/// offset + amplitude·h²/((x − c)² + h²), h = fwhm/2.
pub fn lorentzian(x: f64, center: f64, fwhm: f64, amplitude: f64, offset: f64) -> f64 {
    let h = 0.5 * fwhm;
    offset + amplitude * h * h / ((x - center) * (x - center) + h * h)
}

/// Value and gradient with respect to (center, fwhm, amplitude).
fn lorentzian_terms(x: f64, c: f64, w: f64, a: f64) -> (f64, [f64; 3]) {
    let h = 0.5 * w;
    let dx = x - c;
    let d = dx * dx + h * h;
    let shape = h * h / d;
    let d_center = a * h * h * 2.0 * dx / (d * d);
    let d_fwhm = a * h * dx * dx / (d * d);
    (a * shape, [d_center, d_fwhm, shape])
}

fn check_data(x: &[f64], y: &[f64], min_points: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if x.len() < min_points {
        return Err(Error::Fit(format!(
            "{} points given, at least {min_points} required",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("data contain non-finite values".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Fit("x values must be strictly increasing".into()));
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(Error::Fit("data are constant: there is no feature to fit".into()));
    }
    Ok(())
}

/// Initial (center, fwhm, amplitude, offset) from the extreme sample and its
/// half-level extent.
fn initial_guess(x: &[f64], y: &[f64]) -> [f64; 4] {
    let n = x.len();
    let edge = (n / 20).max(1);
    let offset = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>()) / (2 * edge) as f64;
    let (imax, _) = y
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 - offset).abs().total_cmp(&(b.1 - offset).abs()))
        .unwrap();
    let amplitude = y[imax] - offset;
    let half = offset + 0.5 * amplitude;
    let above = |v: f64| (v - half) * amplitude.signum() > 0.0;
    let mut lo = imax;
    while lo > 0 && above(y[lo - 1]) {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < n && above(y[hi + 1]) {
        hi += 1;
    }
    let span = x[n - 1] - x[0];
    let mut fwhm = x[hi] - x[lo];
    if !(fwhm > 0.0) {
        fwhm = (span / (n as f64)).max(span * 1e-3);
    }
    [x[imax], fwhm, amplitude, offset]
}

fn finish(model: &str, names: &[&str], o: LmOutcome, values: Vec<f64>) -> FitResult {
    FitResult {
        model: model.into(),
        names: names.iter().map(|s| s.to_string()).collect(),
        values,
        uncertainties: o.uncertainties,
        residual_rms: o.residual_rms,
        converged: o.converged,
        iterations: o.iterations,
        rms_history: o.rms_history,
    }
}

const SINGLE_NAMES: [&str; 4] = ["center_Hz", "fwhm_Hz", "amplitude", "offset"];
const DUAL_NAMES: [&str; 6] = [
    "center_Hz",
    "narrow_fwhm_Hz",
    "narrow_amplitude",
    "broad_fwhm_Hz",
    "broad_amplitude",
    "offset",
];

/// Single Lorentzian fit to raw samples. `guess` is (center, fwhm,
/// amplitude, offset); `None` initializes from the data.
pub fn fit_lorentzian_xy(x: &[f64], y: &[f64], guess: Option<[f64; 4]>) -> Result<FitResult> {
    check_data(x, y, 8)?;
    let g = guess.unwrap_or_else(|| initial_guess(x, y));
    let model = |p: &[f64], xi: f64, grad: &mut [f64]| -> f64 {
        let (v, d) = lorentzian_terms(xi, p[0], p[1], p[2]);
        grad[..3].copy_from_slice(&d);
        grad[3] = 1.0;
        v + p[3]
    };
    let o = levenberg_marquardt(&model, x, y, &g, LmOptions::default())?;
    let mut values = o.params.clone();
    values[1] = values[1].abs();
    Ok(finish("lorentzian", &SINGLE_NAMES, o, values))
}

/// Single Lorentzian fit to a spectrum (transmission, or Im χ).
pub fn fit_lorentzian(spectrum: &Spectrum) -> Result<FitResult> {
    fit_lorentzian_xy(spectrum.detuning_hz(), &spectrum.real_values(), None)
}

/// Dual-fit starting points: broad from the full-span half maximum and narrow
/// from the central 5% window, then a ladder of width ratios.
fn dual_starts(x: &[f64], y: &[f64]) -> Vec<[f64; 6]> {
    let [c, w, a, o] = initial_guess(x, y);
    let span = x[x.len() - 1] - x[0];
    let window: Vec<usize> = (0..x.len()).filter(|&i| (x[i] - c).abs() <= 0.025 * span).collect();
    let mut starts = Vec::new();
    if window.len() >= 5 {
        let xs: Vec<f64> = window.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = window.iter().map(|&i| y[i]).collect();
        let [_, wn, an, _] = initial_guess(&xs, &ys);
        if wn > 0.0 && wn * 3.0 <= w.max(0.1 * span) {
            starts.push([c, wn, an, w.max(3.0 * wn), a - an, o]);
        }
    }
    for (narrow, broad) in [(0.3, 2.0), (0.1, 1.5), (0.03, 1.2), (0.01, 1.1), (0.003, 1.05)] {
        starts.push([c, w * narrow, 0.3 * a, w * broad, 0.7 * a, o]);
    }
    starts
}

/// Two Lorentzians sharing a centre, ordered narrow first.
///
/// When the second component does not improve on a single Lorentzian the
/// result reduces to the single fit with zero narrow amplitude.
pub fn fit_dual_lorentzian_xy(x: &[f64], y: &[f64], guess: Option<[f64; 6]>) -> Result<FitResult> {
    check_data(x, y, 24)?;
    let model = |p: &[f64], xi: f64, grad: &mut [f64]| -> f64 {
        let (vn, dn) = lorentzian_terms(xi, p[0], p[1], p[2]);
        let (vb, db) = lorentzian_terms(xi, p[0], p[3], p[4]);
        grad[0] = dn[0] + db[0];
        grad[1] = dn[1];
        grad[2] = dn[2];
        grad[3] = db[1];
        grad[4] = db[2];
        grad[5] = 1.0;
        vn + vb + p[5]
    };
    let starts = match guess {
        Some(g) => vec![g],
        None => dual_starts(x, y),
    };
    let mut best: Option<LmOutcome> = None;
    for start in starts {
        if let Ok(o) = levenberg_marquardt(&model, x, y, &start, LmOptions::default()) {
            if best.as_ref().is_none_or(|b| o.residual_rms < b.residual_rms) {
                best = Some(o);
            }
        }
    }
    let mut o = best.ok_or_else(|| Error::Fit("no dual-Lorentzian start converged".into()))?;
    let mut p = o.params.clone();
    p[1] = p[1].abs();
    p[3] = p[3].abs();
    if p[1] > p[3] {
        p.swap(1, 3);
        p.swap(2, 4);
        o.uncertainties.swap(1, 3);
        o.uncertainties.swap(2, 4);
    }

    let single = fit_lorentzian_xy(x, y, None)?;
    let negligible = p[2].abs() < 1e-3 * p[4].abs();
    if negligible || o.residual_rms >= single.residual_rms * (1.0 - 1e-9) {
        let [c, w, a, off] = [single.values[0], single.values[1], single.values[2], single.values[3]];
        let narrow_width = if p[1] > 0.0 && p[1] < w { p[1] } else { 0.1 * w };
        let u = &single.uncertainties;
        return Ok(FitResult {
            model: "dual_lorentzian".into(),
            names: DUAL_NAMES.iter().map(|s| s.to_string()).collect(),
            values: vec![c, narrow_width, 0.0, w, a, off],
            uncertainties: vec![u[0], f64::INFINITY, f64::INFINITY, u[1], u[2], u[3]],
            residual_rms: single.residual_rms,
            converged: single.converged,
            iterations: single.iterations,
            rms_history: single.rms_history,
        });
    }
    if !(p[3] >= MIN_WIDTH_RATIO * p[1]) {
        return Err(Error::Fit(format!(
            "components are not separable: widths {:.4e} and {:.4e} differ by less than {MIN_WIDTH_RATIO}x",
            p[1], p[3]
        )));
    }
    Ok(finish("dual_lorentzian", &DUAL_NAMES, o, p))
}

pub fn fit_dual_lorentzian(spectrum: &Spectrum) -> Result<FitResult> {
    fit_dual_lorentzian_xy(spectrum.detuning_hz(), &spectrum.real_values(), None)
}
