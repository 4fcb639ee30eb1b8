use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};
use crate::fitlab::{self, FitResult};
use crate::pulsewave::Pulse;
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    None,
    Lorentzian,
    DualLorentzian,
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FitModel::None),
            "lorentzian" => Ok(FitModel::Lorentzian),
            "dual_lorentzian" | "dual" => Ok(FitModel::DualLorentzian),
            other => Err(Error::Validation(vec![format!(
                "unknown fit model '{other}', expected lorentzian or dual_lorentzian"
            )])),
        }
    }
}

/// A fit together with the data it was made to.
#[derive(Debug, Clone)]
pub struct FitArtifact {
    pub result: FitResult,
    pub x: Vec<f64>,
    pub y_data: Vec<f64>,
    pub y_fit: Vec<f64>,
    /// Name of the x column of the source data.
    pub x_label: String,
}

impl FitArtifact {
    pub(crate) fn new(model: FitModel, x: Vec<f64>, y: Vec<f64>, x_label: &str) -> Result<Self> {
        let result = match model {
            FitModel::Lorentzian => fitlab::fit_lorentzian_xy(&x, &y, None)?,
            FitModel::DualLorentzian => fitlab::fit_dual_lorentzian_xy(&x, &y, None)?,
            FitModel::None => return Err(Error::Fit("no fit model selected".into())),
        };
        let p = &result.values;
        let y_fit = x
            .iter()
            .map(|&xi| match model {
                FitModel::DualLorentzian => {
                    fitlab::lorentzian(xi, p[0], p[1], p[2], 0.0) + fitlab::lorentzian(xi, p[0], p[3], p[4], p[5])
                }
                _ => fitlab::lorentzian(xi, p[0], p[1], p[2], p[3]),
            })
            .collect();
        Ok(FitArtifact {
            result,
            x,
            y_data: y,
            y_fit,
            x_label: x_label.into(),
        })
    }

    /// FitResult header and row.
    pub fn result_csv(&self) -> String {
        format!("{}\n{}\n", self.result.csv_header(), self.result.csv_row())
    }

    /// `x,y_data,y_fit` rows.
    pub fn curve_csv(&self) -> String {
        let mut out = format!("{},y_data,y_fit\n", self.x_label);
        for ((x, y), f) in self.x.iter().zip(&self.y_data).zip(&self.y_fit) {
            out.push_str(&csvio::float_row(&[*x, *y, *f]));
        }
        out
    }
}

/// Fit a spectrum CSV (`detuning_Hz,…`) or pulse CSV (`time_s,intensity`).
pub fn fit_file(path: &Path, model: FitModel) -> Result<FitArtifact> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    fit_text(&text, model)
}

pub(crate) fn fit_text(text: &str, model: FitModel) -> Result<FitArtifact> {
    let table = csvio::Table::parse(text)?;
    match table.header.first().map(String::as_str) {
        Some("detuning_Hz") => {
            let s = Spectrum::from_csv(text)?;
            FitArtifact::new(model, s.detuning_hz().to_vec(), s.real_values(), "detuning_Hz")
        }
        Some("time_s") => {
            let p = Pulse::from_csv(text, "input")?;
            FitArtifact::new(model, p.times(), p.samples.clone(), "time_s")
        }
        other => Err(Error::Parse {
            line: 1,
            message: format!(
                "expected a spectrum (detuning_Hz,…) or pulse (time_s,intensity) header, found '{}'",
                other.unwrap_or_default()
            ),
        }),
    }
}
