//! Sampled spectra versus two-photon (or rf) detuning, and their CSV form.

use num_complex::Complex64;

use crate::csvio::{self, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Susceptibility,
    Transmission,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumValues {
    Susceptibility(Vec<Complex64>),
    Transmission(Vec<f64>),
}

impl SpectrumValues {
    pub fn len(&self) -> usize {
        match self {
            SpectrumValues::Susceptibility(v) => v.len(),
            SpectrumValues::Transmission(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Spectrum sampled on a strictly increasing detuning axis.
///
/// Detunings are stored in Hz (cyclic) so that the CSV form, which is in Hz,
/// round-trips bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    detuning_hz: Vec<f64>,
    values: SpectrumValues,
}

impl Spectrum {
    pub fn new(detuning_hz: Vec<f64>, values: SpectrumValues) -> Result<Self> {
        if detuning_hz.len() != values.len() {
            return Err(Error::Domain(format!(
                "spectrum axis has {} points but {} values",
                detuning_hz.len(),
                values.len()
            )));
        }
        if detuning_hz.len() < 3 {
            return Err(Error::Domain("a spectrum needs at least 3 points".into()));
        }
        if detuning_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("spectrum detunings must be strictly increasing".into()));
        }
        Ok(Spectrum { detuning_hz, values })
    }

    pub fn transmission(detuning_hz: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(detuning_hz, SpectrumValues::Transmission(values))
    }

    pub fn susceptibility(detuning_hz: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Self::new(detuning_hz, SpectrumValues::Susceptibility(values))
    }

    pub fn kind(&self) -> SpectrumKind {
        match self.values {
            SpectrumValues::Susceptibility(_) => SpectrumKind::Susceptibility,
            SpectrumValues::Transmission(_) => SpectrumKind::Transmission,
        }
    }

    pub fn detuning_hz(&self) -> &[f64] {
        &self.detuning_hz
    }

    pub fn values(&self) -> &SpectrumValues {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.detuning_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detuning_hz.is_empty()
    }

    pub fn susceptibility_values(&self) -> Option<&[Complex64]> {
        match &self.values {
            SpectrumValues::Susceptibility(v) => Some(v),
            SpectrumValues::Transmission(_) => None,
        }
    }

    /// Real-valued y data: transmission, or Im χ for a susceptibility.
    pub fn real_values(&self) -> Vec<f64> {
        match &self.values {
            SpectrumValues::Transmission(v) => v.clone(),
            SpectrumValues::Susceptibility(v) => v.iter().map(|c| c.im).collect(),
        }
    }

    /// Linear interpolation of a susceptibility at `hz`; `None` outside the hull.
    pub fn interpolate_susceptibility(&self, hz: f64) -> Option<Complex64> {
        let SpectrumValues::Susceptibility(v) = &self.values else {
            return None;
        };
        let x = &self.detuning_hz;
        if hz < x[0] || hz > x[x.len() - 1] {
            return None;
        }
        let i = match x.binary_search_by(|p| p.total_cmp(&hz)) {
            Ok(i) => return Some(v[i]),
            Err(i) => i,
        };
        let t = (hz - x[i - 1]) / (x[i] - x[i - 1]);
        Some(v[i - 1] * (1.0 - t) + v[i] * t)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.values {
            SpectrumValues::Transmission(v) => {
                out.push_str("detuning_Hz,transmission\n");
                for (x, y) in self.detuning_hz.iter().zip(v) {
                    out.push_str(&csvio::float_row(&[*x, *y]));
                }
            }
            SpectrumValues::Susceptibility(v) => {
                out.push_str("detuning_Hz,chi_real,chi_imag\n");
                for (x, y) in self.detuning_hz.iter().zip(v) {
                    out.push_str(&csvio::float_row(&[*x, y.re, y.im]));
                }
            }
        }
        out
    }

    /// Parse the two- or three-column spectrum CSV.
    pub fn from_csv(text: &str) -> Result<Spectrum> {
        let table = Table::parse(text)?;
        if table.header.first().map(String::as_str) != Some("detuning_Hz") {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected first column 'detuning_Hz', found '{}'",
                    table.header.first().cloned().unwrap_or_default()
                ),
            });
        }
        let x = table.floats(0)?;
        let spectrum = match table.header.len() {
            2 => Spectrum::transmission(x, table.floats(1)?),
            3 => {
                let re = table.floats(1)?;
                let im = table.floats(2)?;
                Spectrum::susceptibility(
                    x,
                    re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect(),
                )
            }
            n => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected 2 or 3 columns, found {n}"),
                })
            }
        };
        spectrum.map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })
    }
}

/// `n` uniformly spaced points on [-half_span, half_span].
pub fn symmetric_grid(half_span: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64)
        .collect()
}

/// `n` uniformly spaced points on [start, end].
pub fn linear_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_axes() {
        assert!(Spectrum::transmission(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Spectrum::transmission(vec![0.0, 1.0, 1.0], vec![1.0; 3]).is_err());
        assert!(Spectrum::transmission(vec![0.0, 1.0, 2.0], vec![1.0; 2]).is_err());
    }

    #[test]
    fn interpolation_inside_hull_only() {
        let s = Spectrum::susceptibility(
            vec![-1.0, 0.0, 1.0],
            vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)],
        )
        .unwrap();
        let mid = s.interpolate_susceptibility(0.5).unwrap();
        assert!((mid - Complex64::new(1.5, 0.5)).norm() < 1e-15);
        assert!(s.interpolate_susceptibility(1.5).is_none());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            start in -1e6f64..1e6,
            steps in proptest::collection::vec(1e-3f64..1e3, 3..40),
            seed in proptest::collection::vec(-1e3f64..1e3, 40),
            complex in any::<bool>(),
        ) {
            let mut x = vec![start];
            for s in &steps { let last = *x.last().unwrap(); x.push(last + s); }
            let n = x.len();
            let spectrum = if complex {
                let v = (0..n).map(|i| Complex64::new(seed[i % 40], seed[(i + 7) % 40] / 3.0)).collect();
                Spectrum::susceptibility(x, v).unwrap()
            } else {
                Spectrum::transmission(x, (0..n).map(|i| seed[i % 40] / 7.0).collect()).unwrap()
            };
            let text = spectrum.to_csv();
            let back = Spectrum::from_csv(&text).unwrap();
            prop_assert_eq!(&back, &spectrum);
            prop_assert_eq!(back.to_csv(), text);
        }
    }
}
