use crate::error::{Error, Result};

/// Fraction of the peak above which samples must form one contiguous run.
const PEAK_BAND: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseMetrics {
    /// s, parabolic interpolation around the largest sample
    pub peak_time: f64,
    pub peak_intensity: f64,
    /// s, linear interpolation at the half-maximum crossings
    pub fwhm: f64,
    /// Trapezoidal ∫ I dt
    pub energy: f64,
}

/// Peak time, width and energy of a single-peaked intensity trace on a
/// uniform time grid.
pub fn pulse_metrics(times: &[f64], intensity: &[f64]) -> Result<PulseMetrics> {
    let n = times.len();
    if n != intensity.len() || n < 3 {
        return Err(Error::Metric("pulse needs at least 3 matching samples".into()));
    }
    if intensity.iter().any(|v| !v.is_finite()) {
        return Err(Error::Metric("pulse contains non-finite samples".into()));
    }
    let (imax, &peak) = intensity
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if !(peak > 0.0) {
        return Err(Error::Metric("pulse has no positive intensity".into()));
    }
    let band: Vec<usize> = (0..n).filter(|&i| intensity[i] >= PEAK_BAND * peak).collect();
    if band.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::Metric(
            "pulse is multi-peaked: samples near the maximum are not contiguous".into(),
        ));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;

    let peak_time = if imax > 0 && imax + 1 < n {
        let (a, b, c) = (intensity[imax - 1], intensity[imax], intensity[imax + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        times[imax] + shift.clamp(-0.5, 0.5) * dt
    } else {
        times[imax]
    };

    let half = 0.5 * peak;
    let mut lo = imax;
    while lo > 0 && intensity[lo - 1] > half {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < n && intensity[hi + 1] > half {
        hi += 1;
    }
    if lo == 0 || hi + 1 == n {
        return Err(Error::Metric("pulse does not fall to half maximum inside the window".into()));
    }
    let cross = |i: usize, j: usize| {
        let (yi, yj) = (intensity[i], intensity[j]);
        times[i] + (half - yi) / (yj - yi) * (times[j] - times[i])
    };
    let fwhm = cross(hi, hi + 1) - cross(lo - 1, lo);
    Ok(PulseMetrics {
        peak_time,
        peak_intensity: peak,
        fwhm,
        energy: (intensity.iter().sum::<f64>() - 0.5 * (intensity[0] + intensity[n - 1])) * dt,
    })
}
