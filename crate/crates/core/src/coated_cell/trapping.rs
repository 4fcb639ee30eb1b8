//! Decoherence from reabsorbed scattered light.
//!
//! Atoms in the beam scatter photons at the rate
//!
//! ```text
//! R_sc(γ) = (Ω_P²/2)·Im χ(0)/A + Ω_C²Γ/(4Δ_off²)
//! ```
//!
//! The first term is the probe light absorbed at line centre by both
//! ensembles with ground widths widened by γ_rt (`A` is the coupling scale of
//! the susceptibility, so `Im χ/A` is per atom). The second is control light
//! scattered off the neighbouring excited hyperfine level. A share
//! `1 − exp(−β·OD)` of the scattered photons is reabsorbed in the cell and each
//! reabsorption randomizes the ground coherence of `κ` atoms. Spread over the
//! whole cell,
//!
//! ```text
//! γ_rt = κ·f_in·(1 − e^{−β·OD})·R_sc(γ_rt)
//! ```
//!
//! which is solved by fixed-point iteration.

use super::CellConfig;
use crate::atomkit;
use crate::error::{Error, Result};
use crate::lambda_solver::LambdaParams;

pub const TRAPPING_MAX_ITERATIONS: usize = 10_000;

/// Re(1/D) at two-photon resonance for ground width `gamma` and control Rabi
/// frequency `omega`, where χ = A·i/D.
fn line_centre_absorption(p: &LambdaParams, gamma: f64, omega: f64) -> f64 {
    if omega != 0.0 && gamma == 0.0 {
        // Ideal dark state.
        return 0.0;
    }
    let coupling = if omega == 0.0 { 0.0 } else { omega * omega / (4.0 * gamma) };
    let re = 0.5 * p.optical_width() + coupling;
    let im = p.one_photon_detuning;
    re / (re * re + im * im)
}

/// Right-hand side of the self-consistency relation for a trial γ_rt (rad/s).
/// `p.gamma_ground` is the intrinsic width.
pub fn trapping_map(p: &LambdaParams, cell: &CellConfig, gamma_rt: f64) -> f64 {
    let m = &atomkit::constants().model;
    let f_in = cell.in_beam_fraction();
    let narrow_weight = cell.narrow_weight(p.transition.delta_m).unwrap_or(0.0);
    let narrow = p.gamma_ground + gamma_rt;
    let pedestal = narrow + cell.transit_rate();
    let absorbed = (1.0 - narrow_weight) * line_centre_absorption(p, pedestal, p.omega_c)
        + narrow_weight * line_centre_absorption(p, narrow, p.omega_c * f_in.sqrt());
    let probe = 0.5 * p.omega_p * p.omega_p * absorbed;
    let off = p.omega_c * p.omega_c * p.gamma_excited
        / (4.0 * m.offresonant_level_detuning * m.offresonant_level_detuning);
    let reabsorbed = 1.0 - (-m.trapping_depth_scale * p.resonant_optical_depth()).exp();
    m.trapping_events_per_photon * f_in * reabsorbed * (probe + off)
}

/// Self-consistent radiation-trapping decoherence rate γ_rt, rad/s.
pub fn radiation_trapping_decoherence(p: &LambdaParams, cell: &CellConfig) -> Result<f64> {
    if !(p.density >= 0.0) || !(p.gamma_ground >= 0.0) {
        return Err(Error::Domain(
            "trapping needs a non-negative density and ground width".into(),
        ));
    }
    let mut g = 0.0;
    for _ in 0..TRAPPING_MAX_ITERATIONS {
        let next = trapping_map(p, cell, g);
        if !next.is_finite() {
            return Err(Error::Numerical {
                message: "radiation-trapping iteration produced a non-finite rate".into(),
                last_iterate: Some(g),
            });
        }
        if (next - g).abs() <= 1e-9 * next.abs() || next == 0.0 {
            return Ok(next);
        }
        g = next;
    }
    Err(Error::Numerical {
        message: format!(
            "radiation-trapping fixed point did not converge in {TRAPPING_MAX_ITERATIONS} iterations"
        ),
        last_iterate: Some(g),
    })
}
