use proptest::prelude::*;

use super::*;
use crate::atomkit::BeamConfig;

fn cell(diameter_mm: f64, intensity: f64) -> CellConfig {
    CellConfig {
        cell_radius: 0.01,
        cell_length: 0.05,
        temperature: 48.0,
        beam: BeamConfig {
            diameter: diameter_mm * 1e-3,
            total_intensity: intensity,
            probe_to_control_ratio: 0.05,
        },
        wall_survival: 1.0 - 1e-4,
        field_gradient_width: 12.0,
        species_mix: CellConfig::natural_mix(),
        narrow_weight: None,
    }
}

fn params(c: &CellConfig) -> LambdaParams {
    c.eit_params(c.thermal_eit_density().unwrap()).unwrap()
}

#[test]
fn transit_linewidth_scales_with_beam_and_temperature() {
    let a = transit_linewidth(&cell(2.0, 1.0)).unwrap();
    let b = transit_linewidth(&cell(4.0, 1.0)).unwrap();
    assert!((a / b - 2.0).abs() < 1e-12);
    let mut hot = cell(2.0, 1.0);
    hot.temperature = 4.0 * (48.0 + 273.15) - 273.15;
    // T is outside the vapor table but the speed is still defined.
    let v_ratio = hot.thermal_speed() / cell(2.0, 1.0).thermal_speed();
    assert!((v_ratio - 2.0).abs() < 1e-12);
}

#[test]
fn wall_contribution_is_small_for_good_coating() {
    assert!(cell(4.5, 1.0).wall_decoherence_rate() < 1.0);
}

#[test]
fn monte_carlo_matches_kinetic_theory() {
    let c = cell(4.5, 1.0);
    let s = simulate_trajectories(&c, 1500, 7).unwrap();
    let f = c.in_beam_fraction();
    assert!((s.in_beam_fraction - f).abs() < 3.0 * s.in_beam_fraction_stderr + 0.02 * f);
    let rel = |x: f64, y: f64| (x / y - 1.0).abs();
    assert!(rel(s.mean_in_beam_time, c.mean_crossing_time()) < 0.05, "{s:?}");
    assert!(rel(s.mean_dark_time, c.mean_dark_time()) < 0.10, "{s:?}");
    let total: f64 = s.bounce_count_histogram.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    // A straight path cannot re-enter a convex beam without a wall bounce.
    assert_eq!(s.bounce_count_histogram[0], 0.0);
    assert!(s.bounce_count_histogram[1] > 0.0);
}

#[test]
fn pedestal_tracks_monte_carlo_transit_width() {
    let c = cell(4.5, 0.01);
    let s = simulate_trajectories(&c, 600, 3).unwrap();
    let m = CoatedCellMedium::new(&params(&c), &c, MediumOptions::default()).unwrap();
    let ratio = m.pedestal_fwhm_hz() / s.transit_width_hz();
    assert!((ratio - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn monte_carlo_is_worker_independent() {
    let c = cell(3.0, 1.0);
    let one = simulate_trajectories_with_workers(&c, 200, 99, Some(1)).unwrap();
    let three = simulate_trajectories_with_workers(&c, 200, 99, Some(3)).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.to_csv(), three.to_csv());
}

#[test]
fn dark_time_mean_stable_under_more_atoms() {
    let c = cell(4.5, 1.0);
    let a = simulate_trajectories(&c, 400, 11).unwrap();
    let b = simulate_trajectories(&c, 800, 12).unwrap();
    let sigma = (a.mean_dark_time_stderr.powi(2) + b.mean_dark_time_stderr.powi(2)).sqrt();
    assert!((a.mean_dark_time - b.mean_dark_time).abs() < 3.0 * sigma);
}

#[test]
fn monte_carlo_rejects_zero_atoms() {
    assert!(matches!(simulate_trajectories(&cell(4.5, 1.0), 0, 1), Err(Error::Domain(_))));
}

#[test]
fn uncoated_cell_has_no_narrow_peak() {
    let mut c = cell(4.5, 1.0);
    c.wall_survival = 0.0;
    assert!(c.narrow_weight(2).unwrap() < 0.01);
    let s = simulate_trajectories(&c, 200, 5).unwrap();
    assert!(narrow_weight_from_transits(&s, &c) < 0.01);
}

#[test]
fn monte_carlo_weight_agrees_with_analytic_estimate() {
    let c = cell(4.5, 1.0);
    let s = simulate_trajectories(&c, 1000, 21).unwrap();
    let mc = narrow_weight_from_transits(&s, &c);
    let analytic = c.narrow_weight(2).unwrap();
    assert!((mc / analytic - 1.0).abs() < 0.05, "mc {mc} analytic {analytic}");
}

#[test]
fn component_widths_respect_their_floors() {
    for (d, i) in [(2.0, 0.05), (4.5, 3.5), (8.0, 10.0)] {
        let c = cell(d, i);
        let p = params(&c);
        let m = CoatedCellMedium::new(&p, &c, MediumOptions::default()).unwrap();
        assert!(m.narrow_fwhm_hz() >= 2.0 * p.gamma_ground / (2.0 * PI));
        assert!(m.pedestal_fwhm_hz() >= transit_linewidth(&c).unwrap());
        assert!(m.pedestal_fwhm_hz() > m.narrow_fwhm_hz());
    }
}

#[test]
fn feature_area_is_weighted_sum_of_components() {
    let c = cell(4.5, 3.5);
    let m = CoatedCellMedium::new(&params(&c), &c, MediumOptions::default()).unwrap();
    let grid = crate::spectrum::symmetric_grid(2e5, 4001);
    let area = |f: &dyn Fn(f64) -> f64| -> f64 {
        let far = f(2.0 * PI * 1e9);
        grid.windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (far - f(2.0 * PI * w[0]) + far - f(2.0 * PI * w[1])))
            .sum()
    };
    let chi = |q: &LambdaParams, d: f64| {
        lambda_solver::steady_state_susceptibility(&q.with_two_photon_detuning(d)).unwrap().im
    };
    let total = area(&|d| m.susceptibility(d).unwrap().im);
    let parts = m.pedestal_weight * area(&|d| chi(&m.pedestal, d))
        + m.narrow_weight * area(&|d| chi(&m.narrow, d));
    assert!(((total - parts) / total).abs() < 1e-9);
}

#[test]
fn dual_spectrum_needs_wide_grid() {
    let c = cell(4.5, 3.5);
    let p = params(&c);
    let narrow = crate::spectrum::symmetric_grid(500.0, 101);
    assert!(matches!(
        dual_structure_spectrum(&c, &p, &narrow, MediumOptions::default()),
        Err(Error::Range(_))
    ));
    let wide = crate::spectrum::symmetric_grid(1e5, 401);
    let s = dual_structure_spectrum(&c, &p, &wide, MediumOptions::default()).unwrap();
    let t = s.real_values();
    assert!(t[200] > t[150] && t[150] > t[0]);
}

#[test]
fn trapping_vanishes_without_atoms() {
    let c = cell(4.5, 3.5);
    let mut p = params(&c);
    p.density = 0.0;
    assert_eq!(radiation_trapping_decoherence(&p, &c).unwrap(), 0.0);
}

#[test]
fn trapping_matches_bisection_oracle() {
    for (t, i) in [(48.0, 0.1), (60.0, 3.5), (75.0, 10.0)] {
        let mut c = cell(4.5, i);
        c.temperature = t;
        let p = params(&c);
        let fixed = radiation_trapping_decoherence(&p, &c).unwrap();
        let (mut lo, mut hi) = (0.0, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if trapping_map(&p, &c, mid) > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((fixed - lo).abs() <= 1e-6 * fixed.max(1e-300) + 1e-12, "{fixed} vs {lo}");
    }
}

#[test]
fn trapping_grows_with_density() {
    let c = cell(4.5, 3.5);
    let mut p = params(&c);
    let mut last = 0.0;
    for n in [1e9, 1e10, 1e11, 1e12] {
        p.density = n;
        let g = radiation_trapping_decoherence(&p, &c).unwrap();
        assert!(g > last);
        last = g;
    }
}

#[test]
fn repump_limits() {
    let n = 1e11;
    let none = repumper_effective_density(n, &RepumpConfig::rb87(0.0)).unwrap();
    assert!((none / n - 5.0 / 8.0).abs() < 1e-12);
    let full = repumper_effective_density(n, &RepumpConfig::rb87(1e12)).unwrap();
    assert!((full / n - 1.0).abs() < 1e-9);
    assert!(repumper_effective_density(-1.0, &RepumpConfig::rb87(1.0)).is_err());
}

proptest! {
    #[test]
    fn repump_density_is_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let f = |i| repumper_effective_density(1e11, &RepumpConfig::rb87(i)).unwrap();
        prop_assert!(f(lo) <= f(hi));
    }

    #[test]
    fn medium_transmission_is_bounded(
        d in 1.0f64..10.0, i in 0.0f64..20.0, t in 30.0f64..90.0, hz in -1e5f64..1e5,
    ) {
        let mut c = cell(d, i);
        c.temperature = t;
        let m = CoatedCellMedium::new(&params(&c), &c, MediumOptions::default()).unwrap();
        let tr = m.transmission(2.0 * PI * hz).unwrap();
        prop_assert!(tr > 0.0 && tr <= 1.0);
    }
}
