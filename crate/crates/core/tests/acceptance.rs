//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cellsim::coated_cell::{simulate_trajectories, dual_structure_spectrum, CoatedCellMedium, MediumOptions};
use cellsim::csvio::Table;
use cellsim::fitlab::{self, lorentzian};
use cellsim::lambda_solver::{self, integrate_bloch, BlochOptions, DensityMatrix, LambdaParams};
use cellsim::pulsewave::{build_medium, LambdaMedium, TransferFunction};
use cellsim::scenario::{self, preset, run_scenario, ArtifactSet, Axis, RunOptions, ScenarioConfig, PRESET_NAMES};
use cellsim::spectrum::symmetric_grid;

type Check = Result<(bool, String), String>;
type Criterion = (&'static str, u64, fn() -> Check);

fn run(config: &ScenarioConfig) -> Result<ArtifactSet, String> {
    run_scenario(config, &RunOptions::default()).map_err(|e| e.to_string())
}

fn run_preset(name: &str) -> Result<ArtifactSet, String> {
    run(&preset(name).map_err(|e| e.to_string())?)
}

fn table(set: &ArtifactSet, file: &str) -> Result<Table, String> {
    Table::parse(set.get(file).ok_or(format!("no {file}"))?).map_err(|e| e.to_string())
}

/// Column as floats; empty fields (failed cells) become NaN.
fn column(t: &Table, name: &str) -> Result<Vec<f64>, String> {
    let i = t.column(name).ok_or(format!("no column {name}"))?;
    Ok(t.rows.iter().map(|(_, r)| r[i].parse().unwrap_or(f64::NAN)).collect())
}

fn fit_value(set: &ArtifactSet, name: &str) -> Result<f64, String> {
    let t = table(set, "fit.csv")?;
    column(&t, name)?.first().copied().ok_or("empty fit.csv".into())
}

fn distinct(v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// x positions of interior local maxima of y.
fn local_maxima(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..y.len().saturating_sub(1))
        .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1])
        .map(|k| x[k])
        .collect()
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn max_finite(v: impl Iterator<Item = f64>) -> f64 {
    v.filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max)
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn calibration_anchors() -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, target) in [("fig2a-dr", 22.0), ("fig2b-eit", 50.0)] {
        let t = Instant::now();
        let w = fit_value(&run_preset(name)?, "fwhm_Hz")?;
        let dt = t.elapsed();
        let pass = (w / target - 1.0).abs() <= 0.05 && dt < Duration::from_secs(5);
        ok &= pass;
        detail.push(format!("{name} fwhm {w:.2} Hz (target {target}) in {dt:.2?}"));
    }
    Ok((ok, detail.join("; ")))
}

fn dual_structure() -> Check {
    let set = run_preset("fig3-dual")?;
    let narrow = fit_value(&set, "narrow_fwhm_Hz")?;
    let broad = fit_value(&set, "broad_fwhm_Hz")?;
    let ok = within(broad, 6500.0, 19500.0) && within(narrow, 175.0, 525.0);
    Ok((ok, format!("pedestal {broad:.0} Hz, narrow {narrow:.1} Hz")))
}

fn delay_regimes() -> Check {
    let t = table(&run_preset("fig4-delay")?, "sweep.csv")?;
    let intensity = column(&t, "total_intensity_mW_cm2")?;
    let width = column(&t, "pulse_fwhm_us")?;
    let fd = column(&t, "fractional_delay")?;
    let levels = distinct(&intensity);
    let hi = levels.iter().cloned().fold(f64::MIN, f64::max);
    let lo = levels.iter().cloned().fold(f64::MAX, f64::min);
    let maxima = |level: f64| {
        let idx: Vec<usize> = (0..intensity.len()).filter(|&k| intensity[k] == level).collect();
        let x: Vec<f64> = idx.iter().map(|&k| width[k]).collect();
        let y: Vec<f64> = idx.iter().map(|&k| fd[k]).collect();
        local_maxima(&x, &y)
    };
    let (mh, ml) = (maxima(hi), maxima(lo));
    let ok = mh.iter().any(|&w| within(w, 3.0, 30.0)) && ml.iter().any(|&w| within(w, 1000.0, 20000.0));
    Ok((ok, format!("local maxima (us): {hi} mW/cm2 {mh:.1?}; {lo} mW/cm2 {ml:.0?}")))
}

fn delay_ceiling() -> Check {
    let mut c = preset("fig4-delay").map_err(|e| e.to_string())?;
    let axis = |name: &str, values: Vec<f64>| Axis {
        name: name.into(),
        values: Some(values),
        from: None,
        to: None,
        points: None,
        log: false,
    };
    let sweep = c.sweep.as_mut().ok_or("fig4-delay has no sweep")?;
    let widths = sweep.axis.iter().find(|a| a.name == "pulse_fwhm_us").cloned().ok_or("no width axis")?;
    sweep.axis = vec![
        axis("radiation_trapping", vec![1.0, 0.0]),
        axis("temperature_C", vec![50.0, 55.0, 60.0, 65.0, 70.0, 75.0]),
        axis("total_intensity_mW_cm2", vec![1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0]),
        widths,
    ];
    let t = table(&run(&c)?, "sweep.csv")?;
    let trap = column(&t, "radiation_trapping")?;
    let fd = column(&t, "fractional_delay")?;
    let trapped = max_finite((0..fd.len()).filter(|&k| trap[k] == 1.0).map(|k| fd[k]));
    let free = max_finite((0..fd.len()).filter(|&k| trap[k] == 0.0).map(|k| fd[k]));
    let ok = trapped <= 0.35 && free >= 1.2 * trapped;
    Ok((
        ok,
        format!("{} cells; trapped max {trapped:.4}, untrapped max {free:.4} (x{:.2})", fd.len(), free / trapped),
    ))
}

fn group_velocity_scaling() -> Check {
    let t = table(&run_preset("fig6-vg")?, "sweep.csv")?;
    let temp = column(&t, "temperature_C")?;
    let intensity = column(&t, "control_intensity_mW_cm2")?;
    let vg = column(&t, "group_velocity_m_s")?;
    let et = column(&t, "energy_transmission")?;
    let temps = distinct(&temp);
    let lo = temps.iter().cloned().fold(f64::MAX, f64::min);
    let hi = temps.iter().cloned().fold(f64::MIN, f64::max);
    let at = |level: f64| -> Vec<usize> { (0..temp.len()).filter(|&k| temp[k] == level).collect() };
    let cold = at(lo);
    let x: Vec<f64> = cold.iter().map(|&k| intensity[k]).collect();
    let y: Vec<f64> = cold.iter().map(|&k| vg[k]).collect();
    let r2 = r_squared(&x, &y);
    let hot = at(hi);
    let v: Vec<f64> = hot.iter().map(|&k| vg[k]).collect();
    let argmin = (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).ok_or("empty table")?;
    let non_monotone = argmin > 0 && argmin + 1 < v.len();
    let upturn_dark = hot[..argmin].iter().all(|&k| et[k] < 0.5);
    let ok = r2 >= 0.99 && non_monotone && upturn_dark && v.iter().all(|x| x.is_finite());
    Ok((
        ok,
        format!(
            "R2 {r2:.4} at {lo} C; at {hi} C v_g minimum at {} mW/cm2, upturn energy_transmission {:.3?}",
            intensity[hot[argmin]],
            hot[..argmin].iter().map(|&k| et[k]).collect::<Vec<_>>()
        ),
    ))
}

fn repumper() -> Check {
    let t = table(&run_preset("fig5-repump")?, "sweep.csv")?;
    let temp = column(&t, "temperature_C")?;
    let repump = column(&t, "repump_intensity_mW_cm2")?;
    let fd = column(&t, "fractional_delay")?;
    let temps = distinct(&temp);
    let boost = |level: f64| {
        let best = |on: bool| max_finite((0..fd.len()).filter(|&k| temp[k] == level && (repump[k] > 0.0) == on).map(|k| fd[k]));
        best(true) / best(false)
    };
    let lo = temps.iter().cloned().fold(f64::MAX, f64::min);
    let hi = temps.iter().cloned().fold(f64::MIN, f64::max);
    let (b_lo, b_hi) = (boost(lo), boost(hi));
    let ok = within(b_lo, 1.4, 2.2) && b_hi < b_lo;
    Ok((ok, format!("boost {b_lo:.3} at {lo} C, {b_hi:.3} at {hi} C")))
}

fn bloch_case(rng: &mut ChaCha8Rng) -> LambdaParams {
    let mut p = LambdaParams::rb87(rng.random_range(0.4..1.5), rng.random_range(0.03..0.2), 1e10, 0.05);
    p.gamma_excited = 1.0;
    p.omega_p = 1e-5;
    p.one_photon_detuning = rng.random_range(-0.5..0.5);
    p.two_photon_detuning = rng.random_range(-0.1..0.1);
    p
}

fn bloch_oracle() -> Result<(bool, String), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = bloch_case(&mut rng);
        let opts = BlochOptions { step: None, samples: 2 };
        let traj = integrate_bloch(&p, 60.0 / p.gamma_ground, &DensityMatrix::ground(0), opts).map_err(|e| e.to_string())?;
        let chi_ode = traj.last().probe_coherence() * (2.0 * p.coupling_scale() / p.omega_p);
        let chi = lambda_solver::steady_state_susceptibility(&p).map_err(|e| e.to_string())?;
        worst = worst.max((chi_ode - chi).norm() / chi.norm());
    }
    Ok((worst <= 1e-6, format!("Bloch worst rel {worst:.1e}")))
}

fn monte_carlo_oracle() -> Result<(bool, String), String> {
    let cell = preset("fig3-dual").and_then(|c| c.resolve()).map_err(|e| e.to_string())?.cell;
    let s = simulate_trajectories(&cell, 100_000, 17).map_err(|e| e.to_string())?;
    let f = cell.in_beam_fraction();
    let z = (s.in_beam_fraction - f) / s.in_beam_fraction_stderr;
    Ok((z.abs() <= 3.0, format!("MC in-beam {:.5} vs {f:.5} ({z:+.2} sigma)", s.in_beam_fraction)))
}

/// Richardson-extrapolated central difference of arg H at line centre.
fn phase_slope_fd(h: &dyn Fn(f64) -> Complex64, step: f64) -> f64 {
    let d = |s: f64| (h(s) / h(-s)).arg() / (2.0 * s);
    (4.0 * d(step / 2.0) - d(step)) / 3.0
}

fn phase_slope_oracle() -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for (name, trapping) in [("fig3-dual", true), ("fig2b-eit", true), ("fig4-delay", true), ("fig4-delay", false)] {
        let pt = preset(name).and_then(|c| c.resolve()).map_err(|e| e.to_string())?;
        for intensity in [1.0, 30.0] {
            let m: CoatedCellMedium = build_medium(
                &pt.cell,
                pt.cell.temperature,
                intensity,
                None,
                MediumOptions { radiation_trapping: trapping },
            )
            .map_err(|e| e.to_string())?;
            let tau = m.group_delay().map_err(|e| e.to_string())?;
            let fd = phase_slope_fd(&|w| m.field_response(w).unwrap(), 1e-2 * m.narrow.transparency_half_width());
            worst = worst.max((fd / tau - 1.0).abs());
            let lm = LambdaMedium(m.pedestal.clone());
            let tau = TransferFunction::group_delay(&lm).map_err(|e| e.to_string())?;
            let fd = phase_slope_fd(&|w| lm.response(w).unwrap(), 1e-2 * m.pedestal.transparency_half_width());
            worst = worst.max((fd / tau - 1.0).abs());
        }
    }
    Ok((worst <= 1e-6, format!("phase slope worst rel {worst:.1e}")))
}

fn fit_suites() -> Result<(bool, String), String> {
    let x = symmetric_grid(200.0, 401);
    let y: Vec<f64> = x.iter().map(|&v| lorentzian(v, 0.0, 22.0, -0.3, 1.0)).collect();
    let w = fitlab::fit_lorentzian_xy(&x, &y, None).map_err(|e| e.to_string())?.get("fwhm_Hz").unwrap();
    let clean = (w / 22.0 - 1.0).abs();

    let noise = Normal::new(0.0, 0.02).unwrap();
    let good = (0..50u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = x.iter().map(|&v| lorentzian(v, 0.0, 22.0, 1.0, 0.0) + noise.sample(&mut rng)).collect();
            fitlab::fit_lorentzian_xy(&x, &y, None)
                .ok()
                .and_then(|f| f.get("fwhm_Hz"))
                .is_some_and(|w| (w / 22.0 - 1.0).abs() < 0.02)
        })
        .count();

    let xd = symmetric_grid(60000.0, 4001);
    let yd: Vec<f64> = xd
        .iter()
        .map(|&v| lorentzian(v, 0.0, 350.0, 0.2, 0.5) + lorentzian(v, 0.0, 13000.0, 0.2, 0.0))
        .collect();
    let f = fitlab::fit_dual_lorentzian_xy(&xd, &yd, None).map_err(|e| e.to_string())?;
    let dual = (f.get("narrow_fwhm_Hz").unwrap() / 350.0 - 1.0)
        .abs()
        .max((f.get("broad_fwhm_Hz").unwrap() / 13000.0 - 1.0).abs());

    let pt = preset("fig3-dual").and_then(|c| c.resolve()).map_err(|e| e.to_string())?;
    let p = pt.cell.eit_params(pt.cell.thermal_eit_density().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let m = CoatedCellMedium::new(&p, &pt.cell, pt.options).map_err(|e| e.to_string())?;
    let s = dual_structure_spectrum(&pt.cell, &p, &symmetric_grid(5e4, 4001), pt.options).map_err(|e| e.to_string())?;
    let widths_err = |f: &fitlab::FitResult| {
        (f.get("narrow_fwhm_Hz").unwrap() / m.narrow_fwhm_hz() - 1.0)
            .abs()
            .max((f.get("broad_fwhm_Hz").unwrap() / m.pedestal_fwhm_hz() - 1.0).abs())
    };
    let absorbance: Vec<f64> = s.real_values().iter().map(|t| -t.ln()).collect();
    let f = fitlab::fit_dual_lorentzian_xy(s.detuning_hz(), &absorbance, None).map_err(|e| e.to_string())?;
    let round_trip = widths_err(&f);
    let raw = widths_err(&fitlab::fit_dual_lorentzian(&s).map_err(|e| e.to_string())?);

    let ok = clean <= 1e-6 && good >= 48 && dual <= 1e-3 && round_trip <= 0.05;
    Ok((
        ok,
        format!("fit: 22 Hz rel {clean:.0e}, noise {good}/50, dual rel {dual:.0e}, round trip rel {round_trip:.0e} (raw transmission {raw:.3})"),
    ))
}

fn oracle_suites() -> Check {
    let parts = [bloch_oracle()?, monte_carlo_oracle()?, phase_slope_oracle()?, fit_suites()?];
    let ok = parts.iter().all(|(ok, _)| *ok);
    Ok((ok, parts.iter().map(|(_, d)| d.as_str()).collect::<Vec<_>>().join("; ")))
}

fn determinism() -> Check {
    let mut failures = Vec::new();
    for name in PRESET_NAMES {
        let first = run_preset(name)?;
        let second = run_preset(name)?;
        if first.files != second.files {
            failures.push(format!("{name}: rerun differs"));
        }
        let manifest = first.get("manifest.toml").ok_or("no manifest")?;
        if let Err(e) = scenario::replay_manifest(manifest, &RunOptions { workers: Some(2) }) {
            failures.push(format!("{name}: replay failed: {e}"));
        }
    }
    let ok = failures.is_empty();
    let detail = if ok { format!("{} presets rerun and replayed byte-identically", PRESET_NAMES.len()) } else { failures.join("; ") };
    Ok((ok, detail))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("calibration anchors", 10, calibration_anchors),
        ("dual structure", 10, dual_structure),
        ("two delay regimes", 120, delay_regimes),
        ("delay ceiling", 300, delay_ceiling),
        ("group-velocity scaling", 120, group_velocity_scaling),
        ("repumper", 60, repumper),
        ("oracle suites", 180, oracle_suites),
        ("determinism", 600, determinism),
    ];
    let mut failed = 0;
    for (n, (title, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let dt = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && dt < Duration::from_secs(limit), detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {title}: {} ({detail}) [{dt:.1?} of {limit} s]",
            n + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of 8 criteria pass", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
