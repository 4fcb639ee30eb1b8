use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cellsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellsim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn preset_writes_csvs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eit");
    let o = cellsim(&["preset", "fig2b-eit", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["spectrum.csv", "fit.csv", "fit_curve.csv", "manifest.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let fit = fs::read_to_string(out.join("fit.csv")).unwrap();
    let header: Vec<&str> = fit.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = fit.lines().nth(1).unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == "fwhm_Hz").unwrap();
    let w: f64 = row[i].parse().unwrap();
    assert!((w - 50.0).abs() <= 2.5, "{w}");
}

#[test]
fn rerun_into_another_directory_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        let o = cellsim(&["preset", "fig3-dual", "--out", d, "--seed", "11"], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["spectrum.csv", "fit.csv", "fit_curve.csv", "manifest.toml"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let manifest = fs::read_to_string(dir.path().join("a/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 11"));
}

#[test]
fn replay_reproduces_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = cellsim(&["preset", "fig2a-dr", "--out", "dr"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = cellsim(&["replay", "dr/manifest.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn invalid_config_exits_2_listing_every_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        r#"
id = "bad"
pipeline = "pulse"
[cell]
radius_mm = 5.0
gradient_width_Hz = -3.0
[beam]
diameter_mm = 12.0
[lambda]
delta_m = 3
[pulse]
fwhm_us = 100.0
"#,
    )
    .unwrap();
    for sub in ["validate", "pulse"] {
        let o = cellsim(&[sub, "--config", "bad.toml"], dir.path());
        assert_eq!(code(&o), 2, "{sub}");
        let err = stderr(&o);
        for key in ["beam.diameter_mm", "cell.gradient_width_Hz", "lambda.delta_m"] {
            assert!(err.contains(key), "{sub}: {key} missing from {err}");
        }
    }
}

#[test]
fn valid_config_validates() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("ok.toml"),
        "id = \"ok\"\npipeline = \"pulse\"\n[pulse]\nfwhm_us = 100.0\n",
    )
    .unwrap();
    let o = cellsim(&["validate", "--config", "ok.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn io_and_parse_problems_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = cellsim(&["sweep", "--config", "missing.toml"], dir.path());
    assert_eq!(code(&o), 4);
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let o = cellsim(&["fit", "empty.csv"], dir.path());
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    fs::write(dir.path().join("typo.toml"), "id = \"t\"\npipeline = \"pulse\"\nseeed = 3\n").unwrap();
    let o = cellsim(&["validate", "--config", "typo.toml"], dir.path());
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("detuning_Hz,transmission\n");
    for k in 0..20 {
        text.push_str(&format!("{k},0.5\n"));
    }
    fs::write(dir.path().join("flat.csv"), text).unwrap();
    let o = cellsim(&["fit", "flat.csv", "--model", "lorentzian"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn unknown_preset_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cellsim(&["preset", "fig9"], dir.path())), 2);
    assert_eq!(code(&cellsim(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&cellsim(&["fit", "x.csv", "--model", "gaussian"], dir.path())), 2);
}

#[test]
fn sweep_table_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("vg.toml"),
        r#"
id = "vg"
pipeline = "sweep"
[beam]
control_intensity_mW_cm2 = 5.0
probe_intensity_mW_cm2 = 0.1
[[sweep.axis]]
name = "temperature_C"
values = [50.0, 75.0]
[[sweep.axis]]
name = "control_intensity_mW_cm2"
values = [2.0, 10.0, 40.0]
"#,
    )
    .unwrap();
    for (d, w) in [("one", "1"), ("four", "4")] {
        let o = cellsim(&["sweep", "--config", "vg.toml", "--out", d, "--workers", w], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fs::read_to_string(dir.path().join("one/sweep.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("four/sweep.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 7);
    assert!(a.starts_with("temperature_C,control_intensity_mW_cm2,group_delay_s,"));
}

#[test]
fn fit_subcommand_emits_annotated_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("detuning_Hz,transmission\n");
    for k in -100..=100 {
        let x = k as f64 * 2.0;
        let y = 1.0 - 0.3 * 121.0 / (x * x + 121.0);
        text.push_str(&format!("{x:e},{y:e}\n"));
    }
    fs::write(dir.path().join("dip.csv"), text).unwrap();
    let o = cellsim(&["fit", "dip.csv", "--out", "fitted"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let curve = fs::read_to_string(dir.path().join("fitted/fit_curve.csv")).unwrap();
    assert!(curve.starts_with("detuning_Hz,y_data,y_fit\n"));
    assert_eq!(curve.lines().count(), 202);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("fwhm_Hz"));
}
