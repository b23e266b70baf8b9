//! Runs the `upb` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use upb::config::RunConfig;
use upb::lindblad::blockade_kerr;
use upb::sweep::{dominant_period, read_records_csv, sweep_detuning};
use upb::units::mhz;

fn upb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_upb")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut all: Vec<String> = vec!["--out".into(), dir.display().to_string()];
    if let Some(text) = config {
        let path = dir.join("run.toml");
        std::fs::write(&path, text).unwrap();
        all.extend(["--config".into(), path.display().to_string()]);
    }
    all.extend(args.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = all.iter().map(String::as_str).collect();
    upb(&refs)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_unit_exits_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), Some("[device]\ninductance = \"1.09 nH\"\nsquid_inductance_zero_flux = 81e-12\n"), &["device"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("missing unit"), "{msg}");
}

#[test]
fn device_reports_kerr_and_crossing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), None, &["device"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("device.json")).unwrap()).unwrap();
    assert!((v["kerr_u_rad_s"].as_f64().unwrap() / mhz(0.25) - 1.0).abs() < 0.05);

    // minimum splitting is 2J up to the flux grid resolution
    let mut r = csv::Reader::from_path(tmp.path().join("flux_sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = r.records().map(|x| x.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
    let two_j = 2.0 * 25.1e6;
    let (k, min) = rows.iter().enumerate().map(|(k, row)| (k, row[4])).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let step = (rows[k + 1][1] - rows[k - 1][1]).abs() / 2.0;
    assert!(min >= two_j * (1.0 - 1e-9), "{min}");
    assert!(min <= (two_j * two_j + step * step).sqrt(), "{min} vs {two_j} with step {step}");
    assert!(tmp.path().join("device.manifest.json").exists());
}

#[test]
fn empty_grid_exits_0_with_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[g2_sweep]\npower = \"-107 dBm\"\ndelta_a = { start = \"0 MHz_over_2pi\", stop = \"1 MHz_over_2pi\", points = 0 }\n";
    let o = run_in(tmp.path(), Some(cfg), &["g2-sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("g2_sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn sweep_csv_matches_library_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_text = "[g2_sweep]\npower = \"-107 dBm\"\ndelta_a = { start = \"-6 MHz_over_2pi\", stop = \"6 MHz_over_2pi\", points = 7 }\n";
    let o = run_in(tmp.path(), Some(cfg_text), &["g2-sweep", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let from_file = read_records_csv(std::fs::File::open(tmp.path().join("g2_sweep.csv")).unwrap()).unwrap();
    let cfg = RunConfig::from_toml_str(cfg_text).unwrap();
    let p = cfg.system_params().unwrap().with_eta(cfg.eta_for_power(cfg.g2_sweep.power.value).unwrap());
    let direct = sweep_detuning(&p, &cfg.g2_sweep.delta_a.values(), cfg.g2_sweep_lock(), None, cfg.cutoffs()).unwrap();
    assert_eq!(from_file, direct.records);
}

#[test]
fn default_tau_curves_oscillate_at_40_ns() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), None, &["g2-tau"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(tmp.path().join("g2_tau.csv")).unwrap();
    let mut curves: Vec<(String, Vec<f64>)> = Vec::new();
    for row in r.records() {
        let row = row.unwrap();
        assert_eq!(&row[5], "ok");
        match curves.last_mut() {
            Some((d, v)) if d == &row[0] => v.push(row[3].parse().unwrap()),
            _ => curves.push((row[0].to_string(), vec![row[3].parse().unwrap()])),
        }
    }
    assert_eq!(curves.len(), 4);
    for (_, g2) in &curves {
        let period = dominant_period(g2, 1e-9, 5e6).unwrap();
        assert!((period / 40e-9 - 1.0).abs() < 0.05, "{period}");
    }
}

#[test]
fn envelope_reaches_blockade_without_thermal_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let u = blockade_kerr(mhz(8.0), mhz(25.0)) / mhz(1.0);
    let cfg = format!(
        "[system]\nj = \"25 MHz_over_2pi\"\nu = \"{u} MHz_over_2pi\"\nkappa_a = \"8 MHz_over_2pi\"\nkappa_b = \"8 MHz_over_2pi\"\n\
         kappa_b_range = [\"8 MHz_over_2pi\", \"8 MHz_over_2pi\"]\nn_th_a = 0.0\nn_th_b = 0.0\ncutoff = 4\n\
         [envelope]\neta = [\"0.05 MHz_over_2pi\"]\ngrid_points = 11\ng2_tol = 1e-6\nmax_iter = 400\n"
    );
    let o = run_in(tmp.path(), Some(&cfg), &["envelope"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(tmp.path().join("envelope.csv")).unwrap();
    let row = r.records().next().unwrap().unwrap();
    let g2: f64 = row[5].parse().unwrap();
    assert!(g2 < 0.05, "{g2}");
}

#[test]
fn measure_demo_is_deterministic_and_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let mut text = toml::to_string(&cfg).unwrap();
    text = text.replace("packets = 25", "packets = 10");
    let args = ["measure-demo", "--seed", "99", "--packet-size", "100000"];
    let first = run_in(tmp.path(), Some(&text), &args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert!(stderr(&first).contains("packets"));
    let a = std::fs::read(tmp.path().join("measure_demo.json")).unwrap();
    let second = run_in(tmp.path(), Some(&text), &["--workers", "3", "measure-demo", "--seed", "99", "--packet-size", "100000"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(a, std::fs::read(tmp.path().join("measure_demo.json")).unwrap());

    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(!v["warnings"].as_array().unwrap().is_empty());
    // the first built-in truth is coherent
    let z = v["results"][0]["pull"]["g2"].as_f64().unwrap();
    assert!(z.abs() < 3.0, "{z}");
}

#[test]
fn calibration_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), None, &["measure-demo", "--packet-size", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("calibration"));
}

#[test]
fn bad_flags_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), None, &["device", "--workers", "0"]).status.code(), Some(2));
    assert_eq!(upb(&["--config", "/nonexistent/upb.toml", "device"]).status.code(), Some(2));
    assert_eq!(upb(&["frobnicate"]).status.code(), Some(2));
}
