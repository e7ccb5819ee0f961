use std::sync::OnceLock;

use approx::assert_relative_eq;
use zml_core::harness::{
    self, lester_v, log_derivative_histogram, mean_square_integral, zero_proportion_check, Experiment, RunConfig,
    RunReport, WindowGrid,
};
use zml_core::selberg_dirichlet::AEvaluator;
use zml_core::zeta_core::{find_zeros, zeta, ZeroList};
use zml_core::{Complex64 as C64, Error};

fn desk() -> &'static RunReport {
    static R: OnceLock<RunReport> = OnceLock::new();
    R.get_or_init(|| harness::run(&RunConfig::levinson_desk()).unwrap())
}

#[test]
fn desk_run_gives_a_nontrivial_kappa() {
    let p = desk().principal.as_ref().unwrap();
    assert!(p.kappa_bound > 0.0 && p.kappa_bound < 1.0, "{}", p.kappa_bound);
    // frozen from a reference run
    assert_relative_eq!(p.integrals.i, 1.2404, max_relative = 1e-3);
    assert_relative_eq!(p.kappa_bound, 0.66856, max_relative = 1e-3);
    assert!(p.integrals.splitting.holds);
    assert!(p.integrals.eps_e == 0.0);
    let coarse = p.integrals.i_coarse.unwrap();
    assert!((p.integrals.i - coarse).abs() / p.integrals.i < 0.01);
    assert!(p.n00_estimate >= 0.0 && p.n00_estimate <= p.n_window + 1.0);
}

#[test]
fn report_json_round_trips() {
    let r = desk();
    let json = r.to_json().unwrap();
    let back: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_json_without_timing().unwrap(), r.to_json_without_timing().unwrap());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["schema", "experiment", "config", "principal", "mean_square", "timing"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["schema"], harness::REPORT_SCHEMA);
    assert_eq!(r.profile.len(), r.principal.as_ref().unwrap().grid.nodes);
    let mut csv = Vec::new();
    r.write_profile_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,f_re,f_im,l_abs,in_e"));
    assert_eq!(text.lines().count(), r.profile.len() + 1);
}

#[test]
fn reruns_are_identical() {
    let again = harness::run(&RunConfig::levinson_desk()).unwrap();
    assert_eq!(again.to_json_without_timing().unwrap(), desk().to_json_without_timing().unwrap());
}

#[test]
fn config_files_parse_and_reject_typos() {
    let c = RunConfig::levinson_desk();
    let text = serde_json::to_string(&c).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    let empty = RunConfig::from_json("{}").unwrap();
    assert_eq!(empty, RunConfig::default());
    assert!(matches!(RunConfig::from_json(r#"{"grid": {"lenght": 10}}"#), Err(Error::Config(_))));
    assert!(matches!(
        RunConfig::from_json(r#"{"toggles": {"exceptional": false, "runge": true}}"#),
        Err(Error::Config(_))
    ));
    assert!(RunConfig::from_json(r#"{"params": {"r": -1}}"#).is_err());
}

#[test]
fn short_default_run_with_every_stage() {
    let mut c = RunConfig::default();
    c.grid.length = 40.0;
    c.toggles.histogram = true;
    c.toggles.zero_check = true;
    let r = harness::run(&c).unwrap();
    let p = r.principal.unwrap();
    let e = p.exceptional.unwrap();
    assert!(e.eps_e >= 0.0 && e.eps_e <= 1.0);
    assert_relative_eq!(e.eps_e, p.integrals.eps_e, epsilon = 1e-12);
    assert!(p.integrals.splitting.holds);
    assert!(p.runge.is_some());
    assert!(p.histogram.is_some());
    let z = p.zero_check.unwrap();
    assert!(z.consistent);
    assert!(p.kappa_bound <= 1.0);
}

#[test]
fn a_is_finite_on_a_grid() {
    let p = zml_core::params::ExperimentParams::default();
    let a = AEvaluator::new(&p).unwrap();
    let v = a.eval_grid(&[1e4, 1e4 + 7.5, 1e4 + 31.0], &[]).unwrap();
    assert!(v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
}

#[test]
fn mean_square_without_mollifier_tends_to_zeta_3() {
    let (v, coarse) = mean_square_integral(1.5, None, 1e4, 1.1e4, 0.1).unwrap();
    let z3 = zeta(C64::new(3.0, 0.0)).unwrap().re;
    assert!((v - z3).abs() / z3 < 0.01, "{v} vs {z3}");
    assert!((v - coarse).abs() / v < 1e-3);
    assert!(mean_square_integral(1.5, None, 0.0, 0.3, 0.1).is_err());
}

#[test]
fn mean_square_desk_config_runs() {
    let mut c = RunConfig::mean_square_desk();
    c.mean_square.window = 1000.0;
    let r = harness::run(&c).unwrap();
    assert_eq!(r.experiment, Experiment::MeanSquare);
    let m = r.mean_square.unwrap();
    assert!(m.ratio > 0.0 && m.relative_gap < 0.5, "{m:?}");
    assert!(r.principal.is_none());
}

#[test]
fn log_derivative_values_follow_the_gaussian_law() {
    let t = 1e4;
    let grid = WindowGrid::new(t, t + 2000.0, 1.0).unwrap();
    let sigma = 0.5 + 3.0 / f64::ln(t);
    let h = log_derivative_histogram(&grid, sigma, Some(12)).unwrap();
    assert!(h.sup_distance < 0.15, "{}", h.sup_distance);
    assert_eq!(h.samples, grid.len());
    let v = lester_v(sigma).unwrap();
    assert!(v.v > 0.0 && v.tail < 1e-3 * v.v);
}

#[test]
fn zero_counts_agree() {
    for (lo, hi, n) in [(0.0, 100.0, 29), (1e4, 1e4 + 100.0, 118)] {
        let z = zero_proportion_check(lo, hi).unwrap();
        assert_eq!(z.n, n);
        assert_eq!(z.n0 as i64, z.n);
        assert!(z.consistent && z.ratio == 1.0);
    }
    assert!(zero_proportion_check(50.0, 10.0).is_err());
}

#[test]
fn zero_list_csv_round_trip() {
    let zs = find_zeros(10.0, 50.0).unwrap();
    assert_eq!(zs.len(), 10);
    assert!((zs.ordinates[0] - 14.134725141734693).abs() < 1e-6);
    let mut buf = Vec::new();
    zs.write_csv(&mut buf).unwrap();
    let back = ZeroList::read_csv(buf.as_slice(), zs.window).unwrap();
    assert_eq!(back.len(), zs.len());
    for (a, b) in back.ordinates.iter().zip(&zs.ordinates) {
        assert!((a - b).abs() <= 5e-9);
    }
}
