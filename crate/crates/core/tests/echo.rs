use std::f64::consts::PI;

use spinmech::inhomogeneity::{
    echo_diffusion_shape, echo_g, echo_monte_carlo, echo_sigma_sq, run_echo_protocol, sigma_dphi_sq, tolerances,
};
use spinmech::params::{MeasurementParams, ProtocolConfig, SystemParams, Threshold, PRESETS};

fn low_q() -> (SystemParams<f64>, MeasurementParams<f64>) {
    (SystemParams::from_lab_units(10e-3, 1e6, 880.0, 293.0).unwrap(), MeasurementParams::with_delta_m_sq(27.0))
}

/// Variance of ∫ sign(t) x(t) dt for a zero-start OU quadrature with
/// dx = −(κ/2)x dt + √(κ n_th) dW, by numerical double integration of the
/// covariance kernel.
fn ou_signed_integral_variance(kappa: f64, n_th: f64, t: f64) -> f64 {
    let theta = kappa / 2.0;
    let d = kappa * n_th;
    let cov = |s: f64, u: f64| {
        let (lo, hi) = if s < u { (s, u) } else { (u, s) };
        d / (2.0 * theta) * ((-theta * (hi - lo)).exp() - (-theta * (hi + lo)).exp())
    };
    let n = 800;
    let h = t / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let s = (i as f64 + 0.5) * h;
        let ss = if s < t / 2.0 { 1.0 } else { -1.0 };
        for j in 0..n {
            let u = (j as f64 + 0.5) * h;
            let su = if u < t / 2.0 { 1.0 } else { -1.0 };
            acc += ss * su * cov(s, u);
        }
    }
    acc * h * h
}

#[test]
fn closed_form_is_twice_the_ou_integral_variance() {
    let (p, _) = low_q();
    let t = 0.1 / p.kappa();
    let dl = 0.1;
    let quad = ou_signed_integral_variance(p.kappa(), p.n_thermal(), t);
    let phase = (4.0 * 2f64.sqrt() / PI * dl).powi(2) * quad;
    let formula = sigma_dphi_sq(&p, dl, t).exact;
    assert!((phase / formula - 0.5).abs() < 1e-3, "{phase} vs {formula}");
}

#[test]
fn echo_phase_variance_matches_ou_simulation() {
    let (p, m) = low_q();
    let t = 0.1 / p.kappa();
    let cfg = ProtocolConfig::new(Threshold::Finite(0.4), t).unwrap().echo();
    let s = echo_monte_carlo(&p, &m, &cfg, 0.1, 100_000, 5).unwrap();
    let expected = 0.5 * s.predicted_phase_variance;
    assert!((s.phase_variance - expected).abs() < 4.0 * s.phase_variance_std_error);
}

#[test]
fn echo_shape_small_argument() {
    for u in [1e-4f64, 1e-2] {
        assert!((echo_diffusion_shape(u) / (u * u * u / 48.0) - 1.0).abs() < u);
    }
}

#[test]
fn echo_window_acceptance_for_dfs() {
    let (p, m) = low_q();
    let t = 3e-3;
    let cfg = ProtocolConfig::new(Threshold::Finite(0.4), t).unwrap().echo();
    let s = echo_monte_carlo(&p, &m, &cfg, 0.0, 100_000, 11).unwrap();
    // Window α·signal/2 = 2αgσ/2, so P(accept | S_z = 0) = erf(αg/√2).
    let g = echo_g(&p, &m, t);
    let expected = spinmech::special::erf(0.4 * g / 2f64.sqrt());
    assert!(s.acceptance_dfs.contains(expected), "{:?} vs {expected}", s.acceptance_dfs);
    assert!(echo_sigma_sq(&p, &m, t) > 0.0);
}

#[test]
fn coherent_phase_scales_with_damping() {
    let m = MeasurementParams::with_delta_m_sq(27.0);
    let cfg = |t| ProtocolConfig::new(Threshold::Finite(0.4), t).unwrap().echo();
    let p = SystemParams::<f64>::from_lab_units(10e-3, f64::INFINITY, 880.0, 293.0).unwrap();
    assert_eq!(run_echo_protocol(&p, &m, &cfg(3e-3), 10.0, 1).unwrap().delta_phi_coherent, 0.0);
    let p = SystemParams::<f64>::from_lab_units(10e-3, 1e5, 880.0, 293.0).unwrap();
    assert_ne!(run_echo_protocol(&p, &m, &cfg(3e-3), 10.0, 1).unwrap().delta_phi_coherent, 0.0);
}

#[test]
fn phase_limits_rows_one_through_five() {
    for pr in &PRESETS[..5] {
        let cfg = pr.config();
        let b = tolerances(&cfg.system::<f64>().unwrap(), &cfg.measurement::<f64>().unwrap(), Threshold::Finite(0.4), None).unwrap();
        assert!(b.dl_max_phi < b.dl_max_m && b.dl_max_phi < b.dl_max_disp, "{}", pr.name);
    }
}
