//! Acceptance run: one PASS/FAIL line per criterion, with the numbers behind
//! each verdict indented above it. Exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use spinmech::analytic::{
    analytic_report, g_normalized, optimal_gamma_t_analytic, scaling_exponent, bound_error, success_probability, GForm,
    NormalizedModel, SpinSector,
};
use spinmech::estimator::{
    delta_m_closed_form, filter_error_statistics, riccati_steady_state, shot_noise_budget, FilterModel,
};
use spinmech::gate_budget::cooperativity_curve_point;
use spinmech::inhomogeneity::{echo_monte_carlo, tolerances};
use spinmech::mech_sim::{estimate_drive_coefficient, monte_carlo};
use spinmech::params::{MeasurementParams, ProtocolConfig, SystemParams, Threshold, PRESETS};
use spinmech::table::table_rows;

// Table reproduction.
const TABLE_C_REL: f64 = 0.05;
const TABLE_T_REL: f64 = 0.10;
const TABLE_E_REL: f64 = 0.10;
const TABLE_E_ABS_PERCENT: f64 = 0.5;
const TABLE_RP_ABS: f64 = 0.02;
const TABLE_RUNTIME_S: f64 = 1.0;

// Monte Carlo.
const MC_RUNS: u64 = 100_000;
const MC_SEED: u64 = 20_240_611;

// Thresholds of the fidelity curve.
const F_AT_C100: f64 = 0.96;
const T_OPT_REL: f64 = 0.05;
const T_OPT_ALPHA: f64 = 0.01;

// Scaling exponent.
const SLOPE_ABS: f64 = 1e-3;
const SLOPE_STEP: f64 = 1e-4;
const P_LIMIT_RANGE: (f64, f64) = (-1.0, -0.98);

// Rotating-wave factor.
const RWA_REL: f64 = 0.02;
const RWA_PERIODS: f64 = 100.0;
const RWA_STEPS_PER_PERIOD: f64 = 100.0;
const RWA_PATHS: usize = 400;

// Kalman.
const RICCATI_REL: f64 = 1e-3;
const FILTER_VAR_REL: f64 = 0.10;
const TAU_OPT_REL: f64 = 1e-9;

// Exact versus linearized g.
const G_FORM_ABS: f64 = 5e-5;

// Inhomogeneity.
const DL_REL: f64 = 0.20;
const ECHO_SIGMAS: f64 = 3.0;
const ECHO_KAPPA_T: f64 = 0.1;
const ECHO_RUNS: u64 = 200_000;

// Gate budget.
const FLOOR: f64 = 2e-4;
const FLOOR_REL: f64 = 0.01;

/// Published rows: C, t* [ms], ℰ [%], r_p, Δλ_max/λ [%].
const PUBLISHED: [(f64, f64, f64, f64, f64); 6] = [
    (1.5, 8.9, 49.0, 0.16, 1.5),
    (1206.0, 17.5, 1.2, 0.29, 2.3),
    (2350.0, 2.6, 0.48, 0.31, 0.40),
    (1.6, 8.2, 48.0, 0.15, 1.8),
    (8.0, 3.1, 28.0, 0.18, 1.4),
    (412.0, 0.14, 1.5, 0.28, 4.9),
];

struct Criterion {
    name: &'static str,
    ok: bool,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion { name, ok: true }
    }

    fn check(&mut self, pass: bool, detail: String) {
        println!("    {} {detail}", if pass { "ok " } else { "BAD" });
        self.ok &= pass;
    }

    fn finish(self) -> bool {
        println!("{} {}", if self.ok { "PASS" } else { "FAIL" }, self.name);
        self.ok
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn preset_params(i: usize) -> (SystemParams<f64>, MeasurementParams<f64>) {
    let cfg = PRESETS[i].config();
    (cfg.system().unwrap(), cfg.measurement().unwrap())
}

fn table_reproduction() -> bool {
    let mut c = Criterion::new("1 table reproduction (C, t*, error, r_p, runtime)");
    let start = Instant::now();
    let rows = table_rows(&PRESETS).expect("table rows");
    let elapsed = start.elapsed().as_secs_f64();
    for (r, &(c_ref, t_ref, e_ref, rp_ref, _)) in rows.iter().zip(PUBLISHED.iter()) {
        c.check(rel(r.cooperativity, c_ref) < TABLE_C_REL, format!("{} C {:.4} vs {c_ref}", r.label, r.cooperativity));
        c.check(rel(r.t_opt_ms, t_ref) < TABLE_T_REL, format!("{} t* {:.4} ms vs {t_ref}", r.label, r.t_opt_ms));
        let e_tol = (TABLE_E_REL * e_ref).max(TABLE_E_ABS_PERCENT);
        c.check(
            (r.error_percent - e_ref).abs() < e_tol,
            format!("{} error {:.4}% vs {e_ref}% (tol {e_tol:.3})", r.label, r.error_percent),
        );
        c.check((r.r_p - rp_ref).abs() < TABLE_RP_ABS, format!("{} r_p {:.4} vs {rp_ref}", r.label, r.r_p));
    }
    c.check(elapsed < TABLE_RUNTIME_S, format!("runtime {elapsed:.3} s"));
    c.finish()
}

fn monte_carlo_agreement() -> bool {
    let mut c = Criterion::new("2 Monte Carlo inside 99% intervals (rows 1, 3, 5; n = 1e5)");
    for i in [0, 2, 4] {
        let (p, m) = preset_params(i);
        let alpha = Threshold::Finite(0.4);
        let r = analytic_report(&p, &m, alpha).unwrap();
        let cfg = ProtocolConfig::new(alpha, r.t_opt).unwrap();
        let s = monte_carlo(&p, &m, &cfg, MC_RUNS, MC_SEED).unwrap();
        c.check(
            s.fidelity.contains(r.fidelity),
            format!(
                "{} fidelity {:.4} in [{:.4}, {:.4}], analytic {:.4}",
                PRESETS[i].name, s.fidelity.estimate, s.fidelity.lower, s.fidelity.upper, r.fidelity
            ),
        );
        c.check(
            s.acceptance.contains(r.acceptance),
            format!(
                "{} acceptance {:.4} in [{:.4}, {:.4}], analytic {:.4}",
                PRESETS[i].name, s.acceptance.estimate, s.acceptance.lower, s.acceptance.upper, r.acceptance
            ),
        );
    }
    c.finish()
}

fn fidelity_thresholds() -> bool {
    let mut c = Criterion::new("3 fidelity thresholds and analytic optimal time");
    let f100 = NormalizedModel::new(100.0).optimal(Threshold::ZeroLimit).fidelity;
    c.check(f100 > F_AT_C100, format!("max fidelity at C = 100: {f100:.5}"));
    let c_min = PI * PI / 8.0;
    let worst = [0.05, 0.2, 0.5, 0.8, 1.0, 1.2, c_min]
        .iter()
        .map(|&cc| NormalizedModel::new(cc).optimal(Threshold::ZeroLimit).fidelity)
        .fold(f64::NEG_INFINITY, f64::max);
    c.check(worst <= 0.5, format!("max fidelity over C <= pi^2/8: {worst:.12}"));
    for cc in [10.0, 100.0, 1000.0] {
        let numeric = NormalizedModel::new(cc).optimal(Threshold::Finite(T_OPT_ALPHA)).t;
        let analytic = optimal_gamma_t_analytic(cc).unwrap();
        let d = (analytic - numeric) / numeric;
        c.check(d.abs() < T_OPT_REL, format!("C = {cc}: analytic Gamma t* {analytic:.5} vs numeric {numeric:.5} ({:+.2}%)", d * 100.0));
    }
    c.finish()
}

fn scaling() -> bool {
    let mut c = Criterion::new("4 scaling exponent versus finite-difference slope");
    for cc in [10.0, 100.0, 1e3, 1e4, 1e6, 1e8] {
        let up = bound_error(cc * SLOPE_STEP.exp()).unwrap().ln();
        let down = bound_error(cc * (-SLOPE_STEP).exp()).unwrap().ln();
        let fd = (up - down) / (2.0 * SLOPE_STEP);
        let p = scaling_exponent(cc).unwrap();
        c.check((fd - p).abs() < SLOPE_ABS, format!("C = {cc:e}: slope {fd:.6} vs p(C) {p:.6}"));
    }
    let p_lim = scaling_exponent(1e8).unwrap();
    c.check(
        p_lim > P_LIMIT_RANGE.0 && p_lim < P_LIMIT_RANGE.1,
        format!("p(1e8) = {p_lim:.9} in ({}, {})", P_LIMIT_RANGE.0, P_LIMIT_RANGE.1),
    );
    c.finish()
}

fn rotating_wave_factor() -> bool {
    let mut c = Criterion::new("5 lab-frame square-wave drive recovers 2/pi");
    // n_th close to 1 keeps the thermal scatter small against the drift.
    let p = SystemParams::<f64>::from_lab_units(10e-3, 1e4, 2e4, 6.93e-5).unwrap();
    let period = 2.0 * PI / p.omega_r;
    let start = Instant::now();
    let fit = estimate_drive_coefficient(
        &p,
        SpinSector::Up,
        RWA_PERIODS * period,
        period / RWA_STEPS_PER_PERIOD,
        FRAC_PI_2,
        RWA_PATHS,
        MC_SEED,
    )
    .unwrap();
    let target = 2.0 / PI;
    let d = rel(fit.momentum_coefficient, target);
    c.check(
        d < RWA_REL,
        format!(
            "coefficient {:.5} +/- {:.5} vs {target:.5} over {RWA_PERIODS} periods ({:.3}%, {:.2} s)",
            fit.momentum_coefficient,
            fit.momentum_std_error,
            d * 100.0,
            start.elapsed().as_secs_f64()
        ),
    );
    c.finish()
}

fn kalman() -> bool {
    let mut c = Criterion::new("6 Kalman steady state, filter error, optimal measurement time");
    let (p, m) = preset_params(4);
    let model = FilterModel::interferometer(&p, &m).unwrap();
    let sol = riccati_steady_state(&model).unwrap();
    let closed = delta_m_closed_form(&p, &m);
    let d = rel(sol.delta_m_sq(), closed.exact_root);
    c.check(
        d < RICCATI_REL,
        format!("Riccati delta_m^2 {:.5} vs closed form {:.5} (rel {d:.2e})", sol.delta_m_sq(), closed.exact_root),
    );

    let toy = FilterModel::new(2.0 * PI * 10.0, 0.1, 1000.0, 1.0, 1.0).unwrap();
    let ss = riccati_steady_state(&toy).unwrap().p;
    let stats = filter_error_statistics(&toy, 5e-4, 70_000, 10_000, 16, MC_SEED).unwrap();
    let dx = rel(stats.var_x, ss.a);
    let dp = rel(stats.var_p, ss.d);
    c.check(dx < FILTER_VAR_REL, format!("empirical var x {:.4} vs P_ss {:.4} ({} samples)", stats.var_x, ss.a, stats.samples));
    c.check(dp < FILTER_VAR_REL, format!("empirical var p {:.4} vs P_ss {:.4}", stats.var_p, ss.d));

    let b = shot_noise_budget(&m, &p, 1.0).unwrap();
    let at = shot_noise_budget(&m, &p, b.tau_opt).unwrap();
    let d = rel(at.imprecision, at.diffusion);
    c.check(d < TAU_OPT_REL, format!("imprecision {:.6e} vs diffusion {:.6e} at tau_opt (rel {d:.1e})", at.imprecision, at.diffusion));
    c.finish()
}

fn g_forms() -> bool {
    let mut c = Criterion::new("7 success probability with exact versus linearized g");
    let ideal = MeasurementParams::<f64>::ideal();
    for (i, pr) in PRESETS.iter().enumerate() {
        let (p, m) = preset_params(i);
        let t_star = analytic_report(&p, &m, Threshold::Finite(0.4)).unwrap().t_opt;
        let mut worst: f64 = 0.0;
        for alpha in [Threshold::Finite(0.4), Threshold::ZeroLimit] {
            for k in 0..60 {
                let t = t_star * 10f64.powf(-1.0 + 1.5 * k as f64 / 59.0);
                let ge = g_normalized(&p, &ideal, t, GForm::Exact);
                let gl = g_normalized(&p, &ideal, t, GForm::Linearized);
                let d = success_probability(ge, alpha).unwrap() - success_probability(gl, alpha).unwrap();
                worst = worst.max(d.abs());
            }
        }
        c.check(worst < G_FORM_ABS, format!("{} max |dS| {worst:.2e} over 0.1..3.2 t*", pr.name));
    }
    c.finish()
}

fn inhomogeneity() -> bool {
    let mut c = Criterion::new("8 coupling-mismatch tolerance and echo phase variance");
    for (i, target) in [(4, 1.4), (5, 4.9)] {
        let (p, m) = preset_params(i);
        let b = tolerances(&p, &m, Threshold::Finite(0.4), None).unwrap();
        let pct = b.dl_max / p.lambda_coupling * 100.0;
        c.check(
            rel(pct, target) < DL_REL,
            format!("{} delta_lambda_max {pct:.3}% vs {target}% (limited by {:?})", PRESETS[i].name, b.limiter),
        );
    }
    let p = SystemParams::<f64>::from_lab_units(10e-3, 1e6, 880.0, 293.0).unwrap();
    let m = MeasurementParams::with_delta_m_sq(27.0);
    let t = ECHO_KAPPA_T / p.kappa();
    let cfg = ProtocolConfig::new(Threshold::Finite(0.4), t).unwrap().echo();
    let s = echo_monte_carlo(&p, &m, &cfg, 0.1, ECHO_RUNS, MC_SEED).unwrap();
    let z = (s.phase_variance - s.predicted_phase_variance) / s.phase_variance_std_error;
    c.check(
        z.abs() < ECHO_SIGMAS,
        format!(
            "echo phase variance {:.5} +/- {:.5} vs predicted {:.5} ({z:+.1} SE, ratio {:.4})",
            s.phase_variance,
            s.phase_variance_std_error,
            s.predicted_phase_variance,
            s.phase_variance / s.predicted_phase_variance
        ),
    );
    c.finish()
}

fn gate_budget() -> bool {
    let mut c = Criterion::new("9 gate budget floor and hot-gate ordering");
    let floor = cooperativity_curve_point(1e8, Threshold::ZeroLimit, 1e-4).unwrap().e_total;
    c.check(rel(floor, FLOOR) < FLOOR_REL, format!("E_T(1e8) = {floor:.6e}"));
    let mut ordered = true;
    let mut worst_margin = f64::INFINITY;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    for k in 0..=60 {
        let cc = 10f64.powf(1.0 + 3.0 * k as f64 / 60.0);
        let pt = cooperativity_curve_point(cc, Threshold::ZeroLimit, 1e-4).unwrap();
        ordered &= pt.e_total < pt.hot_gate_reference;
        worst_margin = worst_margin.min(pt.hot_gate_reference - pt.e_total);
        monotone &= pt.e_total < prev;
        prev = pt.e_total;
    }
    c.check(ordered, format!("E_T below 1.2/sqrt(C) + 2e-4 on C in [10, 1e4]; smallest margin {worst_margin:.4e}"));
    c.check(monotone, "E_T decreasing in C on [10, 1e4]".to_string());
    c.finish()
}

fn main() -> ExitCode {
    let results = [
        table_reproduction(),
        monte_carlo_agreement(),
        fidelity_thresholds(),
        scaling(),
        rotating_wave_factor(),
        kalman(),
        g_forms(),
        inhomogeneity(),
        gate_budget(),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
