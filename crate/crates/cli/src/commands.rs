use std::f64::consts::PI;
use std::fs;

use anyhow::{Context, Result};
use serde::Serialize;

use spinmech::analytic::{
    analytic_report, asymptotic_error, bound_error, g_normalized, hot_gate_error, optimal_time, rate_false_positive,
    rate_true_positive, report_at, AnalyticReport, GForm, NormalizedModel, OptimizeMode,
};
use spinmech::estimator::{riccati_steady_state, run_filter, synthesize_record, FilterModel};
use spinmech::gate_budget::{cooperativity_curve_point, gate_budget, AncillaryErrors, CooperativityPoint, GateBudget, WallTime};
use spinmech::mech_sim::{monte_carlo, MonteCarloSummary};
use spinmech::params::{preset, ParamConfig, ProtocolConfig, Threshold, PRESETS};
use spinmech::table::{table_rows, TABLE_COLUMNS};

use crate::output::{csv_bytes, emit, json_bytes, Format, RunManifest};
use crate::{Axis, BudgetArgs, Cli, Command, Common, KalmanArgs, SweepArgs, UsageError};

const DEFAULT_PRESET: &str = "table1-row5";
const DEFAULT_RUNS: u64 = 100_000;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Table => cmd_table(c),
        Command::Sweep(a) => cmd_sweep(c, a),
        Command::Mc => cmd_mc(c),
        Command::KalmanDemo(a) => cmd_kalman(c, a),
        Command::Budget(a) => cmd_budget(c, a),
    }
}

/// Parameter set from --config or --preset, and a label for the manifest.
fn load_params(c: &Common) -> Result<(ParamConfig, String)> {
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
        return Ok((ParamConfig::parse(&text)?, format!("config:{}", path.display())));
    }
    let name = c.preset.as_deref().unwrap_or(DEFAULT_PRESET);
    Ok((preset(name)?.config(), format!("preset:{name}")))
}

fn threshold(alpha: f64) -> Result<Threshold<f64>> {
    if alpha == 0.0 {
        Ok(Threshold::ZeroLimit)
    } else {
        Ok(Threshold::finite(alpha)?)
    }
}

fn single_alpha(c: &Common, cfg: &ParamConfig) -> Result<f64> {
    match c.alpha.as_slice() {
        [] => Ok(cfg.alpha),
        [a] => Ok(*a),
        _ => Err(usage("this command takes a single --alpha")),
    }
}

fn grid(from: f64, to: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(usage("--points must be >= 1"));
    }
    if !(from.is_finite() && to.is_finite() && from <= to) {
        return Err(usage(format!("invalid range {from} .. {to}")));
    }
    if log && from <= 0.0 {
        return Err(usage("a log grid needs a positive start"));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let s = i as f64 / n;
            if log {
                10f64.powf(from.log10() + s * (to / from).log10())
            } else {
                from + s * (to - from)
            }
        })
        .collect())
}

fn write<R: Serialize>(
    c: &Common,
    default: Format,
    command: &str,
    header: &[&str],
    rows: &[R],
    manifest: RunManifest,
) -> Result<()> {
    let bytes = match c.format.unwrap_or(default) {
        Format::Csv => csv_bytes(header, rows)?,
        Format::Json => json_bytes(command, &rows)?,
    };
    emit(&bytes, c.out.as_deref(), manifest)
}

fn write_single<D: Serialize, R: Serialize>(c: &Common, command: &str, doc: &D, row: &R, header: &[&str], manifest: RunManifest) -> Result<()> {
    let bytes = match c.format.unwrap_or(Format::Json) {
        Format::Csv => csv_bytes(header, std::slice::from_ref(row))?,
        Format::Json => json_bytes(command, doc)?,
    };
    emit(&bytes, c.out.as_deref(), manifest)
}

fn cmd_table(c: &Common) -> Result<()> {
    if c.config.is_some() {
        return Err(usage("table works on presets only"));
    }
    let presets = match &c.preset {
        None => PRESETS.to_vec(),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(preset)
            .collect::<spinmech::Result<Vec<_>>>()?,
    };
    let rows = table_rows(&presets)?;
    let source = presets.iter().map(|p| p.name).collect::<Vec<_>>().join(",");
    write(c, Format::Csv, "table", &TABLE_COLUMNS, &rows, RunManifest::new("table", format!("presets:{source}"), None, None))
}

#[derive(Serialize)]
struct CooperativityRow {
    alpha: f64,
    c: f64,
    gamma_t_opt: f64,
    fidelity: f64,
    error: f64,
    r_p: f64,
    r_p_per_gamma: f64,
    asymptote_lead: f64,
    asymptote: f64,
    bound_error: f64,
    hot_gate_error: f64,
}

#[derive(Serialize)]
struct AlphaRow {
    alpha: f64,
    t_opt_s: f64,
    gamma_t_opt: f64,
    fidelity: f64,
    error: f64,
    r_p: f64,
    r_f: f64,
}

#[derive(Serialize)]
struct TimeRow {
    alpha: f64,
    gamma_t: f64,
    t_s: f64,
    g: f64,
    fidelity: f64,
    error: f64,
    r_p: f64,
    r_f: f64,
}

fn rates(g: f64, alpha: Threshold<f64>) -> (f64, f64) {
    match alpha {
        Threshold::Finite(a) => (rate_true_positive(g, a), rate_false_positive(g, a)),
        Threshold::ZeroLimit => (0.0, 0.0),
    }
}

fn cmd_sweep(c: &Common, a: &SweepArgs) -> Result<()> {
    let xs = grid(a.from, a.to, a.points, a.log)?;
    match a.axis {
        Axis::C => {
            let alphas = if c.alpha.is_empty() { vec![0.0] } else { c.alpha.clone() };
            if xs.iter().any(|&x| x <= 0.0) {
                return Err(usage("cooperativity must be > 0"));
            }
            let mut rows = Vec::new();
            for &al in &alphas {
                let th = threshold(al)?;
                for &cc in &xs {
                    let model = NormalizedModel::new(cc);
                    let opt = model.optimal(th);
                    let (r_p, _) = rates(model.g(opt.t), th);
                    rows.push(CooperativityRow {
                        alpha: al,
                        c: cc,
                        gamma_t_opt: opt.t,
                        fidelity: opt.fidelity,
                        error: 1.0 - opt.fidelity,
                        r_p,
                        r_p_per_gamma: r_p / opt.t,
                        asymptote_lead: PI * PI / 16.0 * cc.ln() / cc,
                        asymptote: asymptotic_error(cc).map(|x| x.value).unwrap_or(f64::NAN),
                        bound_error: bound_error(cc).unwrap_or(f64::NAN),
                        hot_gate_error: hot_gate_error(cc),
                    });
                }
            }
            let m = RunManifest::new("sweep", "normalized".into(), None, None);
            write(c, Format::Csv, "sweep", &[], &rows, m)
        }
        Axis::Alpha => {
            let (cfg, source) = load_params(c)?;
            let (p, meas) = (cfg.system::<f64>()?, cfg.measurement::<f64>()?);
            let mut rows = Vec::new();
            for &al in &xs {
                let th = threshold(al)?;
                let opt = optimal_time(&p, &meas, th, OptimizeMode::Numeric)?;
                let (r_p, r_f) = rates(g_normalized(&p, &meas, opt.t, GForm::Exact), th);
                rows.push(AlphaRow {
                    alpha: al,
                    t_opt_s: opt.t,
                    gamma_t_opt: opt.t * p.gamma,
                    fidelity: opt.fidelity,
                    error: 1.0 - opt.fidelity,
                    r_p,
                    r_f,
                });
            }
            write(c, Format::Csv, "sweep", &[], &rows, RunManifest::new("sweep", source, None, None))
        }
        Axis::T => {
            let (cfg, source) = load_params(c)?;
            let (p, meas) = (cfg.system::<f64>()?, cfg.measurement::<f64>()?);
            let alphas = if c.alpha.is_empty() { vec![cfg.alpha] } else { c.alpha.clone() };
            if xs.iter().any(|&x| x <= 0.0) {
                return Err(usage("interaction time must be > 0"));
            }
            let mut rows = Vec::new();
            for &al in &alphas {
                let th = threshold(al)?;
                for &gt in &xs {
                    let t = gt / p.gamma;
                    let r = report_at(&p, &meas, th, t)?;
                    rows.push(TimeRow {
                        alpha: al,
                        gamma_t: gt,
                        t_s: t,
                        g: r.g_value,
                        fidelity: r.fidelity,
                        error: r.error,
                        r_p: r.rate_tp,
                        r_f: r.rate_fp,
                    });
                }
            }
            write(c, Format::Csv, "sweep", &[], &rows, RunManifest::new("sweep", source, None, None))
        }
    }
}

#[derive(Serialize)]
struct McDoc {
    parameter_source: String,
    analytic: AnalyticReport<f64>,
    monte_carlo: MonteCarloSummary<f64>,
}

#[derive(Serialize)]
struct McRow {
    seed: u64,
    runs: u64,
    t_interact_s: f64,
    alpha: f64,
    fidelity: f64,
    fidelity_lower: f64,
    fidelity_upper: f64,
    acceptance: f64,
    acceptance_lower: f64,
    acceptance_upper: f64,
    analytic_fidelity: f64,
    analytic_acceptance: f64,
}

fn cmd_mc(c: &Common) -> Result<()> {
    let (cfg, source) = load_params(c)?;
    let (p, m) = (cfg.system::<f64>()?, cfg.measurement::<f64>()?);
    let alpha = single_alpha(c, &cfg)?;
    if alpha == 0.0 {
        return Err(usage("Monte Carlo needs a finite threshold (alpha > 0)"));
    }
    let th = threshold(alpha)?;
    let runs = c.runs.unwrap_or(DEFAULT_RUNS);
    let analytic = analytic_report(&p, &m, th)?;
    let pc = ProtocolConfig::new(th, analytic.t_opt)?;
    let mc = monte_carlo(&p, &m, &pc, runs, c.seed)?;
    let row = McRow {
        seed: c.seed,
        runs,
        t_interact_s: analytic.t_opt,
        alpha,
        fidelity: mc.fidelity.estimate,
        fidelity_lower: mc.fidelity.lower,
        fidelity_upper: mc.fidelity.upper,
        acceptance: mc.acceptance.estimate,
        acceptance_lower: mc.acceptance.lower,
        acceptance_upper: mc.acceptance.upper,
        analytic_fidelity: analytic.fidelity,
        analytic_acceptance: analytic.acceptance,
    };
    let doc = McDoc { parameter_source: source.clone(), analytic, monte_carlo: mc };
    write_single(c, "mc", &doc, &row, &[], RunManifest::new("mc", source, Some(c.seed), Some(runs)))
}

#[derive(Serialize)]
struct KalmanRow {
    t_s: f64,
    z: f64,
    x_true: f64,
    p_true: f64,
    x_hat: f64,
    p_hat: f64,
    cov_xx: f64,
    cov_xp: f64,
    cov_pp: f64,
    trace: f64,
    trace_steady_state: f64,
}

fn cmd_kalman(c: &Common, a: &KalmanArgs) -> Result<()> {
    let (cfg, source) = load_params(c)?;
    let p = cfg.system::<f64>()?;
    if !(a.power_mw >= 0.0 && a.power_mw.is_finite()) {
        return Err(usage("--power-mw must be finite and >= 0"));
    }
    if !(a.duration > 0.0 && a.duration.is_finite()) || a.steps_per_period == 0 {
        return Err(usage("--duration and --steps-per-period must be > 0"));
    }
    let m = cfg.measurement::<f64>()?.with_power(a.power_mw * 1e-3);
    let model = FilterModel::interferometer(&p, &m)?;
    let period = 2.0 * PI / p.omega_r;
    let dt = period / a.steps_per_period as f64;
    let n = (a.duration * a.steps_per_period as f64).ceil() as usize + 1;
    let rec = synthesize_record(&model, n, dt, c.seed);
    let states = run_filter(&model, &rec.z, dt)?;
    let steady = if model.measurement_rate() > 0.0 {
        riccati_steady_state(&model)?.p.trace()
    } else {
        f64::NAN
    };
    let rows: Vec<KalmanRow> = states
        .iter()
        .zip(rec.truth.iter().zip(&rec.z))
        .map(|(s, (x, &z))| KalmanRow {
            t_s: s.t,
            z,
            x_true: x.x,
            p_true: x.p,
            x_hat: s.mean.x,
            p_hat: s.mean.p,
            cov_xx: s.cov.a,
            cov_xp: s.cov.b,
            cov_pp: s.cov.d,
            trace: s.cov.trace(),
            trace_steady_state: steady,
        })
        .collect();
    write(c, Format::Csv, "kalman-demo", &[], &rows, RunManifest::new("kalman-demo", source, Some(c.seed), None))
}

fn ancillary(a: &BudgetArgs) -> AncillaryErrors<f64> {
    let base = if a.literature_defaults { AncillaryErrors::literature_defaults() } else { AncillaryErrors::zero() };
    AncillaryErrors {
        e_control: a.e_control.unwrap_or(base.e_control),
        eta: a.eta.unwrap_or(base.eta),
        e_init: a.e_init.unwrap_or(base.e_init),
        e_ro: a.e_ro.unwrap_or(base.e_ro),
        e_cnot: a.e_cnot.unwrap_or(base.e_cnot),
        e_nuc: a.e_nuc.unwrap_or(base.e_nuc),
        gamma_ratio: a.gamma_ratio.unwrap_or(base.gamma_ratio),
        t_ro: a.t_ro.unwrap_or(base.t_ro),
        gamma1: a.gamma1.unwrap_or(base.gamma1),
    }
}

#[derive(Serialize)]
struct BudgetRow {
    c: f64,
    t_opt_s: f64,
    e_bell: f64,
    acceptance: f64,
    wall_time_s: f64,
    e_ro: f64,
    e_nuc: f64,
    e_total: f64,
    hot_gate_reference: f64,
}

#[derive(Serialize)]
struct CurveRow {
    alpha: f64,
    c: f64,
    gamma_t_opt: f64,
    e_bell: f64,
    e_ro: f64,
    e_total: f64,
    hot_gate_reference: f64,
}

impl CurveRow {
    fn new(alpha: f64, pt: CooperativityPoint<f64>) -> Self {
        CurveRow {
            alpha,
            c: pt.c,
            gamma_t_opt: pt.gamma_t_opt,
            e_bell: pt.e_bell,
            e_ro: pt.e_ro,
            e_total: pt.e_total,
            hot_gate_reference: pt.hot_gate_reference,
        }
    }
}

fn cmd_budget(c: &Common, a: &BudgetArgs) -> Result<()> {
    if a.curve {
        let e_cnot = a.e_cnot.unwrap_or(1e-4);
        let alphas = if c.alpha.is_empty() { vec![0.0] } else { c.alpha.clone() };
        let cs = grid(a.c_from, a.c_to, a.c_points, true)?;
        let mut rows = Vec::new();
        for &al in &alphas {
            let th = threshold(al)?;
            for &cc in &cs {
                rows.push(CurveRow::new(al, cooperativity_curve_point(cc, th, e_cnot)?));
            }
        }
        return write(c, Format::Csv, "budget", &[], &rows, RunManifest::new("budget", "normalized".into(), None, None));
    }
    let (cfg, source) = load_params(c)?;
    let (p, m) = (cfg.system::<f64>()?, cfg.measurement::<f64>()?);
    let alpha = single_alpha(c, &cfg)?;
    if alpha == 0.0 {
        return Err(usage("the budget needs a finite threshold (alpha > 0) for the repeat rate"));
    }
    let wall = if a.per_attempt { WallTime::PerAttempt } else { WallTime::PerSuccess };
    let b: GateBudget<f64> = gate_budget(&p, &m, threshold(alpha)?, &ancillary(a), wall).context("composing the gate budget")?;
    let row = BudgetRow {
        c: b.c,
        t_opt_s: b.t_opt,
        e_bell: b.e_bell,
        acceptance: b.acceptance,
        wall_time_s: b.wall_time,
        e_ro: b.e_ro,
        e_nuc: b.e_nuc,
        e_total: b.e_total,
        hot_gate_reference: b.hot_gate_reference,
    };
    write_single(c, "budget", &b, &row, &[], RunManifest::new("budget", source, None, None))
}
