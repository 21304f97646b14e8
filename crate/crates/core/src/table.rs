//! Summary rows for the shipped presets: cooperativity, optimal time, error,
//! heralding rate and coupling-mismatch tolerance at α = 0.4.

use serde::Serialize;

use crate::analytic::analytic_report;
use crate::error::Result;
use crate::inhomogeneity::{tolerances, Limiter};
use crate::params::{Preset, Threshold};

pub const TABLE_ALPHA: f64 = 0.4;

pub const TABLE_COLUMNS: [&str; 12] = [
    "label",
    "gamma_inv_s",
    "q_factor",
    "lambda_over_2pi_hz",
    "temperature_k",
    "cooperativity",
    "delta_m_sq",
    "t_opt_ms",
    "error_percent",
    "r_p",
    "delta_lambda_max_percent",
    "delta_lambda_limiter",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub gamma_inv_s: f64,
    pub q_factor: f64,
    pub lambda_over_2pi_hz: f64,
    pub temperature_k: f64,
    pub cooperativity: f64,
    pub delta_m_sq: f64,
    pub t_opt_ms: f64,
    pub error_percent: f64,
    pub r_p: f64,
    pub delta_lambda_max_percent: f64,
    pub delta_lambda_limiter: Limiter,
}

/// Evaluates one preset. The optimal time and error include the preset's
/// readout noise; the mismatch tolerance is taken at the noise-free optimum.
pub fn table_row(preset: &Preset) -> Result<TableRow> {
    let cfg = preset.config();
    let p = cfg.system::<f64>()?;
    let m = cfg.measurement::<f64>()?;
    let alpha = Threshold::Finite(TABLE_ALPHA);
    let r = analytic_report(&p, &m, alpha)?;
    let b = tolerances(&p, &m, alpha, None)?;
    Ok(TableRow {
        label: preset.name.to_string(),
        gamma_inv_s: preset.gamma_inv_s,
        q_factor: preset.q_factor,
        lambda_over_2pi_hz: preset.lambda_over_2pi_hz,
        temperature_k: preset.temperature_k,
        cooperativity: r.c,
        delta_m_sq: preset.delta_m_sq,
        t_opt_ms: r.t_opt * 1e3,
        error_percent: r.error * 1e2,
        r_p: r.rate_tp,
        delta_lambda_max_percent: b.dl_max / p.lambda_coupling * 1e2,
        delta_lambda_limiter: b.limiter,
    })
}

pub fn table_rows(presets: &[Preset]) -> Result<Vec<TableRow>> {
    presets.iter().map(table_row).collect()
}
