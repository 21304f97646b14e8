//! Closed-form protocol quantities: displacements, variances, heralding
//! rates, success probability, fidelity, optimal time, bounds and scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::maximize_log;
use crate::params::{MeasurementParams, ProtocolConfig, SystemParams, Threshold};
use crate::scalar::{one_minus_exp_over, Real};
use crate::special::{erf, erfc};

/// Total S_z of the spin pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinSector {
    Down,
    Zero,
    Up,
}

impl SpinSector {
    pub const ALL: [SpinSector; 3] = [SpinSector::Down, SpinSector::Zero, SpinSector::Up];

    pub fn s_z(self) -> i32 {
        match self {
            SpinSector::Down => -2,
            SpinSector::Zero => 0,
            SpinSector::Up => 2,
        }
    }

    pub fn from_s_z(s: i32) -> Option<Self> {
        match s {
            -2 => Some(SpinSector::Down),
            0 => Some(SpinSector::Zero),
            2 => Some(SpinSector::Up),
            _ => None,
        }
    }
}

/// Selects how the normalized displacement g is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GForm {
    /// |μ(2,t)| / 2σ(t) with the full exponential forms.
    Exact,
    /// g² = (8/π²)·C·Γt: first order in κt, measurement noise ignored.
    Linearized,
}

/// Rotating-wave drive strength 2√2λ/π per unit S_z.
pub fn drive_rate<T: Real>(p: &SystemParams<T>) -> T {
    T::lit(2.0) * T::SQRT_2() * p.lambda_coupling / T::PI()
}

/// Momentum shift μ(S_z, t) = −4√2λS_z(1 − e^{−κt/2})/(πκ).
pub fn displacement_mu<T: Real>(p: &SystemParams<T>, s: SpinSector, t: T) -> T {
    let half_kappa = p.kappa() / T::lit(2.0);
    -drive_rate(p) * T::lit(s.s_z() as f64) * one_minus_exp_over(half_kappa, t)
}

/// σ²(t) = Δm²(1 + e^{−κt}) + n_th(1 − e^{−κt}).
pub fn sigma_sq<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, t: T) -> T {
    let kt = p.kappa() * t;
    let decay = (-kt).exp();
    let grown = -(-kt).exp_m1();
    m.delta_m_sq * (T::one() + decay) + p.n_thermal() * grown
}

pub fn g_normalized<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, t: T, form: GForm) -> T {
    match form {
        GForm::Exact => {
            let s2 = sigma_sq(p, m, t);
            if s2 == T::zero() {
                return T::infinity();
            }
            displacement_mu(p, SpinSector::Up, t).abs() / (T::lit(2.0) * s2.sqrt())
        }
        GForm::Linearized => (T::lit(8.0) / (T::PI() * T::PI()) * p.cooperativity() * p.gamma * t).sqrt(),
    }
}

/// Probability per attempt that an S_z = ±2 state is accepted.
///
/// r_f = ¼Erfc((2−α)g/√2) − ¼Erfc((2+α)g/√2).
pub fn rate_false_positive<T: Real>(g: T, alpha: T) -> T {
    let two = T::lit(2.0);
    let a = (two - alpha) * g / T::SQRT_2();
    let b = (two + alpha) * g / T::SQRT_2();
    let quarter = T::lit(0.25);
    // Near the origin both Erfc terms are close to 1; the Erf form avoids cancellation.
    let r = if a < T::one() {
        quarter * (erf(b) - erf(a))
    } else {
        quarter * (erfc(a) - erfc(b))
    };
    r.max(T::zero())
}

/// Upper bound ¼e^{−(2−α)²g²/2} on the false-positive rate.
pub fn rate_false_positive_bound<T: Real>(g: T, alpha: T) -> T {
    let a = (T::lit(2.0) - alpha) * g;
    T::lit(0.25) * (-a * a / T::lit(2.0)).exp()
}

/// Probability per attempt that the S_z = 0 state is accepted: ½Erf(αg/√2).
pub fn rate_true_positive<T: Real>(g: T, alpha: T) -> T {
    T::lit(0.5) * erf(alpha * g / T::SQRT_2())
}

/// Probability that an accepted event is a true positive, S = r_p/(r_p + r_f).
pub fn success_probability<T: Real>(g: T, alpha: Threshold<T>) -> Result<T> {
    match alpha {
        Threshold::ZeroLimit => Ok(success_probability_zero_limit(g)),
        Threshold::Finite(a) => {
            let rp = rate_true_positive(g, a);
            let rf = rate_false_positive(g, a);
            if rp + rf == T::zero() {
                Err(Error::UndefinedAcceptance)
            } else {
                Ok(rp / (rp + rf))
            }
        }
    }
}

/// α → 0 limit 1/(1 + e^{−2g²}).
pub fn success_probability_zero_limit<T: Real>(g: T) -> T {
    (T::one() + (T::lit(-2.0) * g * g).exp()).recip()
}

/// Expansion to second order in α:
/// 1/(1+e^{−2g²}) − 2e^{2g²}g⁴α²/(3(1+e^{2g²})²).
pub fn success_probability_small_alpha<T: Real>(g: T, alpha: T) -> T {
    let g2 = g * g;
    // e^{2g²}/(1+e^{2g²})² = 1/(4cosh²(g²)), finite for any g.
    let sech = (g2.cosh()).recip();
    let corr = T::lit(2.0) * g2 * g2 * alpha * alpha * sech * sech / T::lit(12.0);
    success_probability_zero_limit(g) - corr
}

/// Two-spin coherence factor ½(1 + e^{−2Γt}).
pub fn coherence_factor<T: Real>(gamma: T, t: T) -> T {
    (T::one() + (T::lit(-2.0) * gamma * t).exp()) / T::lit(2.0)
}

/// ℱ = ½(1 + e^{−2Γt}) · S(α, g(t)).
pub fn fidelity_at<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, alpha: Threshold<T>, t: T, form: GForm) -> Result<T> {
    let g = g_normalized(p, m, t, form);
    Ok(coherence_factor(p.gamma, t) * success_probability(g, alpha)?)
}

pub fn fidelity<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, cfg: &ProtocolConfig<T>) -> Result<T> {
    fidelity_at(p, m, cfg.alpha, cfg.t_interact, GForm::Exact)
}

/// Whether cooperativity allows ℱ > ½ at all (C > π²/8).
pub fn entanglement_possible<T: Real>(c: T) -> bool {
    c > T::PI() * T::PI() / T::lit(8.0)
}

/// Γt* ≈ (π²/16C)·ln(16C/π² − 1).
pub fn optimal_gamma_t_analytic<T: Real>(c: T) -> Result<T> {
    if !entanglement_possible(c) {
        return Err(Error::NoEntanglementPossible { c: c.as_f64() });
    }
    let pi2 = T::PI() * T::PI();
    Ok(pi2 / (T::lit(16.0) * c) * (T::lit(16.0) * c / pi2 - T::one()).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeMode {
    Numeric,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalTime<T> {
    pub t: T,
    pub fidelity: T,
    /// ℱ(t) > ½.
    pub entangling: bool,
}

/// Optimization window (0, min(10/Γ, 1/κ)].
pub fn time_window<T: Real>(p: &SystemParams<T>) -> T {
    let by_gamma = T::lit(10.0) / p.gamma;
    let kappa = p.kappa();
    if kappa > T::zero() {
        by_gamma.min(kappa.recip())
    } else {
        by_gamma
    }
}

pub fn optimal_time<T: Real>(
    p: &SystemParams<T>,
    m: &MeasurementParams<T>,
    alpha: Threshold<T>,
    mode: OptimizeMode,
) -> Result<OptimalTime<T>> {
    let fid = |t: T| fidelity_at(p, m, alpha, t, GForm::Exact).unwrap_or(T::nan());
    match mode {
        OptimizeMode::Analytic => {
            let t = optimal_gamma_t_analytic(p.cooperativity())? / p.gamma;
            let f = fid(t);
            Ok(OptimalTime { t, fidelity: f, entangling: f > T::lit(0.5) })
        }
        OptimizeMode::Numeric => {
            let hi = time_window(p);
            let lo = hi * T::lit(1e-9);
            let seed = optimal_gamma_t_analytic(p.cooperativity()).ok().map(|x| x / p.gamma);
            let (t, f) = maximize_log(fid, lo, hi, seed, T::lit(1e-6).max(T::epsilon() * T::lit(16.0)));
            Ok(OptimalTime { t, fidelity: f, entangling: f > T::lit(0.5) })
        }
    }
}

/// Closed-form outputs for one parameter set at its numerically optimal time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport<T> {
    pub c: T,
    pub t_opt: T,
    pub fidelity: T,
    pub error: T,
    /// True-positive probability per attempt.
    pub rate_tp: T,
    /// False-positive probability per attempt.
    pub rate_fp: T,
    pub g_value: T,
    pub sigma_sq: T,
    /// Total acceptance probability per attempt, r_p + r_f.
    pub acceptance: T,
    /// True-positive rate per second of interaction time, r_p / t*.
    pub rate_tp_per_s: T,
}

pub fn analytic_report<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, alpha: Threshold<T>) -> Result<AnalyticReport<T>> {
    let opt = optimal_time(p, m, alpha, OptimizeMode::Numeric)?;
    report_at(p, m, alpha, opt.t)
}

/// Report evaluated at a given interaction time instead of the optimum.
pub fn report_at<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, alpha: Threshold<T>, t: T) -> Result<AnalyticReport<T>> {
    let g = g_normalized(p, m, t, GForm::Exact);
    let fidelity = fidelity_at(p, m, alpha, t, GForm::Exact)?;
    let (rate_tp, rate_fp) = match alpha {
        Threshold::Finite(a) => (rate_true_positive(g, a), rate_false_positive(g, a)),
        Threshold::ZeroLimit => (T::zero(), T::zero()),
    };
    Ok(AnalyticReport {
        c: p.cooperativity(),
        t_opt: t,
        fidelity,
        error: T::one() - fidelity,
        rate_tp,
        rate_fp,
        g_value: g,
        sigma_sq: sigma_sq(p, m, t),
        acceptance: rate_tp + rate_fp,
        rate_tp_per_s: rate_tp / t,
    })
}

fn bound_base<T: Real>(op: &'static str, c: T) -> Result<T> {
    if !entanglement_possible(c) {
        return Err(Error::Domain { op, reason: format!("requires C > pi^2/8, got C = {c}") });
    }
    Ok(T::lit(16.0) * c / (T::PI() * T::PI()) - T::one())
}

/// Lower bound on the optimal fidelity:
/// ½(1 + A^{−π²/8C}) / (1 + 1/A) with A = 16C/π² − 1.
pub fn fidelity_lower_bound<T: Real>(c: T) -> Result<T> {
    let a = bound_base("fidelity_lower_bound", c)?;
    let x = T::PI() * T::PI() / (T::lit(8.0) * c);
    Ok(T::lit(0.5) * (T::one() + (-x * a.ln()).exp()) / (T::one() + a.recip()))
}

/// Error 1 − ℱ_min implied by [`fidelity_lower_bound`].
pub fn bound_error<T: Real>(c: T) -> Result<T> {
    Ok(T::one() - fidelity_lower_bound(c)?)
}

/// Local scaling exponent p(C) = −(π²/8)·y·ln A / (C(y − 1)), y = A^{π²/8C}.
pub fn scaling_exponent<T: Real>(c: T) -> Result<T> {
    let a = bound_base("scaling_exponent", c)?;
    let x = T::PI() * T::PI() / (T::lit(8.0) * c);
    let ln_y = x * a.ln();
    let y = ln_y.exp();
    Ok(-y * ln_y / ln_y.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticError<T> {
    /// (π²/16)·ln C/C + π²(1 + ln(16/π²))/(16C).
    pub value: T,
    /// Relative distance to the error implied by the lower bound.
    pub relative_gap: T,
    /// C ≥ 100, where ln C ≫ 1 justifies the expansion.
    pub within_validity: bool,
}

pub fn asymptotic_error<T: Real>(c: T) -> Result<AsymptoticError<T>> {
    let pi2 = T::PI() * T::PI();
    let sixteen = T::lit(16.0);
    let value = pi2 / sixteen * c.ln() / c + pi2 * (T::one() + (sixteen / pi2).ln()) / (sixteen * c);
    let exact = bound_error(c)?;
    Ok(AsymptoticError {
        value,
        relative_gap: ((value - exact) / exact).abs(),
        within_validity: c >= T::lit(100.0),
    })
}

/// Deterministic hot-gate comparison: error ≈ 1.2/√C at the optimal resonator
/// frequency λ√((κn_th/Γ)(α_k/α_T)), α_k = 4, α_T = 0.1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotGateReference<T> {
    pub error: T,
    pub omega_opt: T,
}

pub const HOT_GATE_ALPHA_K: f64 = 4.0;
pub const HOT_GATE_ALPHA_T: f64 = 0.1;

pub fn hot_gate_error<T: Real>(c: T) -> T {
    T::lit(1.2) / c.sqrt()
}

pub fn hot_gate_reference<T: Real>(p: &SystemParams<T>) -> HotGateReference<T> {
    let ratio = T::lit(HOT_GATE_ALPHA_K / HOT_GATE_ALPHA_T);
    HotGateReference {
        error: hot_gate_error(p.cooperativity()),
        omega_opt: p.lambda_coupling * (p.thermal_rate() / p.gamma * ratio).sqrt(),
    }
}

/// The protocol reduced to its single figure of merit C.
///
/// g² = (8/π²)·C·Γt (no measurement noise, κt ≪ 1); times are in units of 1/Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedModel<T> {
    pub c: T,
}

impl<T: Real> NormalizedModel<T> {
    pub fn new(c: T) -> Self {
        NormalizedModel { c }
    }

    pub fn g(&self, gamma_t: T) -> T {
        (T::lit(8.0) / (T::PI() * T::PI()) * self.c * gamma_t).sqrt()
    }

    pub fn fidelity(&self, gamma_t: T, alpha: Threshold<T>) -> Result<T> {
        Ok(coherence_factor(T::one(), gamma_t) * success_probability(self.g(gamma_t), alpha)?)
    }

    /// Numerically optimal Γt over (0, 10].
    pub fn optimal(&self, alpha: Threshold<T>) -> OptimalTime<T> {
        let f = |x: T| self.fidelity(x, alpha).unwrap_or(T::nan());
        let seed = optimal_gamma_t_analytic(self.c).ok();
        let hi = T::lit(10.0);
        let (t, fid) = maximize_log(f, hi * T::lit(1e-12), hi, seed, T::lit(1e-6).max(T::epsilon() * T::lit(16.0)));
        OptimalTime { t, fidelity: fid, entangling: fid > T::lit(0.5) }
    }
}
