//! Unequal spin couplings λ ± Δλ/2.
//!
//! A coupling mismatch leaks the resonator into the S_z = 0 subspace in three
//! ways: the antiparallel states pick up a relative phase from the diffusing
//! position quadrature, they displace the momentum in opposite directions
//! (partially projecting the Bell state), and that displacement shifts the
//! acceptance window. All quantities here use the same quadrature units as
//! [`crate::analytic`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    displacement_mu, drive_rate, g_normalized, optimal_time, rate_false_positive, rate_true_positive, sigma_sq, GForm,
    OptimizeMode, SpinSector,
};
use crate::error::{invalid, Result};
use crate::mech_sim::{finite_alpha, normal, phase_flip_probability, sample_sector, stream_rng, ProtocolOutcome, Tally};
use crate::params::{MeasurementParams, ProtocolConfig, PulseVariant, SystemParams, Threshold};
use crate::quadrature::integrate;
use crate::scalar::{one_minus_exp_over, Real};
use crate::special::erfc;
use crate::stats::{Moments, Proportion, Z_99};

/// Phase kick rate per unit position quadrature and unit Δλ: 4√2/π.
pub fn phase_rate<T: Real>() -> T {
    T::lit(4.0) * T::SQRT_2() / T::PI()
}

/// u + 12e^{−u/4} + 4e^{−3u/4} − 8e^{−u/2} − e^{−u} − 7, which behaves as u³/48.
///
/// Summed as a Taylor series for small u, where the closed form cancels.
pub fn echo_diffusion_shape<T: Real>(u: T) -> T {
    if u < T::lit(0.1) {
        // c_n = (−1)ⁿ/n! · (12·4⁻ⁿ + 4·(3/4)ⁿ − 8·2⁻ⁿ − 1) for n ≥ 2.
        let mut sum = T::zero();
        let mut pow = u * u;
        let mut fact = T::lit(2.0);
        for n in 2..16 {
            let nf = n as f64;
            let c = 12.0 * 0.25f64.powf(nf) + 4.0 * 0.75f64.powf(nf) - 8.0 * 0.5f64.powf(nf) - 1.0;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum = sum + T::lit(sign * c) * pow / fact;
            pow = pow * u;
            fact = fact * T::lit(nf + 1.0);
        }
        sum
    } else {
        let e = |k: f64| (-u * T::lit(k)).exp();
        u + T::lit(12.0) * e(0.25) + T::lit(4.0) * e(0.75) - T::lit(8.0) * e(0.5) - e(1.0) - T::lit(7.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseVariance<T> {
    /// (256/π²)·n_th·Δλ²·shape(κt)/κ².
    pub exact: T,
    /// (16/3π²)·κn_th·Δλ²·t³.
    pub expanded: T,
}

/// Variance of the echo-sequence DFS phase after time `t`.
pub fn sigma_dphi_sq<T: Real>(p: &SystemParams<T>, delta_lambda: T, t: T) -> PhaseVariance<T> {
    let pi2 = T::PI() * T::PI();
    let kappa = p.kappa();
    let n = p.n_thermal();
    let dl2 = delta_lambda * delta_lambda;
    let expanded = T::lit(16.0) / (T::lit(3.0) * pi2) * kappa * n * dl2 * t * t * t;
    let exact = if kappa == T::zero() {
        T::zero()
    } else {
        T::lit(256.0) / pi2 * n * dl2 * echo_diffusion_shape(kappa * t) / (kappa * kappa)
    };
    PhaseVariance { exact, expanded }
}

/// Fidelity multiplier (1 + e^{−σ²/2})/2 from a Gaussian phase spread.
pub fn dephasing_fidelity_factor<T: Real>(sigma_dphi_sq: T) -> T {
    (T::one() + (-sigma_dphi_sq / T::lit(2.0)).exp()) / T::lit(2.0)
}

/// δμ/Δm̄, infinite when the readout is noiseless but the branches differ.
pub fn projection_ratio<T: Real>(delta_mu: T, delta_m_bar: T) -> T {
    if delta_mu == T::zero() {
        T::zero()
    } else if delta_m_bar == T::zero() {
        T::infinity()
    } else {
        delta_mu / delta_m_bar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionFactor<T> {
    /// ½ + ½e^{−σ²/2}·BC, BC = ∫√(N(z; r, 1) N(z; −r, 1)) dz by quadrature.
    pub exact: T,
    /// 1 − r²/4 − σ²/4.
    pub expanded: T,
    /// Branches perfectly distinguishable: the Bell state is fully projected.
    pub full_projection: bool,
}

/// Fidelity multiplier from partial which-branch information, for branch
/// separation ratio `delta_g` = δμ/Δm̄.
pub fn projection_fidelity_factor<T: Real>(delta_g: T, sigma_dphi_sq: T) -> ProjectionFactor<T> {
    let r = delta_g.abs();
    let coherence = (-sigma_dphi_sq / T::lit(2.0)).exp();
    let expanded = T::one() - r * r / T::lit(4.0) - sigma_dphi_sq / T::lit(4.0);
    if !r.is_finite() {
        return ProjectionFactor { exact: T::lit(0.5), expanded, full_projection: true };
    }
    let dens = |z: T| {
        let a = (z - r) * (z - r) + (z + r) * (z + r);
        (-a / T::lit(4.0)).exp() / (T::TAU()).sqrt()
    };
    let span = r + T::lit(12.0);
    let (bc, _) = integrate(dens, -span, span, T::lit(1e-11).max(T::epsilon() * T::lit(8.0)));
    ProjectionFactor { exact: T::lit(0.5) + T::lit(0.5) * coherence * bc, expanded, full_projection: false }
}

/// True-positive probability with the S_z = 0 distribution shifted by δg:
/// ½ − ¼[Erfc((αg+δg)/√2) + Erfc((αg−δg)/√2)].
pub fn shifted_true_positive<T: Real>(g: T, alpha: T, delta_g: T) -> T {
    let a = alpha * g;
    T::lit(0.5) - T::lit(0.25) * (erfc((a + delta_g) / T::SQRT_2()) + erfc((a - delta_g) / T::SQRT_2()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limiter {
    Phase,
    Projection,
    Displacement,
}

/// Coupling-mismatch budget at the Δm = 0 optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneityBudget<T> {
    /// Mismatch the remaining fields are evaluated at (the tolerance itself).
    pub delta_lambda: T,
    pub sigma_dphi_sq: T,
    pub dl_max_phi: T,
    pub dl_max_m: T,
    pub dl_max_disp: T,
    pub dl_max: T,
    /// δμ/σ at `delta_lambda`.
    pub delta_g: T,
    pub limiter: Limiter,
    /// Optimal time and error with measurement noise neglected.
    pub t_opt: T,
    pub error_target: T,
}

/// Combined three-measurement readout variance Δm̄² = 6Δm².
pub fn combined_readout_variance<T: Real>(m: &MeasurementParams<T>) -> T {
    T::lit(6.0) * m.delta_m_sq
}

/// Per-branch displacement 2√2Δλt/π of the antiparallel states.
pub fn branch_displacement<T: Real>(delta_lambda: T, t: T) -> T {
    T::lit(2.0) * T::SQRT_2() * delta_lambda * t / T::PI()
}

/// Maximum Δλ for each mechanism at the noise-free optimum.
///
/// The optimal time and error are re-derived with Δm = 0 at the same
/// cooperativity; the readout resolution enters only through Δm̄² in the
/// projection term. `target_error` defaults to that noise-free error.
pub fn tolerances<T: Real>(
    p: &SystemParams<T>,
    m: &MeasurementParams<T>,
    alpha: Threshold<T>,
    target_error: Option<T>,
) -> Result<InhomogeneityBudget<T>> {
    let ideal = MeasurementParams { delta_m_sq: T::zero(), ..*m };
    let opt = optimal_time(p, &ideal, alpha, OptimizeMode::Numeric)?;
    let t = opt.t;
    let e = target_error.unwrap_or(T::one() - opt.fidelity);
    if !(e > T::zero() && e < T::lit(0.5)) {
        return Err(invalid("target_error", format!("must lie in (0, 1/2), got {e}")));
    }
    let pi2 = T::PI() * T::PI();
    let kn = p.thermal_rate();
    let dl_max_phi = if kn > T::zero() {
        let l = -T::lit(2.0) * (T::one() - T::lit(2.0) * e).ln();
        (T::lit(3.0) * pi2 / (T::lit(16.0) * kn * t * t * t) * l).sqrt()
    } else {
        T::infinity()
    };
    let dm_bar_sq = combined_readout_variance(m);
    let dl_max_m = (pi2 * dm_bar_sq * e / (T::lit(2.0) * t * t)).sqrt();
    let sigma = sigma_sq(p, &ideal, t).sqrt();
    let g = g_normalized(p, &ideal, t, GForm::Exact);
    let dl_max_disp = match alpha {
        Threshold::ZeroLimit => T::zero(),
        Threshold::Finite(a) => {
            let acc = rate_true_positive(g, a) + rate_false_positive(g, a);
            let ag = a * g;
            let root = (T::lit(2.0) * T::TAU().sqrt() * e * (ag * ag / T::lit(2.0)).exp() / ag).sqrt();
            T::PI() * sigma * acc / (T::lit(2.0) * T::SQRT_2() * t) * root
        }
    };
    let (dl_max, limiter) = [
        (dl_max_phi, Limiter::Phase),
        (dl_max_m, Limiter::Projection),
        (dl_max_disp, Limiter::Displacement),
    ]
    .into_iter()
    .fold((T::infinity(), Limiter::Phase), |best, cur| if cur.0 < best.0 { cur } else { best });
    Ok(InhomogeneityBudget {
        delta_lambda: dl_max,
        sigma_dphi_sq: sigma_dphi_sq(p, dl_max, t).exact,
        dl_max_phi,
        dl_max_m,
        dl_max_disp,
        dl_max,
        delta_g: branch_displacement(dl_max, t) / sigma,
        limiter,
        t_opt: t,
        error_target: e,
    })
}

/// σ² of the echo statistic: Δm²(1 + 4e^{−κt/2} + e^{−κt}) + n_th(1 − e^{−κt}).
pub fn echo_sigma_sq<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, t: T) -> T {
    let kt = p.kappa() * t;
    m.delta_m_sq * (T::one() + T::lit(4.0) * (-kt / T::lit(2.0)).exp() + (-kt).exp()) + p.n_thermal() * -(-kt).exp_m1()
}

/// Mean of the echo statistic for S_z = +2: (1 + e^{−κt/4})·|μ(2, t/2)|.
pub fn echo_signal<T: Real>(p: &SystemParams<T>, t: T) -> T {
    let half = t / T::lit(2.0);
    (T::one() + (-p.kappa() * t / T::lit(4.0)).exp()) * displacement_mu(p, SpinSector::Up, half).abs()
}

/// Normalized displacement of the echo statistic.
pub fn echo_g<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, t: T) -> T {
    echo_signal(p, t) / (T::lit(2.0) * echo_sigma_sq(p, m, t).sqrt())
}

/// One run of the three-measurement echo protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoOutcome<T> {
    /// `m1`, `m2` and `delta_m_stat` refer to the echo statistic
    /// ΔM = M₂ − 2e^{−κt/4}M_int + e^{−κt/2}M₁.
    pub outcome: ProtocolOutcome<T>,
    pub m_int: T,
    /// Which antiparallel state the S_z = 0 run realized (±1, 0 otherwise).
    pub branch: i8,
    /// DFS phase from the diffusive part of x̃.
    pub delta_phi: T,
    /// DFS phase from the decaying initial x̃(0); zero without damping.
    pub delta_phi_coherent: T,
}

/// Exact joint increment of an OU quadrature and its time integral over `h`,
/// starting from zero: returns (x(h), ∫₀ʰ x).
fn ou_with_integral<T: Real, R: Rng + ?Sized>(theta: T, diff: T, h: T, rng: &mut R) -> (T, T) {
    let (z1, z2): (T, T) = (normal(rng), normal(rng));
    if theta == T::zero() {
        // Brownian motion with its integral.
        let vx = diff * h;
        let vi = diff * h * h * h / T::lit(3.0);
        let c = diff * h * h / T::lit(2.0);
        let corr = c / (vx * vi).sqrt();
        return sample_pair(vx, vi, corr, z1, z2);
    }
    let b = one_minus_exp_over(theta, h);
    let b2 = one_minus_exp_over(T::lit(2.0) * theta, h);
    let vx = diff * b2;
    let vi = diff / (theta * theta) * (h - T::lit(2.0) * b + b2);
    let c = diff / theta * (b - b2);
    let corr = if vx > T::zero() && vi > T::zero() { c / (vx * vi).sqrt() } else { T::zero() };
    sample_pair(vx, vi, corr, z1, z2)
}

fn sample_pair<T: Real>(vx: T, vi: T, corr: T, z1: T, z2: T) -> (T, T) {
    let corr = corr.min(T::one()).max(-T::one());
    let x = vx.max(T::zero()).sqrt() * z1;
    let i = vi.max(T::zero()).sqrt() * (corr * z1 + (T::one() - corr * corr).max(T::zero()).sqrt() * z2);
    (x, i)
}

fn run_echo_with<T: Real, R: Rng + ?Sized>(
    p: &SystemParams<T>,
    m: &MeasurementParams<T>,
    alpha: T,
    t: T,
    delta_lambda: T,
    rng: &mut R,
) -> EchoOutcome<T> {
    let s = sample_sector(rng);
    let branch: i8 = if s == SpinSector::Zero {
        if rng.random::<bool>() { 1 } else { -1 }
    } else {
        0
    };
    let half = t / T::lit(2.0);
    let theta = p.kappa() / T::lit(2.0);
    let n_th = p.n_thermal();
    let diff = p.thermal_rate();
    let a = (-theta * half).exp();
    let dm = m.delta_m_sq.sqrt();
    let x0 = n_th.sqrt() * normal::<T, _>(rng);
    let p0 = n_th.sqrt() * normal::<T, _>(rng);
    // Momentum drive: common S_z part plus the branch-dependent mismatch;
    // the mid-sequence π pulse inverts both for the second half.
    let drive = -drive_rate(p) * (T::lit(s.s_z() as f64) + T::lit(branch as f64) * delta_lambda / p.lambda_coupling);
    let push = drive * one_minus_exp_over(theta, half);
    let (np1, _) = ou_with_integral(theta, diff, half, rng);
    let (np2, _) = ou_with_integral(theta, diff, half, rng);
    let p_mid = a * p0 + push + np1;
    let p_end = a * p_mid - push + np2;
    let (nx1, ix1) = ou_with_integral(theta, diff, half, rng);
    let (_, ix2) = ou_with_integral(theta, diff, half, rng);
    // Second-half integral of the fluctuation started at zero at t = 0.
    let ix2_total = nx1 * one_minus_exp_over(theta, half) + ix2;
    let c = phase_rate::<T>() * delta_lambda;
    let delta_phi = c * (ix1 - ix2_total);
    let coherent_weight = one_minus_exp_over(theta, half) * (T::one() - a);
    let delta_phi_coherent = c * x0 * coherent_weight;

    let m1 = p0 + dm * normal::<T, _>(rng);
    let m_int = p_mid + dm * normal::<T, _>(rng);
    let m2 = p_end + dm * normal::<T, _>(rng);
    let stat = m2 - T::lit(2.0) * a * m_int + a * a * m1;
    let window = alpha * echo_signal(p, t) / T::lit(2.0);
    let u: f64 = rng.random();
    let dephased = s == SpinSector::Zero && T::lit(u) < phase_flip_probability(p.gamma, t);
    EchoOutcome {
        outcome: ProtocolOutcome {
            s_z_true: s.s_z(),
            m1,
            m2,
            m1_x: T::nan(),
            m2_x: T::nan(),
            delta_m_stat: stat,
            accepted: stat.abs() < window,
            dephased,
        },
        m_int,
        branch,
        delta_phi,
        delta_phi_coherent,
    }
}

fn check_echo<T: Real>(cfg: &ProtocolConfig<T>) -> Result<T> {
    cfg.validate()?;
    if cfg.variant != PulseVariant::EchoThreeMeasurement {
        return Err(invalid("variant", "echo protocol requires the echo-three-measurement variant"));
    }
    finite_alpha(cfg.alpha)
}

/// Single echo run on stream 0 of `seed`.
pub fn run_echo_protocol<T: Real>(
    p: &SystemParams<T>,
    m: &MeasurementParams<T>,
    cfg: &ProtocolConfig<T>,
    delta_lambda: T,
    seed: u64,
) -> Result<EchoOutcome<T>> {
    let alpha = check_echo(cfg)?;
    Ok(run_echo_with(p, m, alpha, cfg.t_interact, delta_lambda, &mut stream_rng(seed, 0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoSummary<T> {
    pub tally: Tally,
    pub acceptance: Proportion<T>,
    /// Acceptance probability of S_z = 0 runs alone.
    pub acceptance_dfs: Proportion<T>,
    /// Sample variance of the diffusive DFS phase over S_z = 0 runs.
    pub phase_variance: T,
    pub phase_variance_std_error: T,
    /// Exact prediction for the same Δλ and t.
    pub predicted_phase_variance: T,
}

pub fn echo_monte_carlo<T: Real>(
    p: &SystemParams<T>,
    m: &MeasurementParams<T>,
    cfg: &ProtocolConfig<T>,
    delta_lambda: T,
    n_runs: u64,
    seed: u64,
) -> Result<EchoSummary<T>> {
    let alpha = check_echo(cfg)?;
    if n_runs == 0 {
        return Err(invalid("n_runs", "must be >= 1"));
    }
    let t = cfg.t_interact;
    let (tally, dfs, phase) = (0..n_runs)
        .into_par_iter()
        .fold(
            || (Tally::default(), (0u64, 0u64), Moments::default()),
            |(mut tally, mut dfs, mut ph), i| {
                let o = run_echo_with(p, m, alpha, t, delta_lambda, &mut stream_rng(seed, i));
                tally.record(&o.outcome);
                if o.outcome.s_z_true == 0 {
                    dfs.1 += 1;
                    dfs.0 += o.outcome.accepted as u64;
                    ph.push(o.delta_phi.as_f64());
                }
                (tally, dfs, ph)
            },
        )
        .reduce(
            || (Tally::default(), (0, 0), Moments::default()),
            |a, b| (a.0.merge(b.0), (a.1 .0 + b.1 .0, a.1 .1 + b.1 .1), a.2.merge(b.2)),
        );
    Ok(EchoSummary {
        tally,
        acceptance: Proportion::wilson(tally.accepted, tally.runs, Z_99),
        acceptance_dfs: Proportion::wilson(dfs.0, dfs.1, Z_99),
        phase_variance: T::lit(phase.variance()),
        phase_variance_std_error: T::lit(phase.variance_std_error()),
        predicted_phase_variance: sigma_dphi_sq(p, delta_lambda, t).exact,
    })
}
