//! Phase-space simulation of the spin-conditioned resonator and Monte Carlo
//! of the measure–interact–measure protocol.
//!
//! States live in the frame rotating at ω_r, in quadrature units where the
//! thermal state has variance n_th per quadrature. Each quadrature is an
//! Ornstein–Uhlenbeck process with damping κ/2 and diffusion κ·n_th; the spin
//! pair pushes the momentum quadrature at rate −(2√2/π)λS_z.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{displacement_mu, drive_rate, SpinSector};
use crate::error::{invalid, Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::params::{MeasurementParams, ProtocolConfig, SystemParams, Threshold};
use crate::scalar::{one_minus_exp_over, Real};
use crate::stats::{Moments, Proportion, Z_99};

/// Independent generator for trajectory `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Gaussian resonator state: mean (x̃, p̃) and covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState<T> {
    pub mean: Vec2<T>,
    pub cov: Mat2<T>,
}

impl<T: Real> GaussianState<T> {
    pub fn thermal(n_th: T) -> Self {
        GaussianState { mean: Vec2::zero(), cov: Mat2::diag(n_th, n_th) }
    }

    /// A sharp (zero-variance) state.
    pub fn point(x: T, p: T) -> Self {
        GaussianState { mean: Vec2::new(x, p), cov: Mat2::zero() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2<T> {
        let l = self.cov.cholesky();
        let z = Vec2::new(normal(rng), normal(rng));
        self.mean + l.apply(z)
    }
}

/// Exact Gaussian transition over `dt` for spin sector `s`.
pub fn evolve_exact<T: Real>(state: &GaussianState<T>, p: &SystemParams<T>, s: SpinSector, dt: T) -> GaussianState<T> {
    let kappa = p.kappa();
    let decay = (-kappa * dt / T::lit(2.0)).exp();
    let decay2 = decay * decay;
    let grown = -(-kappa * dt).exp_m1();
    let n = p.n_thermal();
    GaussianState {
        mean: Vec2::new(state.mean.x * decay, state.mean.p * decay + displacement_mu(p, s, dt)),
        cov: state.cov.scale(decay2) + Mat2::diag(n * grown, n * grown),
    }
}

/// Sampled path on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord<T> {
    pub t: Vec<T>,
    pub x: Vec<T>,
    pub p: Vec<T>,
    /// Sign of the effective spin drive at each grid point.
    pub drive: Vec<i8>,
}

impl<T: Real> TrajectoryRecord<T> {
    fn with_capacity(n: usize) -> Self {
        TrajectoryRecord { t: Vec::with_capacity(n), x: Vec::with_capacity(n), p: Vec::with_capacity(n), drive: Vec::with_capacity(n) }
    }

    fn push(&mut self, t: T, q: Vec2<T>, drive: i8) {
        self.t.push(t);
        self.x.push(q.x);
        self.p.push(q.p);
        self.drive.push(drive);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Vec2<T> {
        Vec2::new(*self.x.last().unwrap(), *self.p.last().unwrap())
    }
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Euler–Maruyama path in the rotating frame.
///
/// Requires `dt ≤ 0.01/κ` and `dt ≤ t_I/100`.
pub fn sample_trajectory<T: Real>(
    p: &SystemParams<T>,
    s: SpinSector,
    t_i: T,
    dt: T,
    initial: &GaussianState<T>,
    seed: u64,
) -> Result<TrajectoryRecord<T>> {
    check_positive("t_interact", t_i)?;
    check_positive("dt", dt)?;
    let kappa = p.kappa();
    if kappa > T::zero() && dt > T::lit(0.01) / kappa {
        return Err(Error::StepTooCoarse { dt: dt.as_f64(), limit: 0.01 / kappa.as_f64(), reason: "need dt <= 0.01/kappa" });
    }
    if dt > t_i / T::lit(100.0) {
        return Err(Error::StepTooCoarse { dt: dt.as_f64(), limit: t_i.as_f64() / 100.0, reason: "need dt <= t_I/100" });
    }
    let steps = (t_i / dt).round().to_usize().unwrap();
    let mut rng = stream_rng(seed, 0);
    let mut q = initial.sample(&mut rng);
    let half_kappa = kappa / T::lit(2.0);
    let force = -drive_rate(p) * T::lit(s.s_z() as f64);
    let kick = (kappa * p.n_thermal() * dt).sqrt();
    let mut rec = TrajectoryRecord::with_capacity(steps + 1);
    rec.push(T::zero(), q, 1);
    for k in 1..=steps {
        let (wx, wp): (T, T) = (normal(&mut rng), normal(&mut rng));
        q = Vec2::new(
            q.x - half_kappa * q.x * dt + kick * wx,
            q.p + (force - half_kappa * q.p) * dt + kick * wp,
        );
        rec.push(dt * T::lit(k as f64), q, 1);
    }
    Ok(rec)
}

/// Lab-frame propagator pieces for a constant force held over `h`.
struct LabStep<T> {
    phi: Mat2<T>,
    /// Response of the state to a unit momentum force held over the step.
    force_gain: Vec2<T>,
    noise_chol: Mat2<T>,
}

impl<T: Real> LabStep<T> {
    fn new(omega: T, kappa: T, n_th: T, h: T) -> Self {
        let a = Mat2::new(T::zero(), omega, -omega, -kappa);
        let phi = (a.scale(h)).expm();
        // A⁻¹(Φ − I) applied to (0, 1).
        let ainv = a.inverse().expect("omega_r > 0 makes the drift invertible");
        let force_gain = (ainv * (phi - Mat2::identity())).apply(Vec2::new(T::zero(), T::one()));
        // Stationary covariance is n_th·I, so Q_d = n_th(I − ΦΦᵀ).
        let q = (Mat2::identity() - phi * phi.transpose()).scale(n_th).symmetrized();
        LabStep { phi, force_gain, noise_chol: q.cholesky() }
    }

    fn advance<R: Rng + ?Sized>(&self, z: Vec2<T>, force: T, rng: &mut R) -> Vec2<T> {
        let w = Vec2::new(normal(rng), normal(rng));
        self.phi.apply(z) + self.force_gain.scale(force) + self.noise_chol.apply(w)
    }
}

fn demodulate<T: Real>(z: Vec2<T>, omega_t: T) -> Vec2<T> {
    let (s, c) = omega_t.sin_cos();
    Vec2::new(z.x * c - z.p * s, z.x * s + z.p * c)
}

/// Full lab-frame dynamics under the ±1 square-wave drive sgn(sin(ω_r t + φ)).
///
/// Momentum damping κ and momentum diffusion 2κn_th act in the lab frame;
/// each step (split at drive switching instants) is propagated exactly. The
/// returned path is demodulated into the rotating frame.
pub fn simulate_labframe_squarewave<T: Real>(
    p: &SystemParams<T>,
    s: SpinSector,
    t_i: T,
    dt: T,
    initial: &GaussianState<T>,
    seed: u64,
    phase: T,
) -> Result<TrajectoryRecord<T>> {
    check_positive("t_interact", t_i)?;
    check_positive("dt", dt)?;
    let omega = p.omega_r;
    let period = T::TAU() / omega;
    if dt > T::lit(0.01) * period {
        return Err(Error::StepTooCoarse {
            dt: dt.as_f64(),
            limit: 0.01 * period.as_f64(),
            reason: "need dt <= 0.01 mechanical periods",
        });
    }
    let kappa = p.kappa();
    let n_th = p.n_thermal();
    let amp = -T::SQRT_2() * p.lambda_coupling * T::lit(s.s_z() as f64);
    let full = LabStep::new(omega, kappa, n_th, dt);
    let steps = (t_i / dt).round().to_usize().unwrap();
    let sign_at = |t: T| if (omega * t + phase).sin() >= T::zero() { 1i8 } else { -1i8 };

    let mut rng = stream_rng(seed, 0);
    let mut z = initial.sample(&mut rng);
    let mut rec = TrajectoryRecord::with_capacity(steps + 1);
    rec.push(T::zero(), z, sign_at(T::zero()));
    for k in 0..steps {
        let t0 = dt * T::lit(k as f64);
        let t1 = t0 + dt;
        // Switching instants satisfy ω t + φ = jπ.
        let j_next = ((omega * t0 + phase) / T::PI()).floor() + T::one();
        let t_switch = (j_next * T::PI() - phase) / omega;
        let mid = (t0 + t1) / T::lit(2.0);
        if t_switch > t0 && t_switch < t1 {
            let h1 = t_switch - t0;
            let before = LabStep::new(omega, kappa, n_th, h1);
            let after = LabStep::new(omega, kappa, n_th, dt - h1);
            let s1 = sign_at((t0 + t_switch) / T::lit(2.0));
            let s2 = sign_at((t_switch + t1) / T::lit(2.0));
            z = before.advance(z, amp * T::lit(s1 as f64), &mut rng);
            z = after.advance(z, amp * T::lit(s2 as f64), &mut rng);
        } else {
            z = full.advance(z, amp * T::lit(sign_at(mid) as f64), &mut rng);
        }
        rec.push(t1, demodulate(z, omega * t1), sign_at(t1));
    }
    // Demodulate the initial point too so the whole path is in one frame.
    let q0 = demodulate(Vec2::new(rec.x[0], rec.p[0]), T::zero());
    rec.x[0] = q0.x;
    rec.p[0] = q0.p;
    Ok(rec)
}

/// Drive coefficient recovered from an ensemble of lab-frame paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveFit<T> {
    /// Coefficient c in dp̃/dt = −c·√2·λS_z (rotating-wave value 2/π).
    pub momentum_coefficient: T,
    pub momentum_std_error: T,
    /// Same for x̃ with the opposite sign convention: dx̃/dt = +c·√2·λS_z.
    pub position_coefficient: T,
    pub position_std_error: T,
    pub n_paths: usize,
}

/// Runs `n_paths` thermal-start lab-frame paths and fits the secular drift.
///
/// The statistic is q̃(t) − e^{−κt/2}q̃(0), which removes the initial thermal
/// spread exactly as the protocol's momentum difference does.
pub fn estimate_drive_coefficient<T: Real>(
    p: &SystemParams<T>,
    s: SpinSector,
    t_i: T,
    dt: T,
    phase: T,
    n_paths: usize,
    seed: u64,
) -> Result<DriveFit<T>> {
    if s == SpinSector::Zero {
        return Err(invalid("spin sector", "drift coefficient undefined for S_z = 0"));
    }
    let initial = GaussianState::thermal(p.n_thermal());
    let decay = (-p.kappa() * t_i / T::lit(2.0)).exp();
    let paths: Vec<Result<(f64, f64)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let rec = simulate_labframe_squarewave(p, s, t_i, dt, &initial, seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15)), phase)?;
            let end = rec.last();
            Ok(((end.x - decay * rec.x[0]).as_f64(), (end.p - decay * rec.p[0]).as_f64()))
        })
        .collect();
    let mut mx = Moments::default();
    let mut mp = Moments::default();
    for r in paths {
        let (dx, dp) = r?;
        mx.push(dx);
        mp.push(dp);
    }
    let unit = (T::SQRT_2() * p.lambda_coupling * T::lit(s.s_z() as f64) * one_minus_exp_over(p.kappa() / T::lit(2.0), t_i)).as_f64();
    Ok(DriveFit {
        momentum_coefficient: T::lit(-mp.mean / unit),
        momentum_std_error: T::lit(mp.std_error() / unit.abs()),
        position_coefficient: T::lit(mx.mean / unit),
        position_std_error: T::lit(mx.std_error() / unit.abs()),
        n_paths,
    })
}

/// One Monte-Carlo execution of the heralding protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome<T> {
    pub s_z_true: i32,
    /// Momentum readings.
    pub m1: T,
    pub m2: T,
    /// Position readings, kept for diagnostics only.
    pub m1_x: T,
    pub m2_x: T,
    pub delta_m_stat: T,
    pub accepted: bool,
    /// Whether the two-spin coherence was flipped by dephasing.
    pub dephased: bool,
}

pub(crate) fn sample_sector<R: Rng + ?Sized>(rng: &mut R) -> SpinSector {
    let u: f64 = rng.random();
    if u < 0.25 {
        SpinSector::Down
    } else if u < 0.75 {
        SpinSector::Zero
    } else {
        SpinSector::Up
    }
}

pub(crate) fn finite_alpha<T: Real>(alpha: Threshold<T>) -> Result<T> {
    match alpha {
        Threshold::Finite(a) => Ok(a),
        Threshold::ZeroLimit => Err(invalid("alpha", "Monte Carlo needs a finite window; the alpha -> 0 limit accepts nothing")),
    }
}

/// Probability that dephasing flips the Bell-state phase during `t`.
pub fn phase_flip_probability<T: Real>(gamma: T, t: T) -> T {
    -(T::lit(-2.0) * gamma * t).exp_m1() / T::lit(2.0)
}

pub(crate) fn run_protocol_with<T: Real, R: Rng + ?Sized>(
    p: &SystemParams<T>,
    m: &MeasurementParams<T>,
    alpha: T,
    t: T,
    rng: &mut R,
) -> ProtocolOutcome<T> {
    let s = sample_sector(rng);
    let n_th = p.n_thermal();
    let dm = m.delta_m_sq.sqrt();
    let start = GaussianState::thermal(n_th).sample(rng);
    let m1 = Vec2::new(start.x + dm * normal(rng), start.p + dm * normal(rng));
    let end = evolve_exact(&GaussianState::point(start.x, start.p), p, s, t).sample(rng);
    let m2 = Vec2::new(end.x + dm * normal(rng), end.p + dm * normal(rng));
    let decay = (-p.kappa() * t / T::lit(2.0)).exp();
    let delta = m2.p - decay * m1.p;
    let window = alpha * displacement_mu(p, SpinSector::Up, t).abs() / T::lit(2.0);
    let u: f64 = rng.random();
    let dephased = s == SpinSector::Zero && T::lit(u) < phase_flip_probability(p.gamma, t);
    ProtocolOutcome {
        s_z_true: s.s_z(),
        m1: m1.p,
        m2: m2.p,
        m1_x: m1.x,
        m2_x: m2.x,
        delta_m_stat: delta,
        accepted: delta.abs() < window,
        dephased,
    }
}

/// Single protocol run on stream 0 of `seed`.
pub fn run_protocol<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>, cfg: &ProtocolConfig<T>, seed: u64) -> Result<ProtocolOutcome<T>> {
    cfg.validate()?;
    let alpha = finite_alpha(cfg.alpha)?;
    Ok(run_protocol_with(p, m, alpha, cfg.t_interact, &mut stream_rng(seed, 0)))
}

/// Integer tallies over many runs; merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub runs: u64,
    pub accepted: u64,
    pub accepted_true_positive: u64,
    pub accepted_dephased: u64,
}

impl Tally {
    pub fn record<T>(&mut self, o: &ProtocolOutcome<T>) {
        self.runs += 1;
        if o.accepted {
            self.accepted += 1;
            if o.s_z_true == 0 {
                self.accepted_true_positive += 1;
                if o.dephased {
                    self.accepted_dephased += 1;
                }
            }
        }
    }

    pub fn merge(self, o: Tally) -> Tally {
        Tally {
            runs: self.runs + o.runs,
            accepted: self.accepted + o.accepted,
            accepted_true_positive: self.accepted_true_positive + o.accepted_true_positive,
            accepted_dephased: self.accepted_dephased + o.accepted_dephased,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary<T> {
    pub seed: u64,
    pub t_interact: T,
    pub alpha: T,
    pub tally: Tally,
    /// Fraction of accepted events that are undephased true positives, with
    /// 99% Wilson interval.
    pub fidelity: Proportion<T>,
    pub error: T,
    pub acceptance: Proportion<T>,
    pub rate_tp: Proportion<T>,
    pub rate_fp: Proportion<T>,
}

impl<T: Real> MonteCarloSummary<T> {
    pub fn from_tally(seed: u64, t_interact: T, alpha: T, tally: Tally) -> Self {
        let good = tally.accepted_true_positive - tally.accepted_dephased;
        let fidelity = Proportion::wilson(good, tally.accepted, Z_99);
        MonteCarloSummary {
            seed,
            t_interact,
            alpha,
            tally,
            fidelity,
            error: T::one() - fidelity.estimate,
            acceptance: Proportion::wilson(tally.accepted, tally.runs, Z_99),
            rate_tp: Proportion::wilson(tally.accepted_true_positive, tally.runs, Z_99),
            rate_fp: Proportion::wilson(tally.accepted - tally.accepted_true_positive, tally.runs, Z_99),
        }
    }
}

/// Runs `n_runs` independent protocol executions in parallel.
///
/// Run `i` draws from stream `i` of `seed`, so the summary does not depend
/// on thread scheduling.
pub fn monte_carlo<T: Real>(
    p: &SystemParams<T>,
    m: &MeasurementParams<T>,
    cfg: &ProtocolConfig<T>,
    n_runs: u64,
    seed: u64,
) -> Result<MonteCarloSummary<T>> {
    if n_runs == 0 {
        return Err(invalid("n_runs", "must be >= 1"));
    }
    cfg.validate()?;
    let alpha = finite_alpha(cfg.alpha)?;
    let t = cfg.t_interact;
    let tally = (0..n_runs)
        .into_par_iter()
        .fold(Tally::default, |mut acc, i| {
            let o = run_protocol_with(p, m, alpha, t, &mut stream_rng(seed, i));
            acc.record(&o);
            acc
        })
        .reduce(Tally::default, Tally::merge);
    Ok(MonteCarloSummary::from_tally(seed, t, alpha, tally))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> SystemParams<f64> {
        SystemParams::from_lab_units(10e-3, 1e9, 880.0, 293.0).unwrap()
    }

    #[test]
    fn thermal_state_is_fixed_point() {
        let p = params();
        let th = GaussianState::thermal(p.n_thermal());
        let out = evolve_exact(&th, &p, SpinSector::Zero, 3.7);
        assert_relative_eq!(out.cov.a, th.cov.a, max_relative = 1e-12);
        assert_eq!(out.mean, Vec2::zero());
    }

    #[test]
    fn long_time_limit_with_drive() {
        let p = params();
        let out = evolve_exact(&GaussianState::point(5.0, 5.0), &p, SpinSector::Up, 1e5);
        let sat = -4.0 * 2f64.sqrt() * p.lambda_coupling * 2.0 / (std::f64::consts::PI * p.kappa());
        assert!(out.mean.x.abs() < 1e-12);
        assert_relative_eq!(out.mean.p, sat, max_relative = 1e-12);
        assert_relative_eq!(out.cov.a, p.n_thermal(), max_relative = 1e-12);
    }

    #[test]
    fn half_steps_compose() {
        let p = params();
        let s0 = GaussianState { mean: Vec2::new(3.0, -2.0), cov: Mat2::sym(4.0, 0.5, 2.0) };
        let whole = evolve_exact(&s0, &p, SpinSector::Down, 0.2);
        let halves = evolve_exact(&evolve_exact(&s0, &p, SpinSector::Down, 0.1), &p, SpinSector::Down, 0.1);
        assert_relative_eq!(whole.mean.p, halves.mean.p, max_relative = 1e-12);
        assert_relative_eq!(whole.mean.x, halves.mean.x, max_relative = 1e-12);
        assert!((whole.cov - halves.cov).norm() <= 1e-12 * whole.cov.norm());
    }

    #[test]
    fn covariance_conserved_without_damping() {
        let p = SystemParams::<f64>::from_lab_units(10e-3, f64::INFINITY, 880.0, 293.0).unwrap();
        let s0 = GaussianState { mean: Vec2::new(1.0, 1.0), cov: Mat2::sym(4.0, 0.5, 2.0) };
        assert_eq!(evolve_exact(&s0, &p, SpinSector::Zero, 10.0), s0);
    }

    #[test]
    fn undamped_undriven_path_is_constant() {
        let p = SystemParams::<f64>::from_lab_units(10e-3, f64::INFINITY, 880.0, 293.0).unwrap();
        let rec = sample_trajectory(&p, SpinSector::Zero, 1e-3, 1e-6, &GaussianState::point(2.0, -1.0), 7).unwrap();
        assert!(rec.x.iter().all(|&x| x == 2.0));
        assert!(rec.p.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn coarse_steps_are_refused() {
        let p = params();
        let err = sample_trajectory(&p, SpinSector::Up, 1e-3, 1e-4, &GaussianState::point(0.0, 0.0), 1);
        assert!(matches!(err, Err(Error::StepTooCoarse { .. })));
        let err = simulate_labframe_squarewave(&p, SpinSector::Up, 1e-3, 1e-7, &GaussianState::point(0.0, 0.0), 1, 0.0);
        assert!(matches!(err, Err(Error::StepTooCoarse { .. })));
    }

    #[test]
    fn strongly_separated_protocol_accepts_only_dfs() {
        // Noise-free measurement and no damping: any visible force rejects.
        let p = SystemParams::<f64>::from_lab_units(10e-3, f64::INFINITY, 5e3, 293.0).unwrap();
        let cfg = ProtocolConfig::new(Threshold::Finite(1.0), 1e-3).unwrap();
        let s = monte_carlo(&p, &MeasurementParams::ideal(), &cfg, 20_000, 3).unwrap();
        assert_eq!(s.tally.accepted, s.tally.accepted_true_positive);
        assert!(s.acceptance.contains(0.5));
    }

    #[test]
    fn vanishing_window_accepts_nothing() {
        let p = params();
        let cfg = ProtocolConfig::new(Threshold::Finite(0.4), 1e-12).unwrap();
        let s = monte_carlo(&p, &MeasurementParams::with_delta_m_sq(27.0), &cfg, 2_000, 3).unwrap();
        assert_eq!(s.tally.accepted, 0);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_validates_input() {
        let p = params();
        let m = MeasurementParams::with_delta_m_sq(27.0);
        let cfg = ProtocolConfig::new(Threshold::Finite(0.4), 3.1e-3).unwrap();
        let a = monte_carlo(&p, &m, &cfg, 5_000, 11).unwrap();
        let b = monte_carlo(&p, &m, &cfg, 5_000, 11).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo(&p, &m, &cfg, 0, 11).is_err());
        let one = monte_carlo(&p, &m, &cfg, 1, 11).unwrap();
        assert_eq!((one.acceptance.lower, one.acceptance.upper), (0.0, 1.0));
        let zero = ProtocolConfig { alpha: Threshold::ZeroLimit, ..cfg };
        assert!(monte_carlo(&p, &m, &zero, 10, 1).is_err());
    }

    #[test]
    fn single_run_respects_threshold_invariant() {
        let p = params();
        let m = MeasurementParams::with_delta_m_sq(27.0);
        let cfg = ProtocolConfig::new(Threshold::Finite(0.4), 3.1e-3).unwrap();
        for seed in 0..50 {
            let o = run_protocol(&p, &m, &cfg, seed).unwrap();
            let window = 0.4 * displacement_mu(&p, SpinSector::Up, 3.1e-3).abs() / 2.0;
            assert_eq!(o.accepted, o.delta_m_stat.abs() < window);
            assert!(!o.dephased || o.s_z_true == 0);
        }
    }
}
