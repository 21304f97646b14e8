//! Kalman estimation of the resonator from a shot-noise-limited
//! interferometric position record.
//!
//! The model works in lab-frame quadratures (thermal variance n_th):
//!
//! ```text
//! d(x, p)ᵀ = F (x, p)ᵀ dt + L dW,   F = [[0, ω], [−ω, −κ]],  L = (0, 1),  Q_c = 2κn_th
//! z dt     = h·x dt + dN,           ⟨dN²⟩ = R_noise dt
//! ```
//!
//! An interferometer with detected photon flux R reads position with gain
//! √2·k·R per quadrature unit (k = 2πz_p/λ_l) against shot noise of
//! intensity R, so the measurement rate is h²/R = 2k²R.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{lyapunov, Mat2, Vec2};
use crate::mech_sim::{normal, stream_rng};
use crate::params::{MeasurementParams, SystemParams};
use crate::quadrature::integrate;
use crate::scalar::Real;

/// Readout variances such as Δm² are quoted in (x/z_p)² units, in which a
/// quadrature variance of 1 reads as 2.
pub const RESOLUTION_UNITS_PER_QUADRATURE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterModel<T> {
    pub f: Mat2<T>,
    pub l: Vec2<T>,
    pub q_c: T,
    /// Measurement row (position-only readout has `h.p = 0`).
    pub h: Vec2<T>,
    pub r_noise: T,
}

impl<T: Real> FilterModel<T> {
    pub fn new(omega: T, kappa: T, n_th: T, h_x: T, r_noise: T) -> Result<Self> {
        let model = FilterModel {
            f: Mat2::new(T::zero(), omega, -omega, -kappa),
            l: Vec2::new(T::zero(), T::one()),
            q_c: T::lit(2.0) * kappa * n_th,
            h: Vec2::new(h_x, T::zero()),
            r_noise,
        };
        model.validate()?;
        Ok(model)
    }

    /// Interferometric readout of the given resonator. Zero flux gives an
    /// unobserved model (h = 0).
    pub fn interferometer(p: &SystemParams<T>, m: &MeasurementParams<T>) -> Result<Self> {
        let flux = m.effective_flux();
        let k = wavenumber_scale(p, m);
        let (h, r) = if flux > T::zero() { (T::SQRT_2() * k * flux, flux) } else { (T::zero(), T::one()) };
        Self::new(p.omega_r, p.kappa(), p.n_thermal(), h, r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_c >= T::zero()) {
            return Err(invalid("q_c", "process noise intensity must be >= 0"));
        }
        if !(self.r_noise > T::zero()) {
            return Err(invalid("r_noise", "measurement noise intensity must be > 0"));
        }
        if self.f.eigenvalues().iter().any(|&(re, _)| re > T::zero()) {
            return Err(invalid("f", "evolution matrix has an unstable mode"));
        }
        Ok(())
    }

    /// h²/R_noise.
    pub fn measurement_rate(&self) -> T {
        self.h.dot(self.h) / self.r_noise
    }

    /// Hᵀ R⁻¹ H.
    fn info(&self) -> Mat2<T> {
        let h = self.h;
        Mat2::sym(h.x * h.x, h.x * h.p, h.p * h.p).scale(self.r_noise.recip())
    }

    /// L Q_c Lᵀ.
    fn process(&self) -> Mat2<T> {
        let l = self.l;
        Mat2::sym(l.x * l.x, l.x * l.p, l.p * l.p).scale(self.q_c)
    }

    /// Damping and n_th implied by F and Q_c.
    pub fn kappa(&self) -> T {
        -self.f.d
    }

    pub fn thermal_covariance(&self) -> Mat2<T> {
        let kappa = self.kappa();
        let n = if kappa > T::zero() { self.q_c / (T::lit(2.0) * kappa) } else { T::infinity() };
        Mat2::diag(n, n)
    }

    /// Rotating-wave estimate of the steady state: each quadrature sees half
    /// the measurement rate and half the process noise.
    pub fn isotropic_guess(&self) -> T {
        let c = self.measurement_rate();
        let kappa = self.kappa();
        if c == T::zero() {
            return self.thermal_covariance().a;
        }
        (-kappa + (kappa * kappa + c * self.q_c).sqrt()) / c
    }

    /// Normalized Riccati residual ‖FP + PFᵀ + Q − PSP‖ divided by the sum of
    /// the term norms (a backward error, independent of ω-scale).
    pub fn riccati_residual(&self, p: Mat2<T>) -> T {
        let fp = self.f * p;
        let pft = p * self.f.transpose();
        let q = self.process();
        let psp = p * self.info() * p;
        let res = fp + pft + q - psp;
        let scale = fp.norm() + pft.norm() + q.norm() + psp.norm();
        if scale == T::zero() {
            T::zero()
        } else {
            res.norm() / scale
        }
    }

    /// Exact one-step transition and integrated process noise for step `dt`.
    pub fn discretize(&self, dt: T) -> (Mat2<T>, Mat2<T>) {
        let phi = self.f.scale(dt).expm();
        let q = self.process();
        let f = self.f;
        let entry = |pick: fn(Mat2<T>) -> T| {
            let g = |s: T| pick((f.scale(s)).expm().congruence(q));
            integrate(g, T::zero(), dt, T::lit(1e-12).max(T::epsilon() * T::lit(8.0))).0
        };
        let qd = Mat2::sym(entry(|m| m.a), entry(|m| m.b), entry(|m| m.d));
        (phi, qd)
    }
}

/// k = 2πz_p/λ_l.
pub fn wavenumber_scale<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>) -> T {
    T::TAU() * p.zp / m.laser_wavelength
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiccatiMethod {
    Newton,
    DoublingThenNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiSolution<T> {
    pub p: Mat2<T>,
    pub residual: T,
    pub iterations: usize,
    pub method: RiccatiMethod,
}

impl<T: Real> RiccatiSolution<T> {
    /// Steady-state position variance expressed as a readout resolution Δm².
    pub fn delta_m_sq(&self) -> T {
        self.p.a * T::lit(RESOLUTION_UNITS_PER_QUADRATURE)
    }

    /// (|P₁₁ − P₂₂|/P₁₁, |P₁₂|/P₁₁)
    pub fn anisotropy(&self) -> (T, T) {
        ((self.p.a - self.p.d).abs() / self.p.a, self.p.b.abs() / self.p.a)
    }
}

/// Newton–Kleinman iteration: each step solves the Lyapunov equation of the
/// closed loop F − P_k S.
fn newton<T: Real>(model: &FilterModel<T>, mut p: Mat2<T>, max_iter: usize) -> Option<(Mat2<T>, usize)> {
    let s = model.info();
    let q = model.process();
    let tol = T::epsilon() * T::lit(64.0);
    for it in 1..=max_iter {
        let a = model.f - p * s;
        let next = lyapunov(a, q + p * s * p)?.symmetrized();
        if !next.is_finite() {
            return None;
        }
        let step = (next - p).norm();
        p = next;
        if step <= tol * p.norm() {
            return Some((p, it));
        }
    }
    Some((p, max_iter))
}

/// Structure-preserving doubling on a finely discretized model. The discrete
/// solution differs from the continuous one at O(Δ); callers polish it.
pub fn riccati_doubling<T: Real>(model: &FilterModel<T>) -> Option<Mat2<T>> {
    let fastest = model.f.norm().max(model.measurement_rate().sqrt() * model.q_c.sqrt()).max(T::min_positive_value());
    let dt = T::lit(0.05) / fastest;
    let (phi, qd) = model.discretize(dt);
    let g0 = model.info().scale(dt);
    let mut a = phi.transpose();
    let mut g = g0;
    let mut h = qd;
    for _ in 0..200 {
        let w = (Mat2::identity() + g * h).inverse()?;
        let a_next = a * w * a;
        let g_next = (g + a * w * g * a.transpose()).symmetrized();
        let h_next = (h + a.transpose() * h * w * a).symmetrized();
        let done = (h_next - h).norm() <= T::epsilon() * T::lit(64.0) * h_next.norm();
        a = a_next;
        g = g_next;
        h = h_next;
        if !h.is_finite() {
            return None;
        }
        if done {
            return Some(h);
        }
    }
    Some(h)
}

/// Stabilizing solution of 0 = FP + PFᵀ + LQ_cLᵀ − PHᵀR⁻¹HP.
pub fn riccati_steady_state<T: Real>(model: &FilterModel<T>) -> Result<RiccatiSolution<T>> {
    model.validate()?;
    let tol = T::solver_tol();
    let g = model.isotropic_guess();
    if let Some((p, it)) = newton(model, Mat2::diag(g, g), 100) {
        let residual = model.riccati_residual(p);
        if residual <= tol && p.a >= T::zero() && p.d >= T::zero() {
            return Ok(RiccatiSolution { p, residual, iterations: it, method: RiccatiMethod::Newton });
        }
    }
    let start = riccati_doubling(model).ok_or(Error::RiccatiNotConverged { residual: f64::NAN })?;
    let (p, it) = newton(model, start, 100).ok_or(Error::RiccatiNotConverged { residual: f64::NAN })?;
    let residual = model.riccati_residual(p);
    if residual <= tol {
        Ok(RiccatiSolution { p, residual, iterations: it, method: RiccatiMethod::DoublingThenNewton })
    } else {
        Err(Error::RiccatiNotConverged { residual: residual.as_f64() })
    }
}

/// Closed-form readout resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMClosedForm<T> {
    /// 2(λ_l/2πz_p)√(κn_th/R).
    pub expanded: T,
    /// (−κ + √(κ² + 4Rκn_th k²)) / (Rk²).
    pub exact_root: T,
    /// Backaction can be neglected only for Δm² ≥ 1.
    pub backaction_negligible: bool,
}

pub fn delta_m_closed_form<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>) -> DeltaMClosedForm<T> {
    let k = wavenumber_scale(p, m);
    let r = m.effective_flux();
    let kappa = p.kappa();
    let kn = p.thermal_rate();
    let expanded = T::lit(2.0) / k * (kn / r).sqrt();
    let rk2 = r * k * k;
    let exact_root = (-kappa + (kappa * kappa + T::lit(4.0) * rk2 * kn).sqrt()) / rk2;
    DeltaMClosedForm { expanded, exact_root, backaction_negligible: expanded >= T::one() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseBudget<T> {
    pub tau_m: T,
    /// (λ_l/2πz_p)²/(Rτ_m).
    pub imprecision: T,
    /// κn_th·τ_m.
    pub diffusion: T,
    pub total: T,
    /// (λ_l/2πz_p)/√(Rn_thκ).
    pub tau_opt: T,
    /// 2(λ_l/2πz_p)√(κn_th/R).
    pub optimum: T,
}

/// Imprecision/diffusion trade-off of a measurement lasting `tau_m`.
pub fn shot_noise_budget<T: Real>(m: &MeasurementParams<T>, p: &SystemParams<T>, tau_m: T) -> Result<ShotNoiseBudget<T>> {
    if !(tau_m > T::zero()) {
        return Err(invalid("tau_m", format!("must be > 0, got {tau_m}")));
    }
    let inv_k = wavenumber_scale(p, m).recip();
    let r = m.effective_flux();
    let kn = p.thermal_rate();
    let imprecision = inv_k * inv_k / (r * tau_m);
    let diffusion = kn * tau_m;
    Ok(ShotNoiseBudget {
        tau_m,
        imprecision,
        diffusion,
        total: imprecision + diffusion,
        tau_opt: inv_k / (r * kn).sqrt(),
        optimum: T::lit(2.0) * inv_k * (kn / r).sqrt(),
    })
}

/// Interaction times must exceed (λ_l/πz_p)(κRn_th)^{−1/2} for the readout to
/// resolve the spin signal.
pub fn min_interaction_time<T: Real>(p: &SystemParams<T>, m: &MeasurementParams<T>) -> T {
    T::lit(2.0) / wavenumber_scale(p, m) / (p.thermal_rate() * m.effective_flux()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterState<T> {
    pub t: T,
    pub mean: Vec2<T>,
    pub cov: Mat2<T>,
}

impl<T: Real> FilterState<T> {
    pub fn thermal(model: &FilterModel<T>) -> Self {
        FilterState { t: T::zero(), mean: Vec2::zero(), cov: model.thermal_covariance() }
    }
}

/// Discrete Kalman filter stepping at fixed `dt`.
#[derive(Debug, Clone)]
pub struct KalmanFilter<T> {
    model: FilterModel<T>,
    dt: T,
    phi: Mat2<T>,
    qd: Mat2<T>,
    r_d: T,
    pub state: FilterState<T>,
    limit: T,
    step: usize,
}

impl<T: Real> KalmanFilter<T> {
    pub fn new(model: FilterModel<T>, dt: T, initial: FilterState<T>) -> Result<Self> {
        model.validate()?;
        let period = T::TAU() / model.f.b.abs();
        if !(dt > T::zero()) || dt > T::lit(0.05) * period {
            return Err(Error::StepTooCoarse {
                dt: dt.as_f64(),
                limit: 0.05 * period.as_f64(),
                reason: "filter sampling must resolve the mechanical period",
            });
        }
        let (phi, qd) = model.discretize(dt);
        let thermal = model.thermal_covariance().trace();
        let limit = T::lit(1e6) * (initial.cov.trace() + if thermal.is_finite() { thermal } else { T::zero() }).max(T::one());
        Ok(KalmanFilter { model, dt, phi, qd, r_d: model.r_noise / dt, state: initial, limit, step: 0 })
    }

    pub fn predict(&mut self) {
        let s = &mut self.state;
        s.mean = self.phi.apply(s.mean);
        s.cov = self.phi.congruence(s.cov) + self.qd;
        s.t = s.t + self.dt;
    }

    /// Joseph-form update with a sample `z` of the detector signal, whose
    /// per-sample noise variance is R_noise/dt.
    pub fn update(&mut self, z: T) -> Result<()> {
        self.step += 1;
        let h = self.model.h;
        if h.x != T::zero() || h.p != T::zero() {
            let s = &mut self.state;
            let ph = s.cov.apply(h);
            let innov_var = h.dot(ph) + self.r_d;
            let k = ph.scale(innov_var.recip());
            s.mean = s.mean + k.scale(z - h.dot(s.mean));
            let ikh = Mat2::identity() - Mat2::new(k.x * h.x, k.x * h.p, k.p * h.x, k.p * h.p);
            s.cov = ikh.congruence(s.cov) + Mat2::sym(k.x * k.x, k.x * k.p, k.p * k.p).scale(self.r_d);
        }
        let tr = self.state.cov.trace();
        if !tr.is_finite() || !self.state.mean.x.is_finite() || tr > self.limit {
            return Err(Error::FilterDiverged { step: self.step, trace: tr.as_f64() });
        }
        Ok(())
    }
}

/// Filters a uniformly sampled record starting from `initial` at the first
/// sample time. The first sample is an update only.
pub fn run_filter_from<T: Real>(model: &FilterModel<T>, record: &[T], dt: T, initial: FilterState<T>) -> Result<Vec<FilterState<T>>> {
    let mut kf = KalmanFilter::new(*model, dt, initial)?;
    let mut out = Vec::with_capacity(record.len());
    for (i, &z) in record.iter().enumerate() {
        if i > 0 {
            kf.predict();
        }
        kf.update(z)?;
        out.push(kf.state);
    }
    Ok(out)
}

/// [`run_filter_from`] with the thermal prior.
pub fn run_filter<T: Real>(model: &FilterModel<T>, record: &[T], dt: T) -> Result<Vec<FilterState<T>>> {
    run_filter_from(model, record, dt, FilterState::thermal(model))
}

/// Simulated resonator path and its detector record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecord<T> {
    pub dt: T,
    pub truth: Vec<Vec2<T>>,
    pub z: Vec<T>,
}

/// Lab-frame thermal motion propagated exactly, read out with white shot noise.
pub fn synthesize_record<T: Real>(model: &FilterModel<T>, n_samples: usize, dt: T, seed: u64) -> SyntheticRecord<T> {
    let mut rng = stream_rng(seed, 0);
    synthesize_with(model, n_samples, dt, &mut rng)
}

fn synthesize_with<T: Real, R: Rng + ?Sized>(model: &FilterModel<T>, n: usize, dt: T, rng: &mut R) -> SyntheticRecord<T> {
    let (phi, qd) = model.discretize(dt);
    let chol = qd.cholesky();
    let th = model.thermal_covariance();
    let start_chol = if th.is_finite() { th.cholesky() } else { Mat2::zero() };
    let mut x = start_chol.apply(Vec2::new(normal(rng), normal(rng)));
    let noise = (model.r_noise / dt).sqrt();
    let mut truth = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            x = phi.apply(x) + chol.apply(Vec2::new(normal(rng), normal(rng)));
        }
        truth.push(x);
        z.push(model.h.dot(x) + noise * normal(rng));
    }
    SyntheticRecord { dt, truth, z }
}

/// Empirical estimation-error statistics of the filter on synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterErrorStats {
    pub samples: u64,
    pub mean_x: f64,
    pub mean_x_std_error: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
}

/// Runs `runs` independent synthetic records of `n_samples` each, discards
/// the first `burn_in` samples of every run and pools the estimation errors.
pub fn filter_error_statistics<T: Real>(
    model: &FilterModel<T>,
    dt: T,
    n_samples: usize,
    burn_in: usize,
    runs: u64,
    seed: u64,
) -> Result<FilterErrorStats> {
    let parts: Vec<Result<[f64; 6]>> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let rec = synthesize_with(model, n_samples, dt, &mut rng);
            let est = run_filter(model, &rec.z, dt)?;
            let mut acc = [0.0; 6];
            for (e, x) in est.iter().zip(&rec.truth).skip(burn_in) {
                let ex = (e.mean.x - x.x).as_f64();
                let ep = (e.mean.p - x.p).as_f64();
                acc[0] += 1.0;
                acc[1] += ex;
                acc[2] += ep;
                acc[3] += ex * ex;
                acc[4] += ep * ep;
                acc[5] += ex * ep;
            }
            Ok(acc)
        })
        .collect();
    let mut tot = [0.0; 6];
    for p in parts {
        for (t, v) in tot.iter_mut().zip(p?) {
            *t += v;
        }
    }
    let n = tot[0];
    let (mx, mp) = (tot[1] / n, tot[2] / n);
    let var_x = tot[3] / n - mx * mx;
    Ok(FilterErrorStats {
        samples: n as u64,
        mean_x: mx,
        // Errors are correlated in time; this is the naive iid figure.
        mean_x_std_error: (var_x / n).sqrt(),
        var_x,
        var_p: tot[4] / n - mp * mp,
        cov_xp: tot[5] / n - mx * mp,
    })
}
