//! Physical parameters, unit conventions and derived rates.
//!
//! Internally every frequency is angular (rad/s). Configs and presets use the
//! lab convention of quoting λ/2π and ω_r/2π in Hz.

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light [m/s].
pub const C_LIGHT: f64 = 299_792_458.0;

pub const DEFAULT_OMEGA_R_OVER_2PI_HZ: f64 = 1e6;
/// NV ground-state splitting, used only for the regime check.
pub const DEFAULT_OMEGA_S_OVER_2PI_HZ: f64 = 2.87e9;
pub const DEFAULT_ZP_M: f64 = 1e-14;
pub const DEFAULT_LASER_WAVELENGTH_M: f64 = 1550e-9;
pub const DEFAULT_LASER_POWER_W: f64 = 1e-3;

/// Hardware parameters of one spin pair and its shared resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    /// Spin dephasing rate Γ [1/s].
    pub gamma: T,
    pub q_factor: T,
    /// Spin–phonon coupling λ [rad/s].
    pub lambda_coupling: T,
    /// Bath temperature [K].
    pub temperature: T,
    /// Resonator frequency ω_r [rad/s].
    pub omega_r: T,
    /// Spin transition frequency ω_s [rad/s].
    pub omega_s: T,
    /// Zero-point motion [m].
    pub zp: T,
    /// Effective mass [kg].
    pub mass: T,
}

impl<T: Real> SystemParams<T> {
    /// Builds parameters from lab units with default ω_r, ω_s and z_p.
    ///
    /// The mass is derived from z_p = √(ħ / 2mω_r).
    pub fn from_lab_units(gamma_inv_s: f64, q_factor: f64, lambda_over_2pi_hz: f64, temperature_k: f64) -> Result<Self> {
        Self::builder(gamma_inv_s, q_factor, lambda_over_2pi_hz, temperature_k).build()
    }

    pub fn builder(gamma_inv_s: f64, q_factor: f64, lambda_over_2pi_hz: f64, temperature_k: f64) -> SystemParamsBuilder<T> {
        SystemParamsBuilder {
            scalar: PhantomData,
            gamma_inv_s,
            q_factor,
            lambda_over_2pi_hz,
            temperature_k,
            omega_r_over_2pi_hz: DEFAULT_OMEGA_R_OVER_2PI_HZ,
            omega_s_over_2pi_hz: DEFAULT_OMEGA_S_OVER_2PI_HZ,
            zp_m: DEFAULT_ZP_M,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("lambda_coupling", self.lambda_coupling),
            ("temperature", self.temperature),
            ("omega_r", self.omega_r),
            ("omega_s", self.omega_s),
            ("zp", self.zp),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > T::zero()) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        // Q = ∞ is allowed (no mechanical damping); Q < 10 is not a resonator.
        if self.q_factor.is_nan() || self.q_factor < T::lit(10.0) {
            return Err(invalid("q_factor", format!("must be >= 10, got {}", self.q_factor)));
        }
        Ok(())
    }

    /// Mechanical damping rate κ = ω_r / Q.
    pub fn kappa(&self) -> T {
        self.omega_r / self.q_factor
    }

    /// Bose occupation 1/(e^{ħω_r/k_BT} − 1).
    pub fn n_thermal(&self) -> T {
        let x = (HBAR / K_B) * self.omega_r.as_f64() / self.temperature.as_f64();
        T::lit(1.0 / x.exp_m1())
    }

    /// Thermal decoherence rate κ·n_th.
    pub fn thermal_rate(&self) -> T {
        self.kappa() * self.n_thermal()
    }

    /// C = λ² / (Γ κ n_th).
    pub fn cooperativity(&self) -> T {
        self.lambda_coupling * self.lambda_coupling / (self.gamma * self.thermal_rate())
    }

    /// Warnings for violations of λ ≪ ω_r ≪ ω_s (factor-100 margins).
    pub fn regime_warnings(&self) -> Vec<String> {
        let margin = T::lit(100.0);
        let mut out = Vec::new();
        if self.lambda_coupling * margin > self.omega_r {
            out.push(format!(
                "coupling λ = {} rad/s is not ≪ ω_r = {} rad/s",
                self.lambda_coupling, self.omega_r
            ));
        }
        if self.omega_r * margin > self.omega_s {
            out.push(format!("ω_r = {} rad/s is not ≪ ω_s = {} rad/s", self.omega_r, self.omega_s));
        }
        out
    }

    /// Returns a copy with a different coupling, keeping everything else.
    pub fn with_lambda(self, lambda_coupling: T) -> Self {
        SystemParams { lambda_coupling, ..self }
    }
}

/// Lab-unit builder for [`SystemParams`].
#[derive(Debug, Clone)]
pub struct SystemParamsBuilder<T> {
    scalar: PhantomData<T>,
    gamma_inv_s: f64,
    q_factor: f64,
    lambda_over_2pi_hz: f64,
    temperature_k: f64,
    omega_r_over_2pi_hz: f64,
    omega_s_over_2pi_hz: f64,
    zp_m: f64,
}

impl<T: Real> SystemParamsBuilder<T> {
    pub fn omega_r_over_2pi_hz(mut self, v: f64) -> Self {
        self.omega_r_over_2pi_hz = v;
        self
    }

    pub fn omega_s_over_2pi_hz(mut self, v: f64) -> Self {
        self.omega_s_over_2pi_hz = v;
        self
    }

    pub fn zp_m(mut self, v: f64) -> Self {
        self.zp_m = v;
        self
    }

    pub fn build(self) -> Result<SystemParams<T>> {
        if !(self.gamma_inv_s.is_finite() && self.gamma_inv_s > 0.0) {
            return Err(invalid("gamma_inv_s", format!("must be finite and > 0, got {}", self.gamma_inv_s)));
        }
        let tau = 2.0 * std::f64::consts::PI;
        let omega_r = tau * self.omega_r_over_2pi_hz;
        let p = SystemParams {
            gamma: T::lit(1.0 / self.gamma_inv_s),
            q_factor: T::lit(self.q_factor),
            lambda_coupling: T::lit(tau * self.lambda_over_2pi_hz),
            temperature: T::lit(self.temperature_k),
            omega_r: T::lit(omega_r),
            omega_s: T::lit(tau * self.omega_s_over_2pi_hz),
            zp: T::lit(self.zp_m),
            mass: T::lit(HBAR / (2.0 * omega_r * self.zp_m * self.zp_m)),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Resonator readout characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams<T> {
    /// Single-shot measurement variance Δm² in quadrature units.
    pub delta_m_sq: T,
    /// Laser wavelength λ_l [m].
    pub laser_wavelength: T,
    /// Photon flux R [1/s].
    pub photon_flux: T,
    pub eta_det: T,
    pub eta_geo: T,
}

impl<T: Real> MeasurementParams<T> {
    /// Given Δm², with a 1 mW, 1550 nm readout laser and unit efficiencies.
    pub fn with_delta_m_sq(delta_m_sq: T) -> Self {
        MeasurementParams {
            delta_m_sq,
            laser_wavelength: T::lit(DEFAULT_LASER_WAVELENGTH_M),
            photon_flux: T::lit(photon_flux_for_power(DEFAULT_LASER_POWER_W, DEFAULT_LASER_WAVELENGTH_M)),
            eta_det: T::one(),
            eta_geo: T::one(),
        }
    }

    pub fn ideal() -> Self {
        Self::with_delta_m_sq(T::zero())
    }

    /// Replaces the flux by that of a laser of the given power [W].
    pub fn with_power(self, power_w: f64) -> Self {
        MeasurementParams {
            photon_flux: T::lit(photon_flux_for_power(power_w, self.laser_wavelength.as_f64())),
            ..self
        }
    }

    /// Detected photon flux η_det·η_geo·R.
    pub fn effective_flux(&self) -> T {
        self.photon_flux * self.eta_det * self.eta_geo
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_m_sq >= T::zero() && self.delta_m_sq.is_finite()) {
            return Err(invalid("delta_m_sq", format!("must be finite and >= 0, got {}", self.delta_m_sq)));
        }
        if !(self.photon_flux >= T::zero() && self.photon_flux.is_finite()) {
            return Err(invalid("photon_flux", format!("must be finite and >= 0, got {}", self.photon_flux)));
        }
        if !(self.laser_wavelength > T::zero()) {
            return Err(invalid("laser_wavelength", "must be > 0"));
        }
        for (name, v) in [("eta_det", self.eta_det), ("eta_geo", self.eta_geo)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Photons per second in a beam of the given power and wavelength.
pub fn photon_flux_for_power(power_w: f64, wavelength_m: f64) -> f64 {
    power_w * wavelength_m / (2.0 * std::f64::consts::PI * HBAR * C_LIGHT)
}

/// Acceptance-window parameter α.
///
/// The α → 0 limit is kept symbolic so that success probabilities use their
/// exact limit forms instead of 0/0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold<T> {
    ZeroLimit,
    Finite(T),
}

impl<T: Real> Threshold<T> {
    pub fn finite(alpha: T) -> Result<Self> {
        if alpha > T::zero() && alpha <= T::one() {
            Ok(Threshold::Finite(alpha))
        } else {
            Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")))
        }
    }

    /// Numeric α, with the limit mapped to 0.
    pub fn value(&self) -> T {
        match *self {
            Threshold::ZeroLimit => T::zero(),
            Threshold::Finite(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseVariant {
    StandardTwoMeasurement,
    EchoThreeMeasurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig<T> {
    pub alpha: Threshold<T>,
    /// Interaction time t_I [s].
    pub t_interact: T,
    /// Phase φ of the toggling square wave [rad].
    pub pulse_phase: T,
    pub variant: PulseVariant,
}

impl<T: Real> ProtocolConfig<T> {
    pub fn new(alpha: Threshold<T>, t_interact: T) -> Result<Self> {
        let cfg = ProtocolConfig {
            alpha,
            t_interact,
            pulse_phase: T::FRAC_PI_2(),
            variant: PulseVariant::StandardTwoMeasurement,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn echo(self) -> Self {
        ProtocolConfig { variant: PulseVariant::EchoThreeMeasurement, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if let Threshold::Finite(a) = self.alpha {
            Threshold::finite(a)?;
        }
        if !(self.t_interact > T::zero() && self.t_interact.is_finite()) {
            return Err(invalid("t_interact", format!("must be finite and > 0, got {}", self.t_interact)));
        }
        Ok(())
    }
}

/// Key/value parameter file (TOML syntax).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamConfig {
    pub gamma_inv_s: f64,
    pub q_factor: f64,
    pub lambda_over_2pi_hz: f64,
    pub temperature_k: f64,
    #[serde(default = "default_omega_r")]
    pub omega_r_over_2pi_hz: f64,
    #[serde(default)]
    pub delta_m_sq: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub zp_m: Option<f64>,
    #[serde(default)]
    pub omega_s_over_2pi_hz: Option<f64>,
    #[serde(default)]
    pub laser_wavelength_m: Option<f64>,
    #[serde(default)]
    pub laser_power_w: Option<f64>,
}

fn default_omega_r() -> f64 {
    DEFAULT_OMEGA_R_OVER_2PI_HZ
}

fn default_alpha() -> f64 {
    0.4
}

impl ParamConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn system<T: Real>(&self) -> Result<SystemParams<T>> {
        let mut b = SystemParams::<T>::builder(self.gamma_inv_s, self.q_factor, self.lambda_over_2pi_hz, self.temperature_k)
            .omega_r_over_2pi_hz(self.omega_r_over_2pi_hz);
        if let Some(z) = self.zp_m {
            b = b.zp_m(z);
        }
        if let Some(w) = self.omega_s_over_2pi_hz {
            b = b.omega_s_over_2pi_hz(w);
        }
        b.build()
    }

    pub fn measurement<T: Real>(&self) -> Result<MeasurementParams<T>> {
        let mut m = MeasurementParams::with_delta_m_sq(T::lit(self.delta_m_sq));
        if let Some(l) = self.laser_wavelength_m {
            m.laser_wavelength = T::lit(l);
        }
        m = m.with_power(self.laser_power_w.unwrap_or(DEFAULT_LASER_POWER_W));
        m.validate()?;
        Ok(m)
    }

    pub fn threshold<T: Real>(&self) -> Result<Threshold<T>> {
        Threshold::finite(T::lit(self.alpha))
    }
}

/// A named parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub gamma_inv_s: f64,
    pub q_factor: f64,
    pub lambda_over_2pi_hz: f64,
    pub temperature_k: f64,
    pub delta_m_sq: f64,
}

/// Example hardware points spanning cryogenic to room-temperature operation,
/// all with ω_r/2π = 1 MHz and α = 0.4.
pub const PRESETS: [Preset; 6] = [
    Preset { name: "table1-row1", gamma_inv_s: 10e-3, q_factor: 1e7, lambda_over_2pi_hz: 450.0, temperature_k: 4.0, delta_m_sq: 24.0 },
    Preset { name: "table1-row2", gamma_inv_s: 1.6, q_factor: 1e9, lambda_over_2pi_hz: 100.0, temperature_k: 4.0, delta_m_sq: 8.0 },
    Preset { name: "table1-row3", gamma_inv_s: 0.6, q_factor: 1e9, lambda_over_2pi_hz: 1000.0, temperature_k: 77.0, delta_m_sq: 10.0 },
    Preset { name: "table1-row4", gamma_inv_s: 10e-3, q_factor: 1e9, lambda_over_2pi_hz: 400.0, temperature_k: 293.0, delta_m_sq: 20.0 },
    Preset { name: "table1-row5", gamma_inv_s: 10e-3, q_factor: 1e9, lambda_over_2pi_hz: 880.0, temperature_k: 293.0, delta_m_sq: 27.0 },
    Preset { name: "table1-row6", gamma_inv_s: 10e-3, q_factor: 1e10, lambda_over_2pi_hz: 2000.0, temperature_k: 293.0, delta_m_sq: 0.06 },
];

pub fn preset(name: &str) -> Result<Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .copied()
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

impl Preset {
    pub fn config(&self) -> ParamConfig {
        ParamConfig {
            gamma_inv_s: self.gamma_inv_s,
            q_factor: self.q_factor,
            lambda_over_2pi_hz: self.lambda_over_2pi_hz,
            temperature_k: self.temperature_k,
            omega_r_over_2pi_hz: DEFAULT_OMEGA_R_OVER_2PI_HZ,
            delta_m_sq: self.delta_m_sq,
            alpha: 0.4,
            zp_m: None,
            omega_s_over_2pi_hz: None,
            laser_wavelength_m: None,
            laser_power_w: None,
        }
    }
}
