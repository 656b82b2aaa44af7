//! Gaussian pulses, spectral amplitudes, transition factors Ω and Π, and the
//! perturbative ESA/SE/GSB signal.
//!
//! Fourier convention: `Ẽ(ω) = ∫ E(t) e^{iωt} dt`, with `E(t)` the co-rotating
//! (absorptive) field `η·exp(−(t−t_n)²/2σ²)·e^{−i(ω_n t + φ)}`. The peak value is
//! `η σ √(2π)`.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{Branch, ExcitonStructure};
use crate::process::{FullChi, ReducedChi};
use crate::units::to_angular;
use crate::vec3::{self, Vec3};

/// Which exciton a pulse is tuned to: `+` the higher (β), `−` the lower (α).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PulseSign {
    #[cfg_attr(feature = "serde", serde(rename = "+"))]
    Plus,
    #[cfg_attr(feature = "serde", serde(rename = "-"))]
    Minus,
}

impl PulseSign {
    pub fn target(self) -> Branch {
        match self {
            PulseSign::Plus => Branch::Beta,
            PulseSign::Minus => Branch::Alpha,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            PulseSign::Plus => '+',
            PulseSign::Minus => '-',
        }
    }
}

/// Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    /// Carrier frequency (cm⁻¹).
    pub omega_cm: f64,
    /// Envelope center (fs).
    pub t_center_fs: f64,
    /// Temporal standard deviation of the envelope (fs).
    pub sigma_t_fs: f64,
    /// Unit polarization vector.
    pub polarization: Vec3,
    /// Field amplitude as interaction energy per dipole unit (cm⁻¹).
    pub eta: f64,
    /// Carrier phase (rad).
    pub phi: f64,
}

impl Pulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_t_fs > 0.0 && self.sigma_t_fs.is_finite()) {
            return Err(Error::invalid("sigma_t", "must be positive and finite"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", "must be non-negative and finite"));
        }
        if ((vec3::norm(&self.polarization)) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("polarization", "must be a unit vector"));
        }
        if !(self.omega_cm.is_finite() && self.t_center_fs.is_finite() && self.phi.is_finite()) {
            return Err(Error::invalid("pulse", "carrier, center and phase must be finite"));
        }
        Ok(())
    }

    /// Gaussian envelope `exp(−(t−t_n)²/2σ²)`.
    #[inline]
    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.t_center_fs) / self.sigma_t_fs;
        math::exp(-0.5 * x * x)
    }

    /// Amplitude in internal units (rad/fs per dipole unit).
    pub fn eta_internal(&self) -> f64 {
        to_angular(self.eta)
    }

    pub fn with_phase(&self, phi: f64) -> Pulse {
        Pulse { phi, ..*self }
    }

    pub fn with_eta(&self, eta: f64) -> Pulse {
        Pulse { eta, ..*self }
    }

    pub fn with_center(&self, t_center_fs: f64) -> Pulse {
        Pulse {
            t_center_fs,
            ..*self
        }
    }
}

/// Scalar field: envelope times `e^{−i(ωt+φ)}` (RWA) or `2cos(ωt+φ)`.
/// The vector field is this times `η·e`.
pub fn field_at(pulse: &Pulse, t: f64, rwa: bool) -> Complex64 {
    let env = pulse.envelope(t);
    let arg = to_angular(pulse.omega_cm) * t + pulse.phi;
    if rwa {
        let (s, c) = math::sin_cos(arg);
        Complex64::new(env * c, -env * s)
    } else {
        Complex64::new(2.0 * env * math::cos(arg), 0.0)
    }
}

/// `Ẽ(ω)` of the co-rotating field, `ω` in cm⁻¹ (dimensionless result).
pub fn spectral_amplitude(pulse: &Pulse, omega_cm: f64) -> Complex64 {
    let sigma = pulse.sigma_t_fs;
    let detuning = to_angular(omega_cm - pulse.omega_cm);
    let mag = pulse.eta_internal() * sigma * math::sqrt(2.0 * PI)
        * math::exp(-0.5 * detuning * detuning * sigma * sigma);
    let (s, c) = math::sin_cos(detuning * pulse.t_center_fs - pulse.phi);
    Complex64::new(mag * c, mag * s)
}

/// `Ω_ij = Ẽ(ω_ij)·(μ_ij·e)` (ħ = 1).
pub fn omega_amplitude(pulse: &Pulse, mu_ij: &Vec3, omega_ij_cm: f64) -> Complex64 {
    spectral_amplitude(pulse, omega_ij_cm) * vec3::dot(mu_ij, &pulse.polarization)
}

/// How transition probabilities `Π` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PiModel {
    /// `|Ẽ(ω_ij)|² (μ_ij·e)²` with the Gaussian spectrum.
    #[default]
    Spectral,
    /// Spectral factor fixed at its resonant peak for every transition
    /// (the idealization of perfectly resonant pulses).
    ResonantIdeal,
}

/// Π factors of one pulse on the four vibrationless transitions.
/// `Π_gq = Π_qg` for a single pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiFactors {
    pub alpha_g: f64,
    pub beta_g: f64,
    pub f_alpha: f64,
    pub f_beta: f64,
}

impl PiFactors {
    pub fn ground(&self, q: Branch) -> f64 {
        match q {
            Branch::Alpha => self.alpha_g,
            Branch::Beta => self.beta_g,
        }
    }

    pub fn excited(&self, q: Branch) -> f64 {
        match q {
            Branch::Alpha => self.f_alpha,
            Branch::Beta => self.f_beta,
        }
    }
}

/// Transition probability `Π = |Ω|²` under `model`.
pub fn transition_probability(pulse: &Pulse, mu: &Vec3, omega_cm: f64, model: PiModel) -> f64 {
    let proj = vec3::dot(mu, &pulse.polarization);
    let spectral = match model {
        PiModel::Spectral => spectral_amplitude(pulse, omega_cm).norm_sqr(),
        PiModel::ResonantIdeal => spectral_amplitude(pulse, pulse.omega_cm).norm_sqr(),
    };
    spectral * proj * proj
}

pub fn pi_factors(pulse: &Pulse, s: &ExcitonStructure, model: PiModel) -> PiFactors {
    let g = |q| transition_probability(pulse, &s.ground_dipole(q), s.ground_transition_cm(q), model);
    let f = |q| {
        transition_probability(pulse, &s.excited_dipole(q), s.excited_transition_cm(q), model)
    };
    PiFactors {
        alpha_g: g(Branch::Alpha),
        beta_g: g(Branch::Beta),
        f_alpha: f(Branch::Alpha),
        f_beta: f(Branch::Beta),
    }
}

/// Pump and probe signs, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairLabel {
    pub pump: PulseSign,
    pub probe: PulseSign,
}

impl PairLabel {
    /// Row order of the inversion system: (+,+), (+,−), (−,+), (−,−).
    pub const ALL: [PairLabel; 4] = [
        PairLabel::new(PulseSign::Plus, PulseSign::Plus),
        PairLabel::new(PulseSign::Plus, PulseSign::Minus),
        PairLabel::new(PulseSign::Minus, PulseSign::Plus),
        PairLabel::new(PulseSign::Minus, PulseSign::Minus),
    ];

    pub const fn new(pump: PulseSign, probe: PulseSign) -> PairLabel {
        PairLabel { pump, probe }
    }

    pub fn row(self) -> usize {
        PairLabel::ALL.iter().position(|l| *l == self).unwrap_or(0)
    }
}

impl core::fmt::Display for PairLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({},{})", self.pump.symbol(), self.probe.symbol())
    }
}

/// Pump followed by probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePair {
    pub pump: Pulse,
    pub probe: Pulse,
    pub label: PairLabel,
}

impl PulsePair {
    /// `τ = t_probe − t_pump`.
    pub fn delay(&self) -> f64 {
        self.probe.t_center_fs - self.pump.t_center_fs
    }

    /// True when the envelopes are separated by more than 5σ each.
    pub fn is_isolated(&self) -> bool {
        self.delay() > 5.0 * (self.pump.sigma_t_fs + self.probe.sigma_t_fs)
    }

    pub fn validate(&self, require_isolated: bool) -> Result<()> {
        self.pump.validate()?;
        self.probe.validate()?;
        if self.delay() < 0.0 {
            return Err(Error::invalid("tau", "probe must not precede the pump"));
        }
        if require_isolated && !self.is_isolated() {
            return Err(Error::invalid(
                "tau",
                "pulses overlap within 5 sigma but isolation was required",
            ));
        }
        Ok(())
    }
}

/// Coefficients of the reduced signal `S = Σ M_qp χ_qqpp − G` for one pair.
/// `M` is in the order (αααα, ααββ, ββαα, ββββ).
pub fn reduced_coefficients(pump: &PiFactors, probe: &PiFactors) -> ([f64; 4], f64) {
    let mut m = [0.0; 4];
    for (col, m_col) in m.iter_mut().enumerate() {
        let (q, p) = ReducedChi::ORDER[col];
        *m_col = (probe.excited(q) - probe.ground(q)) * pump.ground(p);
    }
    let mut g = 0.0;
    for q in Branch::ALL {
        for p in Branch::ALL {
            g += probe.ground(q) * pump.ground(p);
        }
    }
    (m, g)
}

/// Reduced (population-only) perturbative signal: ESA positive, SE and GSB negative.
pub fn perturbative_signal(
    pair: &PulsePair,
    s: &ExcitonStructure,
    chi: &ReducedChi,
    model: PiModel,
) -> f64 {
    let (m, g) = reduced_coefficients(&pi_factors(&pair.pump, s, model), &pi_factors(&pair.probe, s, model));
    let x = chi.as_array();
    m.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() - g
}

/// Component-resolved signal of the full 16-element form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParts {
    pub esa: f64,
    pub se: f64,
    pub gsb: f64,
}

impl SignalParts {
    pub fn total(&self) -> f64 {
        self.esa + self.se + self.gsb
    }
}

/// Full perturbative signal using every element `χ_ijqp` and complex Ω.
pub fn perturbative_signal_full(pair: &PulsePair, s: &ExcitonStructure, chi: &FullChi) -> SignalParts {
    let om = |p: &Pulse, mu: Vec3, w: f64| omega_amplitude(p, &mu, w);
    let pump_g = |q: Branch| om(&pair.pump, s.ground_dipole(q), s.ground_transition_cm(q));
    let probe_g = |q: Branch| om(&pair.probe, s.ground_dipole(q), s.ground_transition_cm(q));
    let probe_f = |q: Branch| om(&pair.probe, s.excited_dipole(q), s.excited_transition_cm(q));

    let mut esa = Complex64::new(0.0, 0.0);
    let mut se = Complex64::new(0.0, 0.0);
    for i in Branch::ALL {
        for j in Branch::ALL {
            for q in Branch::ALL {
                for p in Branch::ALL {
                    let x = chi.get(i, j, q, p);
                    let prep = pump_g(q) * pump_g(p).conj();
                    esa += prep * probe_f(i) * probe_f(j).conj() * x;
                    se += prep * probe_g(i).conj() * probe_g(j) * x;
                }
            }
        }
    }
    let mut gsb = 0.0;
    for i in Branch::ALL {
        for p in Branch::ALL {
            gsb += probe_g(i).norm_sqr() * pump_g(p).norm_sqr();
        }
    }
    SignalParts {
        esa: esa.re,
        se: -se.re,
        gsb: -gsb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse() -> Pulse {
        Pulse {
            omega_cm: 16_200.0,
            t_center_fs: 0.0,
            sigma_t_fs: 103.0,
            polarization: [0.0, 0.0, 1.0],
            eta: 1.0,
            phi: 0.0,
        }
    }

    #[test]
    fn field_peak_and_tail() {
        let p = pulse();
        assert!((field_at(&p, 0.0, false).re - 2.0).abs() < 1e-15);
        assert!((field_at(&p, 0.0, true) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let tail = p.envelope(5.0 * p.sigma_t_fs);
        assert!((tail - libm::exp(-12.5)).abs() < 1e-18);
        let flipped = p.with_phase(PI);
        for t in [-50.0, 3.3, 71.0] {
            assert!((field_at(&flipped, t, false) + field_at(&p, t, false)).norm() < 1e-12);
            assert!((field_at(&flipped, t, true) + field_at(&p, t, true)).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_peak_and_detuning() {
        let p = pulse();
        let peak = spectral_amplitude(&p, p.omega_cm).norm();
        let expect = to_angular(1.0) * 103.0 * libm::sqrt(2.0 * PI);
        assert!((peak - expect).abs() < 1e-12 * expect);
        // Δ σ = 3 in internal units.
        let delta_cm = crate::units::to_wavenumber(3.0 / p.sigma_t_fs);
        let off = spectral_amplitude(&p, p.omega_cm + delta_cm).norm();
        assert!((off / peak - libm::exp(-4.5)).abs() < 1e-12);
    }

    #[test]
    fn dark_transition_is_zero() {
        let p = pulse();
        assert_eq!(omega_amplitude(&p, &[1.0, 0.0, 0.0], 16_200.0).norm(), 0.0);
        let a = omega_amplitude(&p, &[0.3, 0.0, 0.8], 16_100.0);
        let b = omega_amplitude(&p.with_eta(2.5), &[0.3, 0.0, 0.8], 16_100.0);
        assert!((b - a * 2.5).norm() < 1e-15);
    }

    #[test]
    fn label_rows() {
        for (i, l) in PairLabel::ALL.iter().enumerate() {
            assert_eq!(l.row(), i);
        }
        assert_eq!(PairLabel::ALL[1].to_string(), "(+,-)");
    }
}
