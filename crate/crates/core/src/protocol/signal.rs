use alloc::vec::Vec;

use crate::dynamics::{manifold_population, Frame, PropagationPlan, Propagator};
use crate::error::{Error, Result};
use crate::Complex64;
use crate::math;
use crate::model::{Branch, DimerModel, Manifold};
use crate::optics::{PairLabel, PiModel, Pulse, PulsePair, PulseSign};
use crate::params::DimerParams;
use crate::units::to_wavenumber;
use crate::vec3::{self, Vec3};

use super::ensemble::Orientation;
use super::inversion::DEFAULT_KAPPA_THRESHOLD;

/// Pump-probe polarization angle `arccos(1/√3)`.
pub fn magic_angle() -> f64 {
    math::acos(1.0 / math::sqrt(3.0))
}

/// Pump along z, probe in the xz-plane at the magic angle.
pub fn magic_angle_polarizations() -> (Vec3, Vec3) {
    let (s, c) = math::sin_cos(magic_angle());
    ([0.0, 0.0, 1.0], [s, 0.0, c])
}

/// Carrier frequencies of the `+` and `−` pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Carriers {
    /// `+` on g0→β0, `−` on g0→α0.
    AutoResonant,
    Explicit { plus_cm: f64, minus_cm: f64 },
}

/// How the field amplitude is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    /// η in cm⁻¹ per dipole unit.
    Eta(f64),
    /// η such that a resonant pulse aligned with the strongest g→1EM dipole
    /// has this first-order excitation probability.
    TargetDepletion(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSettings {
    pub sigma_t_fs: f64,
    pub amplitude: Amplitude,
    pub carriers: Carriers,
    pub pump_polarization: Vec3,
    pub probe_polarization: Vec3,
}

impl Default for PulseSettings {
    fn default() -> Self {
        let (pump, probe) = magic_angle_polarizations();
        PulseSettings {
            sigma_t_fs: 103.0,
            amplitude: Amplitude::TargetDepletion(1e-4),
            carriers: Carriers::AutoResonant,
            pump_polarization: pump,
            probe_polarization: probe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameChoice {
    Lab,
    /// Rotating frame; `None` rotates at the mean of the two carriers.
    Rotating { omega_ref_cm: Option<f64> },
}

/// Which part of the record enters the integrated signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalWindow {
    /// The whole propagation; pump-only and probe-only responses are both
    /// subtracted.
    Full,
    /// From 5σ before the probe center to the end; only the probe-only
    /// response is subtracted.
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSettings {
    pub pulses: PulseSettings,
    pub dt_fs: f64,
    pub frame: FrameChoice,
    pub rwa: bool,
    pub window: SignalWindow,
    pub require_isolated: bool,
    pub pi_model: PiModel,
    pub kappa_threshold: f64,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        ProtocolSettings {
            pulses: PulseSettings::default(),
            dt_fs: 0.1,
            frame: FrameChoice::Lab,
            rwa: true,
            window: SignalWindow::Full,
            require_isolated: false,
            pi_model: PiModel::Spectral,
            kappa_threshold: DEFAULT_KAPPA_THRESHOLD,
        }
    }
}

impl ProtocolSettings {
    /// Rotating frame at mid-carrier with a 1 fs step.
    pub fn rotating() -> ProtocolSettings {
        ProtocolSettings {
            dt_fs: 1.0,
            frame: FrameChoice::Rotating { omega_ref_cm: None },
            ..ProtocolSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseRole {
    Pump,
    Probe,
}

/// Time-resolved and integrated signal of one propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub label: Option<PairLabel>,
    pub phase: f64,
    pub orientation_id: u64,
    pub dt_fs: f64,
    /// Midpoints of the integration intervals (fs).
    pub times: Vec<f64>,
    /// `−dP_g/dt` per interval.
    pub flux_absorption: Vec<f64>,
    /// `−dP_f/dt` per interval.
    pub flux_emission: Vec<f64>,
    pub window_start_fs: f64,
    /// `∫ (flux_absorption − flux_emission) dt` over the window.
    pub signal: f64,
}

impl SignalRecord {
    fn from_populations(
        pg: &[f64],
        pf: &[f64],
        t_start: f64,
        dt: f64,
        window_start_fs: f64,
    ) -> SignalRecord {
        let n = pg.len().saturating_sub(1);
        let times = (0..n).map(|k| t_start + (k as f64 + 0.5) * dt).collect();
        let flux = |p: &[f64]| -> Vec<f64> { p.windows(2).map(|w| -(w[1] - w[0]) / dt).collect() };
        let mut rec = SignalRecord {
            label: None,
            phase: 0.0,
            orientation_id: 0,
            dt_fs: dt,
            times,
            flux_absorption: flux(pg),
            flux_emission: flux(pf),
            window_start_fs,
            signal: 0.0,
        };
        rec.signal = rec.integrate();
        rec
    }

    /// Re-integrate the fluxes over the window.
    pub fn integrate(&self) -> f64 {
        self.times
            .iter()
            .zip(self.flux_absorption.iter().zip(&self.flux_emission))
            .filter(|(t, _)| **t >= self.window_start_fs)
            .map(|(_, (a, e))| (a - e) * self.dt_fs)
            .sum()
    }

    fn check_same_grid(&self, other: &SignalRecord) -> Result<()> {
        let same = self.times.len() == other.times.len()
            && self.dt_fs == other.dt_fs
            && self.window_start_fs == other.window_start_fs
            && self.times.first() == other.times.first();
        if same {
            Ok(())
        } else {
            Err(Error::Precondition("signal records are on different grids".into()))
        }
    }

    fn combine(&self, other: &SignalRecord, f: impl Fn(f64, f64) -> f64) -> SignalRecord {
        let zip = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| f(*p, *q)).collect() };
        SignalRecord {
            label: self.label,
            phase: self.phase,
            orientation_id: self.orientation_id,
            dt_fs: self.dt_fs,
            times: self.times.clone(),
            flux_absorption: zip(&self.flux_absorption, &other.flux_absorption),
            flux_emission: zip(&self.flux_emission, &other.flux_emission),
            window_start_fs: self.window_start_fs,
            signal: f(self.signal, other.signal),
        }
    }
}

/// Mean of two records that differ only in the probe phase.
pub fn phase_average(a: &SignalRecord, b: &SignalRecord) -> Result<SignalRecord> {
    a.check_same_grid(b)?;
    let mut out = a.combine(b, |x, y| 0.5 * (x + y));
    out.phase = 0.5 * (a.phase + b.phase);
    Ok(out)
}

/// Pointwise `a − b`.
pub fn subtract(a: &SignalRecord, b: &SignalRecord) -> Result<SignalRecord> {
    a.check_same_grid(b)?;
    Ok(a.combine(b, |x, y| x - y))
}

/// Excited-state signal: full record minus the probe-only record.
pub fn probe_only_subtract(full: &SignalRecord, probe_only: &SignalRecord) -> Result<SignalRecord> {
    subtract(full, probe_only)
}

/// Simulate one pulse pair on a dimer with the given orientation, starting in
/// the vibronic ground state. The signal window is the whole plan.
pub fn simulate_pair(
    pair: &PulsePair,
    model: &DimerModel,
    plan: &PropagationPlan,
    orientation: &Orientation,
) -> Result<SignalRecord> {
    let pulses = [pair.pump, pair.probe];
    plan.validate(&pulses)?;
    let prop = Propagator::new(&model.structure.spectrum, plan.dt_fs, plan.frame)?;
    let params = model.params.rotated(&orientation.rotation);
    let mut rec = record(
        &prop,
        model,
        &params,
        &pulses,
        plan.t_start_fs,
        plan.n_steps(),
        plan.rwa,
        plan.t_start_fs,
    )?;
    rec.label = Some(pair.label);
    rec.phase = pair.probe.phi;
    rec.orientation_id = orientation.id;
    Ok(rec)
}

/// Ground and doubly excited populations. The ground population is taken as
/// `1 − P₁ − P₂`: identical for a normalized state, but free of the roundoff
/// that accumulates in a population close to one.
fn ground_and_two(psi: &[Complex64], nb: usize) -> (f64, f64) {
    let p1 = manifold_population(psi, Manifold::One, nb);
    let p2 = manifold_population(psi, Manifold::Two, nb);
    (1.0 - p1 - p2, p2)
}

#[allow(clippy::too_many_arguments)]
fn record(
    prop: &Propagator,
    model: &DimerModel,
    params: &DimerParams,
    pulses: &[Pulse],
    t_start: f64,
    n_steps: usize,
    rwa: bool,
    window_start: f64,
) -> Result<SignalRecord> {
    let nb = model.space().block();
    let mut pg = Vec::with_capacity(n_steps + 1);
    let mut pf = Vec::with_capacity(n_steps + 1);
    prop.run(&model.ground_state(), params, pulses, t_start, n_steps, rwa, false, |_, _, psi| {
        let (g, f) = ground_and_two(psi, nb);
        pg.push(g);
        pf.push(f);
    })?;
    Ok(SignalRecord::from_populations(&pg, &pf, t_start, prop.dt(), window_start))
}

/// Polarizations that make each pulse blind to one branch: `+` pulses are
/// perpendicular to μ_gα and `−` pulses to μ_gβ, both in the xy-plane.
pub fn selective_polarizations(model: &DimerModel) -> Result<(Vec3, Vec3)> {
    let d = &model.structure.dipoles;
    let z = [0.0, 0.0, 1.0];
    let perp = |mu: &Vec3| {
        let c = vec3::cross(mu, &z);
        if vec3::norm(&c) < 1e-12 * vec3::norm(mu).max(1e-300) {
            Err(Error::Precondition("branch dipole is parallel to z".into()))
        } else {
            Ok(vec3::normalized(&c))
        }
    };
    Ok((perp(&d.alpha_g)?, perp(&d.beta_g)?))
}

/// The four pairs of `pp` at delay `tau` with selective polarizations.
pub fn selective_pairs(pp: &PumpProbe, tau: f64) -> Result<[PulsePair; 4]> {
    let (e_plus, e_minus) = selective_polarizations(pp.model())?;
    let pol = |s: PulseSign| match s {
        PulseSign::Plus => e_plus,
        PulseSign::Minus => e_minus,
    };
    Ok(PairLabel::ALL.map(|l| {
        let mut pair = pp.pair(l, tau, 0.0);
        pair.pump.polarization = pol(l.pump);
        pair.probe.polarization = pol(l.probe);
        pair
    }))
}

/// Pump-probe experiment on one model with fixed pulse settings.
///
/// Timing: the pump is centered 5σ after t = 0, the probe τ later, and the
/// propagation ends 5σ after the probe.
#[derive(Debug, Clone)]
pub struct PumpProbe<'a> {
    model: &'a DimerModel,
    settings: ProtocolSettings,
    plus_cm: f64,
    minus_cm: f64,
    eta: f64,
    frame: Frame,
    propagator: Propagator,
}

impl<'a> PumpProbe<'a> {
    pub fn new(model: &'a DimerModel, settings: ProtocolSettings) -> Result<PumpProbe<'a>> {
        let s = &model.structure;
        let ps = &settings.pulses;
        if !(ps.sigma_t_fs > 0.0 && ps.sigma_t_fs.is_finite()) {
            return Err(Error::invalid("sigma_t_fs", "must be positive and finite"));
        }
        for (name, e) in [
            ("pump_polarization", ps.pump_polarization),
            ("probe_polarization", ps.probe_polarization),
        ] {
            if (vec3::norm(&e) - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(name, "must be a unit vector"));
            }
        }
        let (plus_cm, minus_cm) = match ps.carriers {
            Carriers::AutoResonant => (
                s.ground_transition_cm(Branch::Beta),
                s.ground_transition_cm(Branch::Alpha),
            ),
            Carriers::Explicit { plus_cm, minus_cm } => (plus_cm, minus_cm),
        };
        let eta = match ps.amplitude {
            Amplitude::Eta(eta) => eta,
            Amplitude::TargetDepletion(p) => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::invalid("target_depletion", "must lie in (0, 1)"));
                }
                let mu = vec3::norm(&s.dipoles.alpha_g).max(vec3::norm(&s.dipoles.beta_g));
                let peak = ps.sigma_t_fs * math::sqrt(2.0 * core::f64::consts::PI) * mu;
                to_wavenumber(math::sqrt(p) / peak)
            }
        };
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid("eta", "must be non-negative and finite"));
        }
        let frame = match settings.frame {
            FrameChoice::Lab => Frame::Lab,
            FrameChoice::Rotating { omega_ref_cm } => Frame::Rotating {
                omega_ref_cm: omega_ref_cm.unwrap_or(0.5 * (plus_cm + minus_cm)),
            },
        };
        if !(settings.kappa_threshold > 0.0) {
            return Err(Error::invalid("kappa_threshold", "must be positive"));
        }
        let propagator = Propagator::new(&s.spectrum, settings.dt_fs, frame)?;
        let pp = PumpProbe {
            model,
            settings,
            plus_cm,
            minus_cm,
            eta,
            frame,
            propagator,
        };
        let probe = [
            pp.pulse(PulseSign::Plus, PulseRole::Pump, 0.0, 0.0),
            pp.pulse(PulseSign::Minus, PulseRole::Pump, 0.0, 0.0),
        ];
        pp.plan(1.0).validate(&probe)?;
        Ok(pp)
    }

    pub fn model(&self) -> &DimerModel {
        self.model
    }

    pub fn settings(&self) -> &ProtocolSettings {
        &self.settings
    }

    /// Resolved field amplitude (cm⁻¹ per dipole unit).
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn carrier_cm(&self, sign: PulseSign) -> f64 {
        match sign {
            PulseSign::Plus => self.plus_cm,
            PulseSign::Minus => self.minus_cm,
        }
    }

    fn sigma(&self) -> f64 {
        self.settings.pulses.sigma_t_fs
    }

    pub fn pump_center(&self) -> f64 {
        5.0 * self.sigma()
    }

    /// End of the propagation for delay `tau`.
    pub fn t_end(&self, tau: f64) -> f64 {
        self.pump_center() + tau + 5.0 * self.sigma()
    }

    pub fn plan(&self, t_end: f64) -> PropagationPlan {
        PropagationPlan {
            dt_fs: self.settings.dt_fs,
            t_start_fs: 0.0,
            t_end_fs: t_end,
            frame: self.frame,
            rwa: self.settings.rwa,
        }
    }

    pub fn pulse(&self, sign: PulseSign, role: PulseRole, t_center_fs: f64, phi: f64) -> Pulse {
        let ps = &self.settings.pulses;
        Pulse {
            omega_cm: self.carrier_cm(sign),
            t_center_fs,
            sigma_t_fs: ps.sigma_t_fs,
            polarization: match role {
                PulseRole::Pump => ps.pump_polarization,
                PulseRole::Probe => ps.probe_polarization,
            },
            eta: self.eta,
            phi,
        }
    }

    pub fn pair(&self, label: PairLabel, tau: f64, probe_phase: f64) -> PulsePair {
        let t0 = self.pump_center();
        PulsePair {
            pump: self.pulse(label.pump, PulseRole::Pump, t0, 0.0),
            probe: self.pulse(label.probe, PulseRole::Probe, t0 + tau, probe_phase),
            label,
        }
    }

    /// All four pairs at delay `tau`, in row order.
    pub fn pairs(&self, tau: f64) -> [PulsePair; 4] {
        PairLabel::ALL.map(|l| self.pair(l, tau, 0.0))
    }

    fn window_start(&self, tau: f64) -> f64 {
        match self.settings.window {
            SignalWindow::Full => 0.0,
            SignalWindow::Probe => self.pump_center() + tau - 5.0 * self.sigma(),
        }
    }

    fn steps_until(&self, t_end: f64) -> usize {
        self.plan(t_end).n_steps()
    }

    /// Record of an arbitrary pulse list on an oriented dimer, over the grid of delay `tau`.
    pub fn record(&self, pulses: &[Pulse], orientation: &Orientation, tau: f64) -> Result<SignalRecord> {
        let params = self.model.params.rotated(&orientation.rotation);
        let t_end = self.t_end(tau);
        let mut rec = record(
            &self.propagator,
            self.model,
            &params,
            pulses,
            0.0,
            self.steps_until(t_end),
            self.settings.rwa,
            self.window_start(tau),
        )?;
        rec.orientation_id = orientation.id;
        Ok(rec)
    }

    /// Integrated signal only (no flux arrays).
    fn integrated(&self, pulses: &[Pulse], params: &DimerParams, tau: f64) -> Result<f64> {
        let nb = self.model.space().block();
        let n = self.steps_until(self.t_end(tau));
        let w0 = self.window_start(tau);
        let dt = self.settings.dt_fs;
        // First grid point whose following interval starts inside the window.
        let k0 = (0..=n).find(|&k| k as f64 * dt + 0.5 * dt >= w0).unwrap_or(n);
        let mut start = (0.0, 0.0);
        let mut end = (0.0, 0.0);
        self.propagator.run(
            &self.model.ground_state(),
            params,
            pulses,
            0.0,
            n,
            self.settings.rwa,
            false,
            |k, _, psi| {
                if k == k0 || k == n {
                    let p = ground_and_two(psi, nb);
                    if k == k0 {
                        start = p;
                    }
                    if k == n {
                        end = p;
                    }
                }
            },
        )?;
        Ok(-(end.0 - start.0) + (end.1 - start.1))
    }

    /// Phase-averaged signal of one pair with both pulses present, before any
    /// subtraction.
    pub fn raw_pair_signal(&self, label: PairLabel, tau: f64, orientation: &Orientation) -> Result<f64> {
        let params = self.model.params.rotated(&orientation.rotation);
        let mut acc = 0.0;
        for phi in [0.0, core::f64::consts::PI] {
            let pair = self.pair(label, tau, phi);
            pair.validate(self.settings.require_isolated)?;
            acc += 0.5 * self.integrated(&[pair.pump, pair.probe], &params, tau)?;
        }
        Ok(acc)
    }

    /// Signal of a single pulse on the grid of delay `tau`.
    pub fn single_signal(&self, pulse: &Pulse, orientation: &Orientation, tau: f64) -> Result<f64> {
        let params = self.model.params.rotated(&orientation.rotation);
        self.integrated(core::slice::from_ref(pulse), &params, tau)
    }

    /// Excited-state signal of one pair: phase-averaged pair signal minus the
    /// probe-only response (and minus the pump-only response for the full window).
    pub fn pair_signal(&self, label: PairLabel, tau: f64, orientation: &Orientation) -> Result<f64> {
        let raw = self.raw_pair_signal(label, tau, orientation)?;
        let pair = self.pair(label, tau, 0.0);
        let mut s = raw - self.single_signal(&pair.probe, orientation, tau)?;
        if self.settings.window == SignalWindow::Full {
            s -= self.single_signal(&pair.pump, orientation, tau)?;
        }
        Ok(s)
    }

    /// The four excited-state signals at each delay. Every reference run uses
    /// the same grid as the pair it is subtracted from, since the truncated
    /// pulse tails contribute at the order of the signal itself.
    pub fn signals(&self, taus: &[f64], orientation: &Orientation) -> Result<Vec<[f64; 4]>> {
        if self.settings.window == SignalWindow::Probe {
            return taus
                .iter()
                .map(|&tau| {
                    let mut out = [0.0; 4];
                    for (row, l) in PairLabel::ALL.iter().enumerate() {
                        out[row] = self.pair_signal(*l, tau, orientation)?;
                    }
                    Ok(out)
                })
                .collect();
        }
        let params = self.model.params.rotated(&orientation.rotation);
        let pump_refs = [PulseSign::Plus, PulseSign::Minus]
            .map(|sign| self.pump_only_signals(sign, &params, taus));
        let [pump_plus, pump_minus] = pump_refs;
        let (pump_plus, pump_minus) = (pump_plus?, pump_minus?);
        taus.iter()
            .enumerate()
            .map(|(k, &tau)| {
                let mut probe_refs = [0.0; 2];
                for (r, sign) in [PulseSign::Plus, PulseSign::Minus].iter().enumerate() {
                    let p = self.pulse(*sign, PulseRole::Probe, self.pump_center() + tau, 0.0);
                    probe_refs[r] = self.integrated(&[p], &params, tau)?;
                }
                let mut out = [0.0; 4];
                for (row, l) in PairLabel::ALL.iter().enumerate() {
                    let pump_ref = match l.pump {
                        PulseSign::Plus => pump_plus[k],
                        PulseSign::Minus => pump_minus[k],
                    };
                    let probe_ref = match l.probe {
                        PulseSign::Plus => probe_refs[0],
                        PulseSign::Minus => probe_refs[1],
                    };
                    out[row] = self.raw_pair_signal(*l, tau, orientation)? - pump_ref - probe_ref;
                    log::debug!(
                        "orientation={} pair={} tau_fs={} signal={:e}",
                        orientation.id,
                        l,
                        tau,
                        out[row]
                    );
                }
                Ok(out)
            })
            .collect()
    }

    /// Pump-only signal over the full window of each delay, from a single run.
    fn pump_only_signals(&self, sign: PulseSign, params: &DimerParams, taus: &[f64]) -> Result<Vec<f64>> {
        let nb = self.model.space().block();
        let ends: Vec<usize> = taus.iter().map(|&t| self.steps_until(self.t_end(t))).collect();
        let n = ends.iter().copied().max().unwrap_or(0);
        let pulse = self.pulse(sign, PulseRole::Pump, self.pump_center(), 0.0);
        let mut pops = alloc::vec![(0.0, 0.0); n + 1];
        self.propagator.run(
            &self.model.ground_state(),
            params,
            &[pulse],
            0.0,
            n,
            self.settings.rwa,
            false,
            |k, _, psi| {
                if k == 0 || ends.contains(&k) {
                    pops[k] = ground_and_two(psi, nb);
                }
            },
        )?;
        let (g0, f0) = pops[0];
        Ok(ends.iter().map(|&k| -(pops[k].0 - g0) + (pops[k].1 - f0)).collect())
    }
}
