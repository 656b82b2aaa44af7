//! JSON run configuration.
//!
//! Every block has defaults, so `{}` is a valid config (the APC preset). After
//! the model is built, [`RunConfig::resolved`] materializes every derived
//! value so the copy written next to the results reproduces the run on its own.

use std::path::{Path, PathBuf};

use excitonwit_core::dynamics::Frame;
use excitonwit_core::optics::PiModel;
use excitonwit_core::params::{apc_preset, DimerParams};
use excitonwit_core::protocol::{
    magic_angle_polarizations, Amplitude, Carriers, EnsembleConfig, FrameChoice, OrientationMode,
    ProtocolSettings, PulseSettings, PumpProbe, SignalWindow, DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_KAPPA_THRESHOLD, DEFAULT_ORIENTATIONS,
};
use excitonwit_core::vec3::Vec3;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Apc,
}

impl Preset {
    pub fn params(self) -> DimerParams {
        match self {
            Preset::Apc => apc_preset(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<DimerParams>,
    #[serde(default = "default_n_phon")]
    pub n_phon: usize,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierConfig {
    pub plus_cm: f64,
    pub minus_cm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    #[serde(default = "default_sigma")]
    pub sigma_t_fs: f64,
    /// Field amplitude in cm⁻¹ per dipole unit. Exclusive with `target_depletion`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// First-order excitation probability of one resonant pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_depletion: Option<f64>,
    #[serde(default = "yes")]
    pub auto_resonant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carriers: Option<CarrierConfig>,
    #[serde(default = "default_pump_pol")]
    pub pump_polarization: Vec3,
    #[serde(default = "default_probe_pol")]
    pub probe_polarization: Vec3,
    #[serde(default)]
    pub pi_model: PiModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Lab,
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Full,
    Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// Defaults to 1 fs in the rotating frame and 0.1 fs in the lab frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_fs: Option<f64>,
    #[serde(default = "default_frame")]
    pub frame: FrameKind,
    /// Rotating-frame reference; defaults to the mean of the two carriers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_ref_cm: Option<f64>,
    #[serde(default = "yes")]
    pub rwa: bool,
    #[serde(default = "default_window")]
    pub window: WindowKind,
    #[serde(default)]
    pub require_isolated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub start_fs: f64,
    pub stop_fs: f64,
    pub step_fs: f64,
}

impl TauGrid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let TauGrid {
            start_fs,
            stop_fs,
            step_fs,
        } = *self;
        if !(start_fs >= 0.0 && stop_fs >= start_fs && step_fs > 0.0 && stop_fs.is_finite()) {
            return Err(CliError::Config(
                "tau_grid needs 0 <= start_fs <= stop_fs and step_fs > 0".into(),
            ));
        }
        let n = ((stop_fs - start_fs) / step_fs + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| start_fs + k as f64 * step_fs).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationKind {
    Random,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(rename = "T1_fs", default = "default_t1")]
    pub t1_fs: Vec<f64>,
    #[serde(rename = "T2_fs", default = "default_t2")]
    pub t2_fs: f64,
    /// Extra delays for the χ curve, on top of the witness delays.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<TauGrid>,
    #[serde(rename = "N_orientations", default = "default_orientations")]
    pub n_orientations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_kappa")]
    pub kappa_threshold: f64,
    #[serde(default = "default_orientation_kind")]
    pub orientations: OrientationKind,
}

fn yes() -> bool {
    true
}
fn default_n_phon() -> usize {
    3
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("run")
}
fn default_sigma() -> f64 {
    103.0
}
fn default_pump_pol() -> Vec3 {
    magic_angle_polarizations().0
}
fn default_probe_pol() -> Vec3 {
    magic_angle_polarizations().1
}
fn default_frame() -> FrameKind {
    FrameKind::Rotating
}
fn default_window() -> WindowKind {
    WindowKind::Full
}
fn default_t1() -> Vec<f64> {
    vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0]
}
fn default_t2() -> f64 {
    100.0
}
fn default_orientations() -> usize {
    DEFAULT_ORIENTATIONS
}
fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP_RESAMPLES
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA_THRESHOLD
}
fn default_orientation_kind() -> OrientationKind {
    OrientationKind::Random
}

const DEFAULT_TARGET_DEPLETION: f64 = 1e-4;

impl Default for PulseConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("pulse defaults")
    }
}

impl Default for PlanConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("plan defaults")
    }
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("protocol defaults")
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("run defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks that need more than the schema: exclusive fields and ranges.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.preset.is_some() && self.params.is_some() {
            return bad("`preset` and `params` are mutually exclusive");
        }
        if self.pulse.eta.is_some() && self.pulse.target_depletion.is_some() {
            return bad("`pulse.eta` and `pulse.target_depletion` are mutually exclusive");
        }
        if self.pulse.auto_resonant == self.pulse.carriers.is_some() {
            return bad("set either `pulse.auto_resonant: true` or `pulse.carriers`, not both");
        }
        if !(self.pulse.sigma_t_fs > 0.0 && self.pulse.sigma_t_fs.is_finite()) {
            return bad("`pulse.sigma_t_fs` must be positive");
        }
        if let Some(dt) = self.plan.dt_fs {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("`plan.dt_fs` must be positive");
            }
        }
        if self.plan.frame == FrameKind::Lab && self.plan.omega_ref_cm.is_some() {
            return bad("`plan.omega_ref_cm` only applies to the rotating frame");
        }
        let p = &self.protocol;
        if p.t1_fs.is_empty() || p.t1_fs.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("`protocol.T1_fs` must be a non-empty list of positive delays");
        }
        if !(p.t2_fs > 0.0 && p.t2_fs.is_finite()) {
            return bad("`protocol.T2_fs` must be positive");
        }
        if p.n_orientations == 0 {
            return bad("`protocol.N_orientations` must be at least 1");
        }
        if !(p.kappa_threshold > 0.0) {
            return bad("`protocol.kappa_threshold` must be positive");
        }
        if let Some(g) = &p.tau_grid {
            g.points()?;
        }
        Ok(())
    }

    pub fn dimer_params(&self) -> DimerParams {
        match (&self.params, self.preset) {
            (Some(p), _) => p.clone(),
            (None, Some(preset)) => preset.params(),
            (None, None) => Preset::Apc.params(),
        }
    }

    pub fn protocol_settings(&self) -> ProtocolSettings {
        let pulse = &self.pulse;
        let amplitude = match pulse.eta {
            Some(eta) => Amplitude::Eta(eta),
            None => Amplitude::TargetDepletion(pulse.target_depletion.unwrap_or(DEFAULT_TARGET_DEPLETION)),
        };
        let carriers = match pulse.carriers {
            Some(c) => Carriers::Explicit {
                plus_cm: c.plus_cm,
                minus_cm: c.minus_cm,
            },
            None => Carriers::AutoResonant,
        };
        let (frame, dt) = match self.plan.frame {
            FrameKind::Lab => (FrameChoice::Lab, 0.1),
            FrameKind::Rotating => (
                FrameChoice::Rotating {
                    omega_ref_cm: self.plan.omega_ref_cm,
                },
                1.0,
            ),
        };
        ProtocolSettings {
            pulses: PulseSettings {
                sigma_t_fs: pulse.sigma_t_fs,
                amplitude,
                carriers,
                pump_polarization: pulse.pump_polarization,
                probe_polarization: pulse.probe_polarization,
            },
            dt_fs: self.plan.dt_fs.unwrap_or(dt),
            frame,
            rwa: self.plan.rwa,
            window: match self.plan.window {
                WindowKind::Full => SignalWindow::Full,
                WindowKind::Probe => SignalWindow::Probe,
            },
            require_isolated: self.plan.require_isolated,
            pi_model: pulse.pi_model,
            kappa_threshold: self.protocol.kappa_threshold,
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            n_samples: self.protocol.n_orientations,
            seed: self.protocol.seed,
            bootstrap_resamples: self.protocol.bootstrap_resamples,
            mode: match self.protocol.orientations {
                OrientationKind::Random => OrientationMode::Random,
                OrientationKind::Identity => OrientationMode::Identity,
            },
        }
    }

    /// Copy with every default and derived value written out.
    pub fn resolved(&self, pp: Option<&PumpProbe>) -> RunConfig {
        let mut out = self.clone();
        out.params = Some(self.dimer_params());
        out.preset = None;
        let settings = self.protocol_settings();
        out.plan.dt_fs = Some(settings.dt_fs);
        if let Some(pp) = pp {
            use excitonwit_core::optics::PulseSign;
            out.pulse.eta = Some(pp.eta());
            out.pulse.target_depletion = None;
            out.pulse.auto_resonant = false;
            out.pulse.carriers = Some(CarrierConfig {
                plus_cm: pp.carrier_cm(PulseSign::Plus),
                minus_cm: pp.carrier_cm(PulseSign::Minus),
            });
            if let Frame::Rotating { omega_ref_cm } = pp.frame() {
                out.plan.omega_ref_cm = Some(omega_ref_cm);
            }
        } else if out.pulse.eta.is_none() && out.pulse.target_depletion.is_none() {
            out.pulse.target_depletion = Some(DEFAULT_TARGET_DEPLETION);
        }
        out
    }

    pub fn write_resolved(&self, dir: &Path, pp: Option<&PumpProbe>) -> Result<PathBuf, CliError> {
        let path = dir.join(RESOLVED_CONFIG_FILE);
        let text = serde_json::to_string_pretty(&self.resolved(pp)).expect("config serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
