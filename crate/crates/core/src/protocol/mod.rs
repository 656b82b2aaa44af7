//! The simulated experiment: pump-probe signals from the TDSE, the 4×4
//! inversion to χ, orientation averaging and the three-delay witness.

mod ensemble;
mod inversion;
mod signal;
mod sweep;

pub use ensemble::{
    ensemble_average, per_orientation_chi, ChiEstimate, EnsembleConfig, EnsembleResult, Executor,
    Orientation, OrientationMode, SampleOutcome, Sequential, DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_ORIENTATIONS,
};
pub use inversion::{build_inversion, recover_chi, InversionSystem, Recovery, DEFAULT_KAPPA_THRESHOLD};
pub use signal::{
    magic_angle, magic_angle_polarizations, phase_average, probe_only_subtract, selective_pairs,
    selective_polarizations, simulate_pair, subtract, Amplitude, Carriers, FrameChoice, ProtocolSettings, PulseRole, PulseSettings,
    PumpProbe, SignalRecord, SignalWindow,
};
pub use sweep::{
    r_sweep, run_witness_protocol, sigma_metric, RSweepPoint, WitnessReport,
    EXPERIMENTS_PER_ORIENTATION,
};
