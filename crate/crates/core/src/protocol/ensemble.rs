use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::process::ReducedChi;
use crate::vec3::{self, Mat3};

use super::inversion::{build_inversion, recover_chi, InversionSystem};
use super::signal::PumpProbe;

pub const DEFAULT_ORIENTATIONS: usize = 2000;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;

/// Runs independent tasks `0..n` and returns their results in index order.
pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs tasks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}

/// A rigid rotation of the dimer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub id: u64,
    pub rotation: Mat3,
}

impl Orientation {
    pub fn identity() -> Orientation {
        Orientation {
            id: 0,
            rotation: vec3::IDENTITY,
        }
    }

    /// Uniformly distributed rotation; sample `index` of the stream seeded by `seed`.
    pub fn random(seed: u64, index: u64) -> Orientation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let tau = 2.0 * core::f64::consts::PI;
        let (s2, c2) = math::sin_cos(tau * u2);
        let (s3, c3) = math::sin_cos(tau * u3);
        let a = math::sqrt(1.0 - u1);
        let b = math::sqrt(u1);
        Orientation {
            id: index,
            rotation: vec3::rotation_from_quaternion([b * c3, a * s2, a * c2, b * s3]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationMode {
    /// Uniform random rotations.
    Random,
    /// Every sample uses the lab orientation.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub mode: OrientationMode,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_samples: DEFAULT_ORIENTATIONS,
            seed: 0,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            mode: OrientationMode::Random,
        }
    }
}

impl EnsembleConfig {
    pub fn orientation(&self, index: usize) -> Orientation {
        match self.mode {
            OrientationMode::Random => Orientation::random(self.seed, index as u64),
            OrientationMode::Identity => Orientation {
                id: index as u64,
                ..Orientation::identity()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Signals and inversion coefficients of one orientation at each delay.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub orientation: Orientation,
    pub signals: Vec<[f64; 4]>,
    pub systems: Vec<InversionSystem>,
}

/// χ at one delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiEstimate {
    /// Estimate from all samples.
    pub mean: ReducedChi,
    /// Bootstrap standard deviation (zero without resamples).
    pub std: [f64; 4],
    pub kappa: f64,
    /// Determinant of the inversion matrix (mean over orientations for the
    /// per-orientation diagnostic).
    pub det: f64,
    pub residual: f64,
    /// Ensemble-averaged signals, row order of the pulse pairs.
    pub signal: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub taus: Vec<f64>,
    pub estimates: Vec<ChiEstimate>,
    pub samples: Vec<SampleOutcome>,
}

impl EnsembleResult {
    pub fn chi(&self) -> Vec<ReducedChi> {
        self.estimates.iter().map(|e| e.mean).collect()
    }
}

fn sample(pp: &PumpProbe, taus: &[f64], orientation: Orientation) -> Result<SampleOutcome> {
    let signals = pp.signals(taus, &orientation)?;
    let s = &pp.model().structure;
    let model = pp.settings().pi_model;
    let systems = taus
        .iter()
        .map(|&tau| build_inversion(&pp.pairs(tau), s, &[orientation.rotation], model))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleOutcome {
        orientation,
        signals,
        systems,
    })
}

fn averaged(samples: &[SampleOutcome], picks: &[usize], k: usize) -> ([f64; 4], InversionSystem) {
    let w = 1.0 / picks.len() as f64;
    let mut s = [0.0; 4];
    let mut m = Matrix4::<f64>::zeros();
    let mut g = Vector4::<f64>::zeros();
    for &i in picks {
        let o = &samples[i];
        for (a, b) in s.iter_mut().zip(o.signals[k]) {
            *a += w * b;
        }
        m += o.systems[k].m * w;
        g += o.systems[k].g * w;
    }
    (s, InversionSystem::from_parts(m, g))
}

fn std_dev(xs: &[[f64; 4]]) -> [f64; 4] {
    let mut out = [0.0; 4];
    if xs.len() < 2 {
        return out;
    }
    let n = xs.len() as f64;
    for (c, o) in out.iter_mut().enumerate() {
        let mean = xs.iter().map(|x| x[c]).sum::<f64>() / n;
        let var = xs.iter().map(|x| (x[c] - mean) * (x[c] - mean)).sum::<f64>() / (n - 1.0);
        *o = math::sqrt(var);
    }
    out
}

/// Simulate every orientation, average the signals and the inversion
/// coefficients over the ensemble, then invert once per delay.
pub fn ensemble_average<E: Executor>(
    pp: &PumpProbe,
    taus: &[f64],
    cfg: &EnsembleConfig,
    exec: &E,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    if taus.is_empty() {
        return Err(Error::invalid("taus", "at least one delay is required"));
    }
    let samples = exec
        .map(cfg.n_samples, |i| sample(pp, taus, cfg.orientation(i)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let threshold = pp.settings().kappa_threshold;
    let all: Vec<usize> = (0..samples.len()).collect();

    let mut boot_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    boot_rng.set_stream(u64::MAX);
    let resamples: Vec<Vec<usize>> = (0..cfg.bootstrap_resamples)
        .map(|_| (0..samples.len()).map(|_| boot_rng.random_range(0..samples.len())).collect())
        .collect();

    let mut estimates = Vec::with_capacity(taus.len());
    for (k, &tau) in taus.iter().enumerate() {
        let (s, system) = averaged(&samples, &all, k);
        let rec = recover_chi(&s, &system, threshold, tau)?;
        let boot: Vec<[f64; 4]> = resamples
            .iter()
            .filter_map(|picks| {
                let (s, system) = averaged(&samples, picks, k);
                recover_chi(&s, &system, threshold, tau).ok().map(|r| r.chi.as_array())
            })
            .collect();
        estimates.push(ChiEstimate {
            mean: rec.chi,
            std: std_dev(&boot),
            kappa: rec.kappa,
            det: system.det,
            residual: rec.residual,
            signal: s,
        });
    }
    Ok(EnsembleResult {
        taus: taus.to_vec(),
        estimates,
        samples,
    })
}

/// Diagnostic: invert each orientation on its own and average the resulting χ.
/// Orientations whose system is ill-conditioned are skipped; the standard
/// deviation is taken over orientations.
pub fn per_orientation_chi(result: &EnsembleResult, threshold: f64) -> Result<Vec<ChiEstimate>> {
    let mut out = Vec::with_capacity(result.taus.len());
    for (k, &tau) in result.taus.iter().enumerate() {
        let recs: Vec<_> = result
            .samples
            .iter()
            .filter_map(|o| recover_chi(&o.signals[k], &o.systems[k], threshold, tau).ok())
            .collect();
        if recs.is_empty() {
            return Err(Error::IllConditioned {
                kappa: f64::INFINITY,
                threshold,
            });
        }
        let n = recs.len() as f64;
        let chis: Vec<[f64; 4]> = recs.iter().map(|r| r.chi.as_array()).collect();
        let mut mean = [0.0; 4];
        for c in &chis {
            for (m, v) in mean.iter_mut().zip(c) {
                *m += v / n;
            }
        }
        let mut signal = [0.0; 4];
        for o in &result.samples {
            for (a, b) in signal.iter_mut().zip(o.signals[k]) {
                *a += b / result.samples.len() as f64;
            }
        }
        out.push(ChiEstimate {
            mean: ReducedChi::from_array(tau, mean),
            std: std_dev(&chis),
            kappa: recs.iter().map(|r| r.kappa).fold(0.0, f64::max),
            det: result.samples.iter().map(|o| o.systems[k].det).sum::<f64>() / result.samples.len() as f64,
            residual: recs.iter().map(|r| r.residual).fold(0.0, f64::max),
            signal,
        });
    }
    Ok(out)
}
