use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::DimerModel;
use crate::params::{coupling_ratio, DimerParams};
use crate::process::{theoretical_chi, witness_wb, ReducedChi, WitnessPoint};

use super::ensemble::{ensemble_average, ChiEstimate, EnsembleConfig, Executor};
use super::signal::{ProtocolSettings, PumpProbe};

/// Pulse-pair experiments needed per orientation for one witness value:
/// four pairs at each of T1, T2 and T1 + T2.
pub const EXPERIMENTS_PER_ORIENTATION: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub simulated: WitnessPoint,
    pub oracle: WitnessPoint,
    /// Recovered χ at T1, T2, T1 + T2.
    pub chi_simulated: [ChiEstimate; 3],
    pub chi_oracle: [ReducedChi; 3],
    pub experiments: usize,
}

/// Three-delay witness from the simulated experiment, next to the value
/// computed from the exact process tensor.
pub fn run_witness_protocol<E: Executor>(
    pp: &PumpProbe,
    t1: f64,
    t2: f64,
    cfg: &EnsembleConfig,
    exec: &E,
) -> Result<WitnessReport> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::invalid("T1, T2", "must both be positive"));
    }
    let taus = [t1, t2, t1 + t2];
    let ens = ensemble_average(pp, &taus, cfg, exec)?;
    let e = &ens.estimates;
    let simulated = witness_wb(&e[0].mean, &e[1].mean, &e[2].mean)?;
    let th = theoretical_chi(pp.model(), &taus)?;
    let oracle = witness_wb(&th[0], &th[1], &th[2])?;
    Ok(WitnessReport {
        simulated,
        oracle,
        chi_simulated: [e[0], e[1], e[2]],
        chi_oracle: [th[0], th[1], th[2]],
        experiments: EXPERIMENTS_PER_ORIENTATION,
    })
}

/// Normalized squared deviation `∫|χ_theo − χ_sim|² / ∫|χ_theo|²`
/// (trapezoidal rule on the common delay grid).
pub fn sigma_metric(theory: &[ReducedChi], sim: &[ReducedChi]) -> Result<f64> {
    if theory.len() != sim.len() {
        return Err(Error::Precondition("theory and simulation grids differ in length".into()));
    }
    if theory.len() < 2 {
        return Err(Error::invalid("window", "needs at least two delays"));
    }
    for (a, b) in theory.iter().zip(sim) {
        if (a.tau - b.tau).abs() > 1e-9 {
            return Err(Error::Precondition("theory and simulation grids differ".into()));
        }
    }
    let sq = |x: [f64; 4]| x.iter().map(|v| v * v).sum::<f64>();
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        theory
            .windows(2)
            .enumerate()
            .map(|(i, w)| 0.5 * (w[1].tau - w[0].tau) * (f(i) + f(i + 1)))
            .sum()
    };
    let num = trap(&|i| {
        let (a, b) = (theory[i].as_array(), sim[i].as_array());
        sq([a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
    });
    let den = trap(&|i| sq(theory[i].as_array()));
    if !(den > 0.0) {
        return Err(Error::invalid("window", "theoretical χ integrates to zero"));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSweepPoint {
    pub j: f64,
    pub r: f64,
    pub sigma: f64,
}

/// Sweep the electronic coupling; for each value compare the simulated and
/// exact χ over `n_points` delays spanning `[t0, t1]`.
#[allow(clippy::too_many_arguments)]
pub fn r_sweep<E: Executor>(
    base: &DimerParams,
    js: &[f64],
    t0: f64,
    t1: f64,
    n_points: usize,
    n_phon: usize,
    settings: &ProtocolSettings,
    cfg: &EnsembleConfig,
    exec: &E,
) -> Result<Vec<RSweepPoint>> {
    if !(t1 > t0 && t0 >= 0.0) {
        return Err(Error::invalid("window", "requires t1 > t0 >= 0"));
    }
    if n_points < 2 {
        return Err(Error::invalid("n_points", "needs at least two delays"));
    }
    let taus: Vec<f64> = (0..n_points)
        .map(|k| t0 + (t1 - t0) * k as f64 / (n_points - 1) as f64)
        .collect();
    js.iter()
        .map(|&j| {
            let params = DimerParams { j, ..base.clone() };
            let r = coupling_ratio(&params)?;
            let model = DimerModel::new(params, n_phon)?;
            let pp = PumpProbe::new(&model, *settings)?;
            let ens = ensemble_average(&pp, &taus, cfg, exec)?;
            let theory = theoretical_chi(&model, &taus)?;
            let sigma = sigma_metric(&theory, &ens.chi())?;
            Ok(RSweepPoint { j, r, sigma })
        })
        .collect()
}
