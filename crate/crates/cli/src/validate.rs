//! The invariant suite behind `excitonwit validate`.

use std::path::Path;

use excitonwit_core::dynamics::{exact_propagator, norm, propagate, SpectralPropagator, StateVector};
use excitonwit_core::model::DimerModel;
use excitonwit_core::optics::PairLabel;
use excitonwit_core::process::{theoretical_chi, witness_wb, ReducedChi};
use excitonwit_core::protocol::{build_inversion, recover_chi, selective_pairs, Orientation, ProtocolSettings, PumpProbe};
use excitonwit_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const VALIDATE_FILE: &str = "validate.json";

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Check {
        Check {
            name,
            passed: value < tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> StateVector {
    let v: StateVector = (0..d)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn unitarity(m: &DimerModel) -> Result<Check, CliError> {
    let u = exact_propagator(&m.hamiltonian, 1000.0)?;
    let d = u.nrows();
    let mut worst: f64 = 0.0;
    let uu = &u * u.adjoint();
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((uu[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }
    Ok(Check::below("unitarity", worst, 1e-10, "max |U U^† - 1| at t = 1000 fs"))
}

fn integrator(m: &DimerModel, pp: &PumpProbe, seed: u64) -> Result<[Check; 2], CliError> {
    let sp = SpectralPropagator::new(&m.hamiltonian)?;
    let plan = pp.plan(500.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut err, mut drift): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let psi = random_state(&mut rng, m.space().dim());
        let traj = propagate(&psi, &m.hamiltonian, &m.params, &[], &plan)?;
        err = err.max(distance(traj.last(), &sp.apply(&psi, 500.0)));
        drift = drift.max(traj.norm_drift());
    }
    let pair = pp.pair(PairLabel::ALL[1], 100.0, 0.0);
    let driven = propagate(&m.ground_state(), &m.hamiltonian, &m.params, &[pair.pump, pair.probe], &pp.plan(pp.t_end(100.0)))?;
    Ok([
        Check::below("integrator_vs_spectral", err, 1e-8, "20 random states, zero field, 500 fs"),
        Check::below(
            "norm_conservation",
            drift.max(driven.norm_drift()),
            1e-8,
            "zero field and a driven pulse pair",
        ),
    ])
}

fn trace_preservation(m: &DimerModel) -> Result<Check, CliError> {
    let times: Vec<f64> = (0..=100).map(|k| 10.0 * k as f64).collect();
    let chi = theoretical_chi(m, &times)?;
    let mut worst: f64 = 0.0;
    for (x, want) in chi[0].as_array().iter().zip([1.0, 0.0, 0.0, 1.0]) {
        worst = worst.max((x - want).abs() * 1e3);
    }
    for x in &chi {
        for s in x.column_sums() {
            worst = worst.max((s - 1.0).abs());
        }
        for v in x.as_array() {
            worst = worst.max(-v).max(v - 1.0);
        }
    }
    Ok(Check::below(
        "trace_preservation",
        worst,
        1e-6,
        "oracle χ on [0, 1000] fs: column sums, range, χ(0) = 1",
    ))
}

fn semigroup_zero(seed: u64) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let mut draw = |tau: f64| {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            ReducedChi::from_array(tau, [a, 1.0 - b, 1.0 - a, b])
        };
        let (x, y) = (draw(3.0), draw(5.0));
        let (p, q) = (x.as_array(), y.as_array());
        // Column-stochastic product y · x.
        let xy = ReducedChi::from_array(
            8.0,
            [
                q[0] * p[0] + q[1] * p[2],
                q[0] * p[1] + q[1] * p[3],
                q[2] * p[0] + q[3] * p[2],
                q[2] * p[1] + q[3] * p[3],
            ],
        );
        worst = worst.max(witness_wb(&x, &y, &xy)?.value);
    }
    Ok(Check::below("semigroup_zero", worst, 1e-12, "10^4 random classical semigroup pairs"))
}

fn witness_zero_intervals(m: &DimerModel) -> Result<Check, CliError> {
    let times = [0.0, 25.0, 100.0, 400.0];
    let chi = theoretical_chi(m, &times)?;
    let id = chi[0];
    let mut worst: f64 = 0.0;
    for x in &chi[1..] {
        worst = worst.max(witness_wb(&id, x, x)?.value);
        worst = worst.max(witness_wb(x, &id, x)?.value);
    }
    Ok(Check::below("witness_zero_intervals", worst, 1e-12, "W^b(0, T) and W^b(T, 0) on oracle χ"))
}

fn hadamard_ratio(m: &excitonwit_core::protocol::InversionSystem) -> f64 {
    let rows: f64 = (0..4).map(|i| m.m.row(i).norm()).product();
    m.det.abs() / rows
}

fn singularity(cfg: &RunConfig) -> Result<[Check; 2], CliError> {
    let mut p = cfg.dimer_params().electronic();
    p.delta_e = 0.0;
    let m = DimerModel::new(p, 0)?;
    let pp = PumpProbe::new(&m, ProtocolSettings::rotating())?;
    let sys = build_inversion(&selective_pairs(&pp, 1100.0)?, &m.structure, &[], pp.settings().pi_model)?;
    let ratio = hadamard_ratio(&sys);
    Ok([
        Check::below(
            "singularity_det",
            ratio,
            1e-12,
            "|det M| / Π‖row‖ for polarization-selective pulses",
        ),
        Check {
            name: "singularity_kappa",
            passed: sys.kappa >= 1e6,
            value: sys.kappa,
            tolerance: 1e6,
            detail: "condition number of the selective configuration (must be at least the tolerance)".into(),
        },
    ])
}

fn inversion_round_trip(m: &DimerModel, pp: &PumpProbe, seed: u64) -> Result<Check, CliError> {
    let rotations: Vec<_> = (0..50).map(|i| Orientation::random(seed, i).rotation).collect();
    let sys = build_inversion(&pp.pairs(200.0), &m.structure, &rotations, pp.settings().pi_model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
        let chi = ReducedChi::from_array(200.0, x);
        let s = sys.forward(&chi);
        let rec = recover_chi(&[s[0], s[1], s[2], s[3]], &sys, f64::INFINITY, 200.0)?;
        for (a, b) in rec.chi.as_array().iter().zip(x) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(Check::below(
        "inversion_round_trip",
        worst,
        1e-10,
        format!("magic-angle pairs, 50 orientations, kappa = {:.3e}", sys.kappa),
    ))
}

/// Runs every check on the configured model; never fails early on a check,
/// only on errors that prevent a check from running.
pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let m = DimerModel::new(cfg.dimer_params(), cfg.n_phon)?;
    let pp = PumpProbe::new(&m, cfg.protocol_settings())?;
    let seed = cfg.protocol.seed;
    let mut checks = vec![unitarity(&m)?];
    checks.extend(integrator(&m, &pp, seed)?);
    checks.push(trace_preservation(&m)?);
    checks.push(semigroup_zero(seed)?);
    checks.push(witness_zero_intervals(&m)?);
    checks.extend(singularity(cfg)?);
    checks.push(inversion_round_trip(&m, &pp, seed)?);
    for c in &checks {
        log::info!("{}: {} ({:.3e} vs {:.1e})", c.name, if c.passed { "ok" } else { "FAIL" }, c.value, c.tolerance);
    }
    Ok(Report { checks })
}

pub fn write_report(report: &Report, out: &Path) -> Result<(), CliError> {
    let path = out.join(VALIDATE_FILE);
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}
