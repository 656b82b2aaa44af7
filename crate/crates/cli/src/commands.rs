//! Subcommand bodies. Each takes a validated [`RunConfig`], writes its files
//! into `out`, and returns what it wrote so callers (and tests) can inspect it.

use std::path::{Path, PathBuf};

use excitonwit_core::model::DimerModel;
use excitonwit_core::optics::{perturbative_signal, PairLabel, PulseSign};
use excitonwit_core::process::{theoretical_chi, theoretical_chi_at, witness_wb, ReducedChi};
use excitonwit_core::protocol::{
    ensemble_average, phase_average, probe_only_subtract, r_sweep as core_r_sweep, subtract,
    Executor, Orientation, PumpProbe, SignalWindow,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{self, ChiRow, ConditioningRow, RSweepRow, WitnessRow};

pub const CHI_CURVE_FILE: &str = "chi_curve.csv";
pub const CHI_THEORY_FILE: &str = "chi_theory.csv";
pub const WITNESS_FILE: &str = "witness.csv";
pub const RSWEEP_FILE: &str = "rsweep.csv";
pub const CONDITIONING_FILE: &str = "conditioning.csv";
pub const PUMP_PROBE_FILE: &str = "pump_probe.csv";
pub const PUMP_PROBE_SUMMARY_FILE: &str = "pump_probe.json";
pub const PUMP_PROBE_HEADER: [&str; 3] = ["t_fs", "flux_absorption", "flux_emission"];

/// Delays closer than this (relative) are treated as the same grid point.
const DELAY_MATCH: f64 = 1e-12;

pub fn prepare_out(dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

fn model(cfg: &RunConfig) -> Result<DimerModel, CliError> {
    Ok(DimerModel::new(cfg.dimer_params(), cfg.n_phon)?)
}

fn same_delay(a: f64, b: f64) -> bool {
    (a - b).abs() <= DELAY_MATCH * a.abs().max(b.abs()).max(1.0)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Exact χ on `0, step, …, t_max`.
pub fn chi_theory(cfg: &RunConfig, t_max: f64, t_step: f64, out: &Path) -> Result<Vec<ChiRow>, CliError> {
    if !(t_max >= 0.0 && t_step > 0.0 && t_max.is_finite()) {
        return Err(CliError::Config("--t-max must be >= 0 and --t-step > 0".into()));
    }
    let m = model(cfg)?;
    let n = (t_max / t_step + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * t_step).collect();
    log::info!("oracle χ: d = {}, {} delays", m.space().dim(), times.len());
    let rows: Vec<ChiRow> = theoretical_chi(&m, &times)?.iter().map(ChiRow::exact).collect();
    prepare_out(out)?;
    formats::write_chi_curve(&out.join(CHI_CURVE_FILE), &rows)?;
    cfg.write_resolved(out, None)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct PumpProbeSummary {
    pub pair: String,
    pub tau_fs: f64,
    pub orientation_id: u64,
    pub eta: f64,
    /// Excited-state signal from the simulation.
    pub signal: f64,
    /// First-order signal with the exact χ at the same delay.
    pub signal_perturbative: f64,
}

/// One pulse pair on one orientation (`None`: lab orientation), with the
/// time-resolved excited-state fluxes.
pub fn pump_probe(
    cfg: &RunConfig,
    label: PairLabel,
    tau: f64,
    orientation: Option<u64>,
    out: &Path,
) -> Result<PumpProbeSummary, CliError> {
    let m = model(cfg)?;
    let settings = cfg.protocol_settings();
    let pp = PumpProbe::new(&m, settings)?;
    let o = match orientation {
        Some(i) => Orientation::random(cfg.protocol.seed, i),
        None => Orientation::identity(),
    };
    let pair = pp.pair(label, tau, 0.0);
    pair.validate(settings.require_isolated)?;
    let flipped = pp.pair(label, tau, std::f64::consts::PI);
    let a = pp.record(&[pair.pump, pair.probe], &o, tau)?;
    let b = pp.record(&[flipped.pump, flipped.probe], &o, tau)?;
    let mut rec = probe_only_subtract(&phase_average(&a, &b)?, &pp.record(&[pair.probe], &o, tau)?)?;
    if settings.window == SignalWindow::Full {
        rec = subtract(&rec, &pp.record(&[pair.pump], &o, tau)?)?;
    }

    let rotated = DimerModel::new(m.params.rotated(&o.rotation), cfg.n_phon)?;
    let chi = theoretical_chi_at(&m, tau)?;
    let summary = PumpProbeSummary {
        pair: label.to_string(),
        tau_fs: tau,
        orientation_id: o.id,
        eta: pp.eta(),
        signal: rec.signal,
        signal_perturbative: perturbative_signal(&pair, &rotated.structure, &chi, settings.pi_model),
    };
    log::info!(
        "pair {} tau {} fs: simulated {:e}, perturbative {:e}",
        summary.pair,
        tau,
        summary.signal,
        summary.signal_perturbative
    );
    prepare_out(out)?;
    formats::write_table(
        &out.join(PUMP_PROBE_FILE),
        &PUMP_PROBE_HEADER,
        &[&rec.times, &rec.flux_absorption, &rec.flux_emission],
    )?;
    write_json(&out.join(PUMP_PROBE_SUMMARY_FILE), &summary)?;
    cfg.write_resolved(out, Some(&pp))?;
    Ok(summary)
}

/// Accepts `+-`, `(+,-)`, `+ -` and similar.
pub fn parse_pair_label(s: &str) -> Result<PairLabel, CliError> {
    let signs: Vec<PulseSign> = s
        .chars()
        .filter_map(|c| match c {
            '+' => Some(PulseSign::Plus),
            '-' => Some(PulseSign::Minus),
            _ => None,
        })
        .collect();
    let rest_ok = s.chars().all(|c| "+-(), ".contains(c));
    match (signs.as_slice(), rest_ok) {
        ([pump, probe], true) => Ok(PairLabel::new(*pump, *probe)),
        _ => Err(CliError::Config(format!("`{s}` is not a pulse pair (expected e.g. `+-`)"))),
    }
}

fn sorted_delays(mut taus: Vec<f64>) -> Vec<f64> {
    taus.sort_by(f64::total_cmp);
    taus.dedup_by(|a, b| same_delay(*a, *b));
    taus
}

fn find_delay(rows: &[ChiRow], tau: f64) -> Option<ReducedChi> {
    rows.iter().find(|r| same_delay(r.tau_fs, tau)).map(ChiRow::chi)
}

#[derive(Debug, Clone)]
pub struct ProtocolOutput {
    pub chi: Vec<ChiRow>,
    pub theory: Vec<ChiRow>,
    pub witness: Vec<WitnessRow>,
    pub conditioning: Vec<ConditioningRow>,
}

/// Ensemble experiment at every witness delay (T1, T2, T1 + T2) plus the
/// optional τ grid; χ curves, witness and conditioning tables.
pub fn protocol<E: Executor>(cfg: &RunConfig, exec: &E, out: &Path) -> Result<ProtocolOutput, CliError> {
    let m = model(cfg)?;
    let pp = PumpProbe::new(&m, cfg.protocol_settings())?;
    let p = &cfg.protocol;
    let mut taus: Vec<f64> = p.t1_fs.iter().flat_map(|t| [*t, t + p.t2_fs]).collect();
    taus.push(p.t2_fs);
    if let Some(g) = &p.tau_grid {
        taus.extend(g.points()?);
    }
    let taus = sorted_delays(taus);
    log::info!(
        "protocol: d = {}, {} orientations x {} delays x 4 pairs, eta = {:e}",
        m.space().dim(),
        p.n_orientations,
        taus.len(),
        pp.eta()
    );
    let ens = ensemble_average(&pp, &taus, &cfg.ensemble(), exec)?;
    let chi: Vec<ChiRow> = ens.estimates.iter().map(ChiRow::estimate).collect();
    let theory: Vec<ChiRow> = theoretical_chi(&m, &taus)?.iter().map(ChiRow::exact).collect();
    let witness = p
        .t1_fs
        .iter()
        .map(|&t1| witness_row(&chi, Some(&theory), t1, p.t2_fs))
        .collect::<Result<Vec<_>, _>>()?;
    let conditioning = ens
        .estimates
        .iter()
        .map(|e| ConditioningRow {
            pair_set: format!("magic_angle@{}", e.mean.tau),
            kappa: e.kappa,
            det: e.det,
        })
        .collect();
    let output = ProtocolOutput {
        chi,
        theory,
        witness,
        conditioning,
    };
    prepare_out(out)?;
    formats::write_chi_curve(&out.join(CHI_CURVE_FILE), &output.chi)?;
    formats::write_chi_curve(&out.join(CHI_THEORY_FILE), &output.theory)?;
    formats::write_witness(&out.join(WITNESS_FILE), &output.witness)?;
    formats::write_conditioning(&out.join(CONDITIONING_FILE), &output.conditioning)?;
    cfg.write_resolved(out, Some(&pp))?;
    for w in &output.witness {
        log::info!("W^b(T1 = {}, T2 = {}): sim {:.4e}, theory {:.4e}", w.t1_fs, w.t2_fs, w.wb_sim, w.wb_theory);
    }
    Ok(output)
}

fn witness_row(chi: &[ChiRow], reference: Option<&[ChiRow]>, t1: f64, t2: f64) -> Result<WitnessRow, CliError> {
    let wb = |rows: &[ChiRow]| -> Result<Option<f64>, CliError> {
        match (find_delay(rows, t1), find_delay(rows, t2), find_delay(rows, t1 + t2)) {
            (Some(a), Some(b), Some(ab)) => Ok(Some(witness_wb(&a, &b, &ab)?.value)),
            _ => Ok(None),
        }
    };
    let wb_sim = wb(chi)?.ok_or_else(|| {
        CliError::Config(format!("χ curve lacks one of the delays {t1}, {t2}, {}", t1 + t2))
    })?;
    let wb_theory = match reference {
        Some(r) => wb(r)?.unwrap_or(f64::NAN),
        None => f64::NAN,
    };
    Ok(WitnessRow {
        t1_fs: t1,
        t2_fs: t2,
        wb_sim,
        wb_theory,
    })
}

/// W^b for every (T1, T2) with T1, T2 and T1 + T2 all on the grid of `chi_path`
/// (restricted to the given T2 values if any). `reference` supplies `wb_theory`.
pub fn witness(
    chi_path: &Path,
    reference: Option<&Path>,
    t2_filter: &[f64],
    out: &Path,
) -> Result<Vec<WitnessRow>, CliError> {
    let chi = formats::read_chi_curve(chi_path)?;
    let reference = reference.map(formats::read_chi_curve).transpose()?;
    let mut rows = Vec::new();
    for a in chi.iter().filter(|r| r.tau_fs > 0.0) {
        for b in chi.iter().filter(|r| r.tau_fs > 0.0) {
            let (t1, t2) = (a.tau_fs, b.tau_fs);
            if !t2_filter.is_empty() && !t2_filter.iter().any(|t| same_delay(*t, t2)) {
                continue;
            }
            if find_delay(&chi, t1 + t2).is_none() {
                continue;
            }
            rows.push(witness_row(&chi, reference.as_deref(), t1, t2)?);
        }
    }
    log::info!("{} witness values from {}", rows.len(), chi_path.display());
    prepare_out(out)?;
    formats::write_witness(&out.join(WITNESS_FILE), &rows)?;
    Ok(rows)
}

/// σ(r) over a list of couplings J (cm⁻¹), each on `n_points` delays in `[t0, t1]`.
pub fn r_sweep<E: Executor>(
    cfg: &RunConfig,
    js: &[f64],
    t0: f64,
    t1: f64,
    n_points: usize,
    exec: &E,
    out: &Path,
) -> Result<Vec<RSweepRow>, CliError> {
    if js.is_empty() {
        return Err(CliError::Config("r-sweep needs at least one J value".into()));
    }
    let base = cfg.dimer_params();
    let settings = cfg.protocol_settings();
    let points = core_r_sweep(&base, js, t0, t1, n_points, cfg.n_phon, &settings, &cfg.ensemble(), exec)?;
    let rows: Vec<RSweepRow> = points
        .iter()
        .map(|p| {
            log::info!("J = {} cm^-1: r = {:.4}, sigma = {:.4e}", p.j, p.r, p.sigma);
            RSweepRow { r: p.r, sigma: p.sigma }
        })
        .collect();
    prepare_out(out)?;
    formats::write_rsweep(&out.join(RSWEEP_FILE), &rows)?;
    cfg.write_resolved(out, None)?;
    Ok(rows)
}
