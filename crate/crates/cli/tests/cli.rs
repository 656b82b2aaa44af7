use std::path::Path;
use std::process::Command;

use excitonwit::commands::{self, parse_pair_label};
use excitonwit::config::{RunConfig, RESOLVED_CONFIG_FILE};
use excitonwit::formats::{self, ChiRow, ConditioningRow, RSweepRow, WitnessRow};
use excitonwit::{CliError, Parallel};
use excitonwit_core::model::DimerModel;
use excitonwit_core::optics::{PairLabel, PulseSign};
use excitonwit_core::protocol::{ensemble_average, EnsembleConfig, OrientationMode, PumpProbe, Sequential};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_excitonwit"))
}

fn small_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::from_json(r#"{"n_phon": 1, "protocol": {"N_orientations": 6, "bootstrap_resamples": 10, "T1_fs": [600], "T2_fs": 600}}"#).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn empty_config_is_the_apc_preset() {
    let cfg = RunConfig::from_json("{}").unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.dimer_params(), excitonwit_core::params::apc_preset());
    assert_eq!(cfg.n_phon, 3);
    assert_eq!(cfg.protocol.n_orientations, 2000);
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    for text in [
        r#"{"bogus": 1}"#,
        r#"{"pulse": {"sigma": 100}}"#,
        r#"{"plan": {"frame": "lab", "step": 1}}"#,
        r#"{"protocol": {"T3_fs": 5}}"#,
        r#"{"params": {"eps_a": 1, "eps_b": 2, "J": 0, "omega_a": 1, "omega_b": 1, "g_a": 0, "g_b": 0, "mu_a": [1,0,0], "mu_b": [0,1,0], "extra": 0}}"#,
        r#"{"plan": {"frame": "sideways"}}"#,
    ] {
        let err = RunConfig::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}");
    }
}

#[test]
fn exclusive_fields_are_rejected() {
    for text in [
        r#"{"preset": "apc", "params": {"eps_a": 1, "eps_b": 2, "J": 0, "omega_a": 1, "omega_b": 1, "g_a": 0, "g_b": 0, "mu_a": [1,0,0], "mu_b": [0,1,0]}}"#,
        r#"{"pulse": {"eta": 0.1, "target_depletion": 0.001}}"#,
        r#"{"pulse": {"carriers": {"plus_cm": 16000, "minus_cm": 15000}}}"#,
        r#"{"protocol": {"T1_fs": []}}"#,
        r#"{"protocol": {"N_orientations": 0}}"#,
        r#"{"plan": {"frame": "lab", "omega_ref_cm": 15000}}"#,
    ] {
        let cfg = RunConfig::from_json(text).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{text}");
    }
}

#[test]
fn resolved_config_reproduces_the_run() {
    let cfg = RunConfig::default();
    let m = DimerModel::new(cfg.dimer_params(), 1).unwrap();
    let pp = PumpProbe::new(&m, cfg.protocol_settings()).unwrap();
    let resolved = cfg.resolved(Some(&pp));
    let text = serde_json::to_string(&resolved).unwrap();
    let back = RunConfig::from_json(&text).unwrap();
    back.validate().unwrap();
    assert_eq!(back, resolved);
    assert!(back.preset.is_none() && back.params.is_some());
    let pp2 = PumpProbe::new(&m, back.protocol_settings()).unwrap();
    assert_eq!(pp2.eta(), pp.eta());
    assert_eq!(pp2.frame(), pp.frame());
    for s in [PulseSign::Plus, PulseSign::Minus] {
        assert_eq!(pp2.carrier_cm(s), pp.carrier_cm(s));
    }
    assert_eq!(pp2.settings().dt_fs, pp.settings().dt_fs);
}

#[test]
fn pair_labels_parse() {
    assert_eq!(parse_pair_label("+-").unwrap(), PairLabel::ALL[1]);
    assert_eq!(parse_pair_label("(-,+)").unwrap(), PairLabel::ALL[2]);
    assert_eq!(parse_pair_label("- -").unwrap(), PairLabel::ALL[3]);
    for bad in ["+", "+-+", "ab", ""] {
        assert!(parse_pair_label(bad).is_err(), "{bad}");
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3..1e3f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csv_files_round_trip_exactly(
        vals in proptest::collection::vec((finite(), [finite(), finite(), finite(), finite()], [finite(), finite(), finite(), finite()]), 1..8),
        extra in finite(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let mut rows: Vec<ChiRow> = vals
            .iter()
            .enumerate()
            .map(|(k, (_, mean, std))| ChiRow { tau_fs: k as f64 * 12.5, mean: *mean, std: *std })
            .collect();
        rows[0].tau_fs = 0.0;
        let p = dir.path().join("chi.csv");
        formats::write_chi_curve(&p, &rows).unwrap();
        prop_assert_eq!(formats::read_chi_curve(&p).unwrap(), rows);

        let w: Vec<WitnessRow> = vals
            .iter()
            .map(|(t, m, _)| WitnessRow { t1_fs: *t, t2_fs: m[0], wb_sim: m[1], wb_theory: extra })
            .collect();
        let p = dir.path().join("w.csv");
        formats::write_witness(&p, &w).unwrap();
        prop_assert_eq!(formats::read_witness(&p).unwrap(), w);

        let r: Vec<RSweepRow> = vals.iter().map(|(t, m, _)| RSweepRow { r: *t, sigma: m[2] }).collect();
        let p = dir.path().join("r.csv");
        formats::write_rsweep(&p, &r).unwrap();
        prop_assert_eq!(formats::read_rsweep(&p).unwrap(), r);

        let c: Vec<ConditioningRow> = vals
            .iter()
            .map(|(t, m, _)| ConditioningRow { pair_set: format!("set,{t}"), kappa: m[3], det: *t })
            .collect();
        let p = dir.path().join("c.csv");
        formats::write_conditioning(&p, &c).unwrap();
        prop_assert_eq!(formats::read_conditioning(&p).unwrap(), c);
    }
}

#[test]
fn floats_use_seventeen_significant_digits() {
    assert_eq!(formats::float(0.1), "1.0000000000000001e-1");
    assert_eq!(formats::float(-2.0), "-2.0000000000000000e0");
    let w = WitnessRow { t1_fs: 1.0, t2_fs: 2.0, wb_sim: 0.0, wb_theory: f64::NAN };
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.csv");
    formats::write_witness(&p, &[w]).unwrap();
    assert!(formats::read_witness(&p).unwrap()[0].wb_theory.is_nan());
}

#[test]
fn wrong_header_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    formats::write_rsweep(&p, &[RSweepRow { r: 0.1, sigma: 0.2 }]).unwrap();
    let err = formats::read_chi_curve(&p).unwrap_err();
    assert!(matches!(err, CliError::Csv { .. }));
    assert_eq!(err.exit_code(), 2);
    std::fs::write(&p, "r,sigma\n0.1,abc\n").unwrap();
    assert!(matches!(formats::read_rsweep(&p), Err(CliError::Csv { .. })));
}

#[test]
fn chi_theory_starts_at_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["chi-theory", "--preset", "apc", "--n-phon", "3", "--t-max", "1000", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = formats::read_chi_curve(&dir.path().join(commands::CHI_CURVE_FILE)).unwrap();
    assert_eq!(rows.last().unwrap().tau_fs, 1000.0);
    assert_eq!(rows[0].tau_fs, 0.0);
    for (x, want) in rows[0].mean.iter().zip([1.0, 0.0, 0.0, 1.0]) {
        assert!((x - want).abs() < 1e-9);
    }
    let resolved = RunConfig::load(&dir.path().join(RESOLVED_CONFIG_FILE)).unwrap();
    resolved.validate().unwrap();
    assert_eq!(resolved.n_phon, 3);
}

/// Two-state classical rate process: `P(t) = exp(K t)` with rates `ka` (α→β) and `kb` (β→α).
fn markov_chi(t: f64, ka: f64, kb: f64) -> [f64; 4] {
    let s = ka + kb;
    let e = (-s * t).exp();
    let aa = (kb + ka * e) / s;
    let bb = (ka + kb * e) / s;
    [aa, 1.0 - bb, 1.0 - aa, bb]
}

#[test]
fn witness_of_a_classical_semigroup_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<ChiRow> = (0..=60)
        .map(|k| {
            let t = 10.0 * k as f64;
            ChiRow { tau_fs: t, mean: markov_chi(t, 0.004, 0.0015), std: [0.0; 4] }
        })
        .collect();
    let chi = dir.path().join("chi_curve.csv");
    formats::write_chi_curve(&chi, &rows).unwrap();
    let out = bin().arg("witness").arg("--chi").arg(&chi).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let w = formats::read_witness(&dir.path().join(commands::WITNESS_FILE)).unwrap();
    assert_eq!(w.len(), 59 * 60 / 2);
    for r in &w {
        assert!(r.wb_sim.abs() < 1e-12, "{r:?}");
        assert!(r.wb_theory.is_nan());
    }
}

#[test]
fn witness_needs_the_sum_delay() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<ChiRow> = [0.0, 100.0, 250.0]
        .iter()
        .map(|&t| ChiRow { tau_fs: t, mean: markov_chi(t, 0.004, 0.002), std: [0.0; 4] })
        .collect();
    let chi = dir.path().join("c.csv");
    formats::write_chi_curve(&chi, &rows).unwrap();
    assert!(commands::witness(&chi, None, &[], dir.path()).unwrap().is_empty());
}

#[test]
fn validate_passes_on_apc() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["validate", "--preset", "apc", "--out"]).arg(dir.path()).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(dir.path().join("validate.json").exists());
}

#[test]
fn schema_errors_exit_with_two_and_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"plan": {"dt": 1}}"#).unwrap();
    let out = bin().arg("validate").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii_end().rsplit(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(record["error"], "schema");
    assert_eq!(record["exit_code"], 2);
    assert!(dir.path().join("error.json").exists());
}

#[test]
fn numerical_contract_violations_exit_with_three() {
    // Degenerate branches: ε_a = ε_b, J = 0, no phonon coupling.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"n_phon": 1, "params": {"eps_a": 15000, "eps_b": 15000, "J": 0, "omega_a": 800, "omega_b": 1500,
            "g_a": 0, "g_b": 0, "mu_a": [1,0,0], "mu_b": [0,1,0]}}"#,
    )
    .unwrap();
    let out = bin().arg("chi-theory").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"numerical\""));
}

#[test]
fn parallel_executor_matches_sequential() {
    let cfg = small_config(Path::new("unused"));
    let m = DimerModel::new(cfg.dimer_params(), 1).unwrap();
    let pp = PumpProbe::new(&m, cfg.protocol_settings()).unwrap();
    let ens = EnsembleConfig { n_samples: 7, seed: 3, bootstrap_resamples: 15, mode: OrientationMode::Random };
    let taus = [400.0, 700.0];
    let seq = ensemble_average(&pp, &taus, &ens, &Sequential).unwrap();
    for threads in [1, 2, 4] {
        let par = ensemble_average(&pp, &taus, &ens, &Parallel::new(Some(threads)).unwrap()).unwrap();
        assert_eq!(par, seq, "{threads} threads");
    }
    assert!(Parallel::new(Some(0)).is_err());
}

#[test]
fn protocol_outputs_reingest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = commands::protocol(&cfg, &Parallel::new(Some(2)).unwrap(), dir.path()).unwrap();
    let chi_path = dir.path().join(commands::CHI_CURVE_FILE);
    let chi = formats::read_chi_curve(&chi_path).unwrap();
    assert_eq!(chi, out.chi);
    assert_eq!(chi.iter().map(|r| r.tau_fs).collect::<Vec<_>>(), [600.0, 1200.0]);
    assert_eq!(formats::read_chi_curve(&dir.path().join(commands::CHI_THEORY_FILE)).unwrap(), out.theory);
    assert_eq!(formats::read_conditioning(&dir.path().join(commands::CONDITIONING_FILE)).unwrap(), out.conditioning);
    let w = formats::read_witness(&dir.path().join(commands::WITNESS_FILE)).unwrap();
    assert_eq!(w, out.witness);

    // The standalone witness subcommand reproduces the protocol's values.
    let again = dir.path().join("again");
    let w2 = commands::witness(&chi_path, Some(&dir.path().join(commands::CHI_THEORY_FILE)), &[600.0], &again).unwrap();
    assert_eq!(w2.len(), 1);
    assert_eq!(w2[0].wb_sim, w[0].wb_sim);
    assert_eq!(w2[0].wb_theory, w[0].wb_theory);

    let resolved = RunConfig::load(&dir.path().join(RESOLVED_CONFIG_FILE)).unwrap();
    resolved.validate().unwrap();
    let rerun_dir = dir.path().join("rerun");
    let rerun = commands::protocol(&resolved, &Sequential, &rerun_dir).unwrap();
    assert_eq!(rerun.chi, out.chi);
}

#[test]
fn pump_probe_writes_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.params = Some(excitonwit_core::params::apc_preset().electronic());
    cfg.n_phon = 0;
    let s = commands::pump_probe(&cfg, PairLabel::ALL[0], 1100.0, Some(2), dir.path()).unwrap();
    let table = formats::read_table(&dir.path().join(commands::PUMP_PROBE_FILE), &commands::PUMP_PROBE_HEADER).unwrap();
    let integral: f64 = table.iter().map(|r| r[1] - r[2]).sum::<f64>() * cfg.protocol_settings().dt_fs;
    assert!((integral - s.signal).abs() <= 1e-9 * s.signal.abs(), "{integral} {}", s.signal);
    // Electronic dimer, isolated pulses: close to first order.
    assert!((s.signal - s.signal_perturbative).abs() < 0.05 * s.signal_perturbative.abs(), "{s:?}");
}
