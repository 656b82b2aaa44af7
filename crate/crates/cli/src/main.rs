use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use excitonwit::commands;
use excitonwit::config::{FrameKind, Preset, RunConfig};
use excitonwit::validate;
use excitonwit::{CliError, Parallel};

#[derive(Parser, Debug)]
#[command(name = "excitonwit", version, about = "Vibronic dimer pump-probe simulation and the W^b coherence witness")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    n_phon: Option<usize>,
    #[arg(long = "dt", global = true)]
    dt_fs: Option<f64>,
    #[arg(long, global = true, value_enum)]
    frame: Option<FrameArg>,
    #[arg(long = "sigma-t", global = true)]
    sigma_t_fs: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    n_orientations: Option<usize>,
    #[arg(long, global = true)]
    bootstrap: Option<usize>,
    /// Log one line per completed task.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Apc,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FrameArg {
    Lab,
    Rotating,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact χ curves from the spectral oracle.
    ChiTheory {
        #[arg(long, default_value_t = 1000.0)]
        t_max: f64,
        #[arg(long, default_value_t = 5.0)]
        t_step: f64,
    },
    /// Simulate one pulse pair on one orientation.
    PumpProbe {
        /// Pump and probe signs, e.g. `+-`.
        #[arg(long, default_value = "++", allow_hyphen_values = true)]
        pair: String,
        #[arg(long, default_value_t = 300.0)]
        tau: f64,
        /// Index of the random orientation (default: lab orientation).
        #[arg(long)]
        orientation: Option<u64>,
    },
    /// Ensemble experiment at T1, T2 and T1 + T2: χ curves and W^b.
    Protocol {
        #[arg(long, value_delimiter = ',')]
        t1: Option<Vec<f64>>,
        #[arg(long)]
        t2: Option<f64>,
    },
    /// W^b from an existing chi_curve.csv.
    Witness {
        #[arg(long)]
        chi: PathBuf,
        /// χ curve for the `wb_theory` column.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Only these T2 values.
        #[arg(long, value_delimiter = ',')]
        t2: Vec<f64>,
    },
    /// σ between simulated and exact χ as the coupling J varies.
    RSweep {
        /// Couplings in cm^-1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-50,-100,-162,-250,-400")]
        j: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 600.0)]
        t1: f64,
        #[arg(long, default_value_t = 7)]
        n_points: usize,
    },
    /// Run the invariant suite on the configured model.
    Validate,
}

fn load_config(g: &Global) -> Result<RunConfig, CliError> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(PresetArg::Apc) = g.preset {
        cfg.preset = Some(Preset::Apc);
    }
    if let Some(n) = g.n_phon {
        cfg.n_phon = n;
    }
    if let Some(dt) = g.dt_fs {
        cfg.plan.dt_fs = Some(dt);
    }
    if let Some(f) = g.frame {
        cfg.plan.frame = match f {
            FrameArg::Lab => FrameKind::Lab,
            FrameArg::Rotating => FrameKind::Rotating,
        };
    }
    if let Some(s) = g.sigma_t_fs {
        cfg.pulse.sigma_t_fs = s;
    }
    if let Some(eta) = g.eta {
        cfg.pulse.eta = Some(eta);
        cfg.pulse.target_depletion = None;
    }
    if let Some(s) = g.seed {
        cfg.protocol.seed = s;
    }
    if let Some(n) = g.n_orientations {
        cfg.protocol.n_orientations = n;
    }
    if let Some(b) = g.bootstrap {
        cfg.protocol.bootstrap_resamples = b;
    }
    if let Some(out) = &g.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli.global)?;
    if let Command::Protocol { t1, t2 } = &cli.command {
        if let Some(t1) = t1 {
            cfg.protocol.t1_fs = t1.clone();
        }
        if let Some(t2) = t2 {
            cfg.protocol.t2_fs = *t2;
        }
    }
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    let exec = || Parallel::new(cli.global.threads);
    match cli.command {
        Command::ChiTheory { t_max, t_step } => {
            let rows = commands::chi_theory(&cfg, t_max, t_step, &out)?;
            println!("wrote {} delays to {}", rows.len(), out.join(commands::CHI_CURVE_FILE).display());
        }
        Command::PumpProbe { pair, tau, orientation } => {
            let label = commands::parse_pair_label(&pair)?;
            let s = commands::pump_probe(&cfg, label, tau, orientation, &out)?;
            println!("{}", serde_json::to_string(&s).expect("summary serializes"));
        }
        Command::Protocol { .. } => {
            let exec = exec()?;
            log::info!("{} worker threads", exec.threads());
            let o = commands::protocol(&cfg, &exec, &out)?;
            println!("T1_fs,T2_fs,wb_sim,wb_theory");
            for w in &o.witness {
                println!("{},{},{:e},{:e}", w.t1_fs, w.t2_fs, w.wb_sim, w.wb_theory);
            }
        }
        Command::Witness { chi, reference, t2 } => {
            let rows = commands::witness(&chi, reference.as_deref(), &t2, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.join(commands::WITNESS_FILE).display());
        }
        Command::RSweep { j, t0, t1, n_points } => {
            let exec = exec()?;
            let rows = commands::r_sweep(&cfg, &j, t0, t1, n_points, &exec, &out)?;
            for r in &rows {
                println!("r = {:.4}  sigma = {:.4e}", r.r, r.sigma);
            }
        }
        Command::Validate => {
            let report = validate::run(&cfg)?;
            commands::prepare_out(&out)?;
            validate::write_report(&report, &out)?;
            cfg.write_resolved(&out, None)?;
            for c in &report.checks {
                let status = if c.passed { "ok  " } else { "FAIL" };
                println!("{status} {:<24} {:.3e} (tol {:.1e})  {}", c.name, c.value, c.tolerance, c.detail);
            }
            let failed = report.failed();
            if failed > 0 {
                return Err(CliError::Validation {
                    failed,
                    total: report.checks.len(),
                });
            }
        }
    }
    Ok(())
}

fn report_error(e: &CliError, out: Option<&Path>) {
    let record = serde_json::to_string(&e.record()).expect("record serializes");
    eprintln!("{record}");
    if let Some(dir) = out.filter(|d| d.is_dir()) {
        let _ = std::fs::write(dir.join("error.json"), record + "\n");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let out = cli.global.out.clone();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e, out.as_deref());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
