//! `jode` — joint detection and estimation experiments from the shell.
//!
//! Five subcommands:
//!
//! * `calibrate` — run threshold calibration only and emit the thresholds
//!   as JSON (stdout, or `--out FILE`).
//! * `radar-sim` — calibrate and sweep the MIMO radar model.
//! * `changepoint-sim` — calibrate and sweep the changepoint model.
//! * `sweep` — like the two above but honoring the config's `model` key.
//! * `verify` — run the oracle suites (exhaustive Bayes-estimator check,
//!   determinant/quadratic-form identities, fading-averaged likelihood
//!   ratio, changepoint closed forms) and report pass/fail.
//!
//! Configuration comes from an optional `key = value` file (`--config`),
//! then `--profile`, then the remaining flags, each later layer overriding
//! the earlier ones.  All overrides go through the same schema checks as
//! the file.  The env var `JODE_THREADS` caps the worker count; output is
//! byte-identical for a given config regardless of it.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use jode_core::harness::{
    build_model, csv_string, run_calibration, run_sweep, write_csv, BuiltModel, ExperimentConfig,
    SweepResult,
};
use jode_core::oracle::{
    bayes_optimality_suite, changepoint_identity_suite, det_identity_suite, fading_average_suite,
};

#[derive(Parser)]
#[command(
    name = "jode",
    version,
    about = "Jointly optimum detection and estimation experiments",
    term_width = 100
)]
struct Cli {
    /// More logging (-v info, -vv debug); warnings always print.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate detection and reliability thresholds, print them as JSON
    Calibrate(RunArgs),
    /// Calibrate and sweep the MIMO radar model (forces model = radar)
    RadarSim(RunArgs),
    /// Calibrate and sweep the changepoint model (forces model = changepoint)
    ChangepointSim(RunArgs),
    /// Calibrate and sweep whichever model the config selects
    Sweep(RunArgs),
    /// Run the oracle suites and report one pass/fail line per suite
    Verify {
        /// Seed for the randomized oracle cases.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// Flags shared by the experiment subcommands.  Everything is optional; an
/// absent flag leaves the config (or the desk default) alone.
#[derive(Args)]
struct RunArgs {
    /// Experiment file, one `key = value` per line; desk defaults if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset applied over the config file; later flags still override it.
    #[arg(long, value_parser = ["desk", "full"])]
    profile: Option<String>,
    /// Root seed for every random stream in the run.
    #[arg(long)]
    seed: Option<u64>,
    /// False-alarm target in (0, 1).
    #[arg(long)]
    alpha: Option<f64>,
    /// SNR points in dB, comma separated; one sweep per point (radar only).
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Trial count, applied to calibration and evaluation alike.
    #[arg(long)]
    trials: Option<usize>,
    /// Reliability-fraction targets in (0, 1], comma separated.
    #[arg(long)]
    fractions: Option<String>,
    /// Surveillance region construction (radar only).
    #[arg(long, value_parser = ["disc", "ellipse"])]
    region: Option<String>,
    /// Output path: CSV for sweeps, JSON for calibrate.  Runs with several
    /// SNR points insert `-snr<value>dB` before the extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed run, split by exit-code class: usage errors exit 2 (like flag
/// parse errors), numeric/runtime errors exit 1.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<jode_core::Error> for Failure {
    fn from(err: jode_core::Error) -> Self {
        Failure::Run(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = configure_threads().and_then(|_| dispatch(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `jode --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

/// Honors `JODE_THREADS` before any parallel work starts.
fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("JODE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Usage(format!("JODE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Run(format!("thread pool: {e}")))?;
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Calibrate(args) => calibrate_cmd(&args),
        Command::RadarSim(args) => sweep_cmd(&args, Some("radar")),
        Command::ChangepointSim(args) => sweep_cmd(&args, Some("changepoint")),
        Command::Sweep(args) => sweep_cmd(&args, None),
        Command::Verify { seed } => verify_cmd(seed),
    }
}

/// Builds the effective config: desk defaults, then the file, then the
/// profile, then the forced model kind, then the individual flags.
fn assemble_config(args: &RunArgs, force_model: Option<&str>) -> Result<ExperimentConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Usage(format!("config {}: {e}", path.display()))
            })?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::desk(),
    };
    if let Some(profile) = &args.profile {
        config.apply("profile", profile)?;
    }
    if let Some(kind) = force_model {
        config.apply("model", kind)?;
    }
    if let Some(seed) = args.seed {
        config.apply("seed", &seed.to_string())?;
    }
    if let Some(alpha) = args.alpha {
        config.apply("alpha", &format!("{alpha:e}"))?;
    }
    if let Some(snr) = &args.snr {
        config.apply("snr_db", snr)?;
    }
    if let Some(trials) = args.trials {
        config.apply("trials_calibration", &trials.to_string())?;
        config.apply("trials_evaluation", &trials.to_string())?;
    }
    if let Some(fractions) = &args.fractions {
        config.apply("fractions", fractions)?;
    }
    if let Some(region) = &args.region {
        config.apply("region", region)?;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

/// Output path for one SNR point: the declared path, with `-snr<v>dB`
/// spliced in before the extension when the run covers several points.
fn out_path_for(base: &PathBuf, snr_db: f64, multi: bool) -> PathBuf {
    if !multi {
        return base.clone();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let tagged = match base.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}-snr{snr_db}dB.{ext}"),
        None => format!("{stem}-snr{snr_db}dB"),
    };
    base.with_file_name(tagged)
}

fn calibrate_cmd(args: &RunArgs) -> Result<(), Failure> {
    let config = assemble_config(args, None)?;
    let multi = config.snr_db.len() > 1;
    for &snr in &config.snr_db {
        let start = Instant::now();
        let model = build_model(&config, snr)?;
        let bundle = match &model {
            BuiltModel::Radar(m) => run_calibration(m.as_ref(), &config)?,
            BuiltModel::Changepoint(m) => run_calibration(m, &config)?,
        };
        for w in &bundle.warnings {
            log::warn!("{w}");
        }
        log::info!("calibration at {snr} dB took {:.1?}", start.elapsed());
        match &config.out {
            Some(base) => {
                let path = out_path_for(base, snr, multi);
                std::fs::write(&path, bundle.to_json_string())
                    .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
                println!(
                    "snr {snr} dB: gamma_np={:.6e} p_detect(cal)={:.4} -> {}",
                    bundle.gamma_np,
                    bundle.p_detect_calibration,
                    path.display()
                );
            }
            None => print!("{}", bundle.to_json_string()),
        }
    }
    Ok(())
}

fn sweep_cmd(args: &RunArgs, force_model: Option<&str>) -> Result<(), Failure> {
    let config = assemble_config(args, force_model)?;
    let multi = config.snr_db.len() > 1;
    for &snr in &config.snr_db {
        let start = Instant::now();
        let (bundle, result) = run_sweep(&config, snr)?;
        for w in bundle.warnings.iter().chain(&result.warnings) {
            log::warn!("{w}");
        }
        log::info!("sweep at {snr} dB took {:.1?}", start.elapsed());
        print_rows(snr, &result);
        if let Some(base) = &config.out {
            let path = out_path_for(base, snr, multi);
            write_csv(&result, &path)?;
            println!("snr {snr} dB: wrote {}", path.display());
        } else {
            log::info!("no output path declared; csv follows on stdout only as summaries");
            log::debug!("\n{}", csv_string(&result));
        }
    }
    Ok(())
}

fn print_rows(snr_db: f64, result: &SweepResult) {
    for row in &result.rows {
        println!(
            "snr {snr_db} dB {scheme:>8} f={f:.2} lambda={lambda:.6e} realized={r:.3} K={k} \
             p_detect={p:.4} mse={mse:.6e} mse_norm={mn:.6e}",
            scheme = row.scheme,
            f = row.fraction_target,
            lambda = row.lambda,
            r = row.realized_fraction,
            k = row.k,
            p = row.p_detect,
            mse = row.mse,
            mn = row.mse_normalized,
        );
    }
}

fn verify_cmd(seed: u64) -> Result<(), Failure> {
    // Acceptance-sized suites; each line is one oracle family.
    let start = Instant::now();
    let reports = [
        bayes_optimality_suite(50, seed),
        det_identity_suite(100, seed.wrapping_add(1)),
        fading_average_suite(10, 100_000, seed.wrapping_add(2)),
        changepoint_identity_suite(10_000, seed.wrapping_add(3)),
    ];
    let mut failed = 0usize;
    for report in &reports {
        println!("{report}");
        for note in &report.notes {
            println!("  {note}");
        }
        if !report.passed() {
            failed += 1;
        }
    }
    log::info!("verify took {:.1?}", start.elapsed());
    if failed > 0 {
        return Err(Failure::Run(format!("{failed} of {} oracle suites failed", reports.len())));
    }
    Ok(())
}
