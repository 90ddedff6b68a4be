use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skinbench::calib::{
    generate_dataset, select_model, split_dataset, tolerance_report, train_model, CalibrationReport, ModelSpec,
};
use skinbench::config::{parse_models, WorkbenchConfig};
use skinbench::io;
use skinbench::trial::{run_campaign, strawberry_fixture, CampaignReport, TrialSetup};
use skinbench::Error;

/// Acoustic tactile skin workbench: calibrate a force model, then run
/// simulated strawberry gripping trials with it.
#[derive(Parser)]
#[command(name = "skinbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and fit the force calibration.
    #[command(subcommand)]
    Calibrate(Calibrate),
    /// Run gripping trials with a trained model.
    #[command(subcommand)]
    Trial(Trial),
    /// Print the saved calibration and campaign reports.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum Calibrate {
    /// Run the press sweep on the simulated skin and write `dataset.csv`.
    Generate(GenerateArgs),
    /// Cross-validate the candidate models, refit the best, and write
    /// `model.json` and `calibration.json`.
    Train(TrainArgs),
}

#[derive(Subcommand)]
enum Trial {
    /// Run the sample-by-trial campaign and write `campaign.json` plus one
    /// JSON-lines log per trial under `trials/`.
    Run(RunArgs),
}

#[derive(Args)]
struct Common {
    /// Workbench config file (`key = value` lines, `#` comments).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random stream; overrides the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Presses per depth level and subsection.
    #[arg(long, value_name = "N")]
    repeats: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated candidate models, e.g. `linear,gp-exponential`.
    #[arg(long, value_name = "LIST")]
    models: Option<String>,
    /// Calibration CSV to train on [default: OUT/dataset.csv].
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Trained model JSON [default: OUT/model.json].
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Strawberry table CSV (`id,weight_n,peduncle_diameter_mm`) instead of
    /// the built-in five samples.
    #[arg(long, value_name = "PATH")]
    samples: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 2,
            Error::Protocol(_) => 3,
            Error::AllModelsFailed(_) => 4,
            Error::Abort { .. } => 5,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn training(e: Error) -> Failure {
    match e {
        Error::Config(_) => e.into(),
        e => Failure {
            code: 4,
            message: e.to_string(),
        },
    }
}

type CmdResult = Result<(), Failure>;

fn load_config(common: &Common) -> Result<WorkbenchConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => WorkbenchConfig::load(path).map_err(|e| match e {
            Error::Io { .. } => Failure {
                code: 2,
                message: e.to_string(),
            },
            e => e.into(),
        })?,
        None => WorkbenchConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn generate(args: &GenerateArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    if let Some(r) = args.repeats {
        cfg.protocol.repeats = r;
    }
    cfg.validate()?;
    let sim = cfg.simulator()?;
    let ds = generate_dataset(&cfg.protocol, &sim, cfg.seed)?;
    let path = cfg.out_dir.join("dataset.csv");
    io::write_dataset(&ds, &path)?;
    println!("wrote {} samples to {}", ds.len(), path.display());
    Ok(())
}

fn train(args: &TrainArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    if let Some(list) = &args.models {
        cfg.models = parse_models(list)?;
    }
    cfg.validate()?;
    let path = args.dataset.clone().unwrap_or_else(|| cfg.out_dir.join("dataset.csv"));
    let ds = io::read_dataset(&path)?;
    let (train_set, test_set) = split_dataset(&ds, cfg.train_fraction, cfg.seed).map_err(training)?;
    let specs: Vec<ModelSpec> = cfg.models.iter().map(|&k| ModelSpec::new(k)).collect();
    let selection = select_model(&train_set, &specs, cfg.cv_folds, cfg.seed).map_err(training)?;
    let model = train_model(&train_set, &selection.best).map_err(training)?;
    let holdout = tolerance_report(&model, &test_set)?;
    let report = CalibrationReport {
        format_version: io::FORMAT_VERSION,
        seed: cfg.seed,
        folds: cfg.cv_folds,
        n_train: train_set.len(),
        n_test: test_set.len(),
        selection,
        holdout,
    };
    io::save_model(&model, cfg.out_dir.join("model.json"))?;
    io::write_calibration_report(&report, cfg.out_dir.join("calibration.json"))?;
    print!("{}", format_calibration(&report));
    println!("model written to {}", cfg.out_dir.join("model.json").display());
    Ok(())
}

fn run(args: &RunArgs) -> CmdResult {
    let cfg = load_config(&args.common)?;
    cfg.validate()?;
    let sim = cfg.simulator()?;
    let model_path = args.model.clone().unwrap_or_else(|| cfg.out_dir.join("model.json"));
    let model = io::load_model(&model_path)?;
    if model.dim() != sim.signal.bands() {
        return Err(Error::Config(format!(
            "model expects {} features but the simulator produces {}",
            model.dim(),
            sim.signal.bands()
        ))
        .into());
    }
    let samples = match &args.samples {
        Some(p) => io::read_samples(p)?,
        None => strawberry_fixture(),
    };
    let setup = TrialSetup {
        model: &model,
        trial: &cfg.trial,
        controller: &cfg.controller,
        sim: &sim,
        slip: cfg.slip,
    };
    let campaign = run_campaign(&samples, cfg.trials_per_sample, &setup, cfg.seed)?;
    let trials_dir = cfg.out_dir.join("trials");
    for r in &campaign.runs {
        if let Some(log) = &r.log {
            io::write_trial_log(log, trials_dir.join(io::trial_log_name(r.sample_id, r.trial)))?;
        }
    }
    let report_path = cfg.out_dir.join("campaign.json");
    io::write_report(&campaign.report, &report_path)?;
    print!("{}", format_campaign(&campaign.report));
    println!("report written to {}", report_path.display());
    if campaign.report.aborts() > 0 {
        return Err(Failure {
            code: 5,
            message: format!("{} trial(s) hit the safety abort", campaign.report.aborts()),
        });
    }
    Ok(())
}

fn report(args: &ReportArgs) -> CmdResult {
    let cfg = load_config(&args.common)?;
    let calib = cfg.out_dir.join("calibration.json");
    let camp = cfg.out_dir.join("campaign.json");
    let mut found = false;
    if calib.exists() {
        print!("{}", format_calibration(&io::read_calibration_report(&calib)?));
        found = true;
    }
    if camp.exists() {
        if found {
            println!();
        }
        print!("{}", format_campaign(&io::read_report(&camp)?));
        found = true;
    }
    if !found {
        return Err(Failure {
            code: 1,
            message: format!("no calibration.json or campaign.json in {}", cfg.out_dir.display()),
        });
    }
    Ok(())
}

fn format_calibration(r: &CalibrationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}-fold CV on {} training samples (seed {})", r.folds, r.n_train, r.seed);
    let _ = writeln!(s, "{:<5} {:<24} {:>12}", "rank", "model", "cv_rmse_n");
    for (i, row) in r.selection.ranking.iter().enumerate() {
        let _ = writeln!(s, "{:<5} {:<24} {:>12.6}", i + 1, row.spec.kind.name(), row.rmse);
    }
    for (spec, why) in &r.selection.failures {
        let _ = writeln!(s, "{:<5} {:<24} failed: {why}", "-", spec.kind.name());
    }
    let _ = writeln!(s, "selected: {}", r.selection.best.kind);
    let h = &r.holdout;
    let _ = writeln!(s, "holdout ({} samples):", h.n);
    for (t, p) in h.thresholds.iter().zip(&h.pct_within) {
        let _ = writeln!(s, "  within +/-{t:.1} N  {p:6.2}%");
    }
    let _ = writeln!(s, "  MAE {:.4} N (std {:.4}), RMSE {:.4} N", h.mae, h.mae_std, h.rmse);
    s
}

fn format_campaign(r: &CampaignReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<8}", "sample");
    for t in 0..r.trials_per_sample {
        let _ = write!(s, " {:>9}", format!("trial {}", t + 1));
    }
    let _ = writeln!(s, " {:>9}", "average");
    for (i, id) in r.sample_ids.iter().enumerate() {
        let _ = write!(s, "{id:<8}");
        for m in &r.mae[i] {
            let _ = write!(s, " {:>9}", cell(*m));
        }
        let _ = writeln!(s, " {:>9}", cell(r.sample_average[i]));
    }
    let _ = writeln!(
        s,
        "max trial MAE {} N, max sample average {} N, slip events {}, aborts {}",
        cell(r.max_trial_mae),
        cell(r.max_sample_average),
        r.total_slip_events(),
        r.aborts()
    );
    for f in &r.failures {
        let _ = writeln!(s, "sample {} trial {} failed: {}", f.sample_id, f.trial + 1, f.reason);
    }
    s
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Calibrate(Calibrate::Generate(a)) => generate(a),
        Command::Calibrate(Calibrate::Train(a)) => train(a),
        Command::Trial(Trial::Run(a)) => run(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("skinbench: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
