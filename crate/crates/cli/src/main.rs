use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eass_core::config::RunConfig;
use eass_core::optimize::SolverBackend;
use eass_core::sim::{self, Dataset, Policy, SweepAxis};
use eass_core::synth::{self, SyntheticSpec};
use eass_core::{io, Error};

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_WARMUP: u8 = 4;
const EXIT_VIOLATIONS: u8 = 5;

#[derive(Parser)]
#[command(name = "eass", version, about = "Emission-aware scheduling of distributed grid storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default configuration, or write it to a file.
    Init {
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate a seeded synthetic dataset and a configuration pointing at it.
    Synth(SynthArgs),
    /// Simulate every configured policy and write the daily report and summary.
    Run(RunArgs),
    /// Repeat the run along one parameter axis.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// battery_hours, rate_hours, penetration or gamma.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Forecast error per transformer against the previous-day copy.
    ForecastEval(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Directory that receives the input files.
    #[arg(long)]
    out: PathBuf,
    /// JSON synthetic spec; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    transformers: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    solar: Option<f64>,
    #[arg(long)]
    temperature_amplitude: Option<f64>,
}

/// Configuration file plus per-field overrides.
#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, env = "EASS_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    battery_hours: Option<f64>,
    #[arg(long)]
    rate_hours: Option<f64>,
    #[arg(long)]
    penetration: Option<f64>,
    #[arg(long)]
    eta_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    warmup_days: Option<usize>,
    #[arg(long)]
    horizon_days: Option<usize>,
    #[arg(long)]
    solver: Option<String>,
    /// Comma-separated policy names.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, e: impl std::fmt::Display) -> Self {
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn config_error(e: Error) -> Failure {
    Failure::new(EXIT_CONFIG, e)
}

/// Classifies errors raised while reading input data or running.
fn run_error(e: Error) -> Failure {
    let code = match e {
        Error::InsufficientWarmup(_) | Error::InsufficientHistory(_) => EXIT_WARMUP,
        Error::Io { .. } | Error::Parse { .. } | Error::Empty(_) | Error::LengthMismatch { .. } => EXIT_DATA,
        Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_OTHER,
    };
    Failure::new(code, e)
}

impl RunArgs {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = io::read_to_string(p).map_err(config_error)?;
                RunConfig::from_json(&text).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &self.output_dir {
            cfg.paths.output_dir = v.clone();
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.battery_hours {
            cfg.battery_hours = v;
        }
        if let Some(v) = self.rate_hours {
            cfg.rate_hours = Some(v);
        }
        if let Some(v) = self.penetration {
            cfg.penetration = v;
        }
        if let Some(v) = self.eta_fraction {
            cfg.eta_fraction = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.warmup_days {
            cfg.warmup_days = v;
        }
        if let Some(v) = self.horizon_days {
            cfg.horizon_days = Some(v);
        }
        if let Some(v) = &self.solver {
            cfg.solver = v.parse::<SolverBackend>().map_err(config_error)?;
        }
        if let Some(v) = &self.policies {
            cfg.policies = v
                .iter()
                .map(|s| s.trim().parse::<Policy>())
                .collect::<Result<_, _>>()
                .map_err(config_error)?;
        }
        cfg.validate().map_err(config_error)?;
        cfg.check_inputs_exist().map_err(|e| Failure::new(EXIT_DATA, e))?;
        Ok(cfg)
    }
}

fn load_data(cfg: &RunConfig) -> CliResult<Dataset> {
    Dataset::load(&cfg.paths, cfg.slot_minutes).map_err(|e| match e {
        Error::InsufficientHistory(_) | Error::InsufficientWarmup(_) => Failure::new(EXIT_WARMUP, e),
        e => Failure::new(EXIT_DATA, e),
    })
}

/// Evaluation span and forecasts, as the run would compute them.
fn forecasts(cfg: &RunConfig, data: &Dataset) -> CliResult<sim::ForecastSet> {
    if cfg.warmup_days < sim::MIN_WARMUP_DAYS || data.days() <= cfg.warmup_days {
        return Err(Failure::new(
            EXIT_WARMUP,
            Error::InsufficientWarmup(format!(
                "need at least {} warmup days followed by evaluation data; have {} days with {} warmup",
                sim::MIN_WARMUP_DAYS,
                data.days(),
                cfg.warmup_days
            )),
        ));
    }
    let days = cfg.horizon_days.unwrap_or(data.days() - cfg.warmup_days);
    sim::prepare_forecasts(data, &cfg.forecast, cfg.warmup_days, days).map_err(run_error)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", dir.display())))?;
    }
    io::write_string(path, text).map_err(|e| Failure::new(EXIT_OTHER, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn cmd_init(output: Option<PathBuf>) -> CliResult<()> {
    let text = RunConfig::default().to_json().map_err(|e| Failure::new(EXIT_OTHER, e))?;
    match output {
        Some(p) => write(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = io::read_to_string(p).map_err(config_error)?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", p.display())))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(v) = args.transformers {
        spec.n_transformers = v;
    }
    if let Some(v) = args.days {
        spec.days = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.noise {
        spec.noise_level = v;
    }
    if let Some(v) = args.solar {
        spec.solar_fraction = v;
    }
    if let Some(v) = args.temperature_amplitude {
        spec.temperature_amplitude_c = v;
    }
    let data = synth::generate(&spec).map_err(config_error)?;
    let paths = data.write(&args.out).map_err(|e| Failure::new(EXIT_OTHER, e))?;
    let cfg = RunConfig {
        paths,
        slot_minutes: spec.slot_minutes,
        seed: spec.seed,
        ..RunConfig::default()
    };
    let text = cfg.to_json().map_err(|e| Failure::new(EXIT_OTHER, e))?;
    write(&args.out.join("config.json"), &text)?;
    println!(
        "{} transformers over {} days written to {}",
        spec.n_transformers,
        spec.days,
        args.out.display()
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let data = load_data(&cfg)?;
    let fc = forecasts(&cfg, &data)?;
    let report = sim::run_horizon(&cfg, &data, &fc).map_err(run_error)?;
    let out = &cfg.paths.output_dir;
    write(&out.join("report.csv"), &report.report_csv())?;
    write(&out.join("summary.json"), &report.summary_json().map_err(run_error)?)?;
    for t in &report.totals {
        println!(
            "{:<16} saved {:>14.3} kg  {:>8.4}%  violations {}  adjustments {}",
            t.policy.name(),
            t.savings_kg,
            t.savings_pct,
            t.violations,
            t.adjustments
        );
    }
    let violations = report.total_violations();
    if violations > 0 {
        return Err(Failure::new(
            EXIT_VIOLATIONS,
            format!("{violations} constraint violations in realized schedules; see {}", out.join("report.csv").display()),
        ));
    }
    Ok(())
}

fn cmd_sweep(args: RunArgs, axis: &str, values: &[f64]) -> CliResult<()> {
    let axis: SweepAxis = axis.parse().map_err(config_error)?;
    let cfg = args.resolve()?;
    for &v in values {
        axis.apply(&cfg, v).map_err(config_error)?;
    }
    let data = load_data(&cfg)?;
    let fc = forecasts(&cfg, &data)?;
    let table = sim::sweep(&cfg, &data, &fc, axis, values).map_err(run_error)?;
    let out = &cfg.paths.output_dir;
    write(&out.join(format!("sweep_{axis}.csv")), &table.to_csv())?;
    write(&out.join(format!("sweep_{axis}.json")), &table.to_json().map_err(run_error)?)?;
    for r in &table.rows {
        println!("{axis}={:<8} {:<16} {:>8.4}%", r.value, r.policy.name(), r.savings_pct);
    }
    let violations: usize = table.rows.iter().map(|r| r.violations).sum();
    if violations > 0 {
        return Err(Failure::new(EXIT_VIOLATIONS, format!("{violations} constraint violations across the sweep")));
    }
    Ok(())
}

fn cmd_forecast_eval(args: RunArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let data = load_data(&cfg)?;
    let fc = forecasts(&cfg, &data)?;
    write(&cfg.paths.output_dir.join("forecast_mape.csv"), &sim::mape_csv(&data, &fc))?;
    let s = sim::MapeSummary::from_forecasts(&fc);
    println!(
        "MAPE over {} transformers: mean {:.3}%, median {:.3}%, range {:.3}..{:.3}%; previous-day copy {:.3}%",
        s.transformers, s.mean_pct, s.median_pct, s.min_pct, s.max_pct, s.persistence_mean_pct
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Init { output } => cmd_init(output),
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep { run, axis, values } => cmd_sweep(run, &axis, &values),
        Command::ForecastEval(a) => cmd_forecast_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
