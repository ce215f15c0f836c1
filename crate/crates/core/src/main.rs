use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dhaka_weather::config::RunConfig;
use dhaka_weather::ingest::{
    clean_missing, fetch_power_daily, parse_power_csv, synth, write_power_csv, FetchError, FixtureTransport,
    HttpTransport, PowerRequest, RetryPolicy, UreqTransport, WeatherTable,
};
use dhaka_weather::pipeline::{self, PipelineError};
use dhaka_weather::preprocess::Target;

const EXIT_USAGE: u8 = 1;
const EXIT_NETWORK: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_MISSING_INPUT: u8 = 4;
const EXIT_MODEL: u8 = 5;

#[derive(Parser)]
#[command(name = "weather-bench", version, about = "Daily weather classification benchmark on NASA POWER data")]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    target: Option<Target>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Predict the label this many days after the feature row.
    #[arg(long, global = true)]
    lag: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download the daily series (or load it from a local file) and write raw and cleaned CSVs.
    Fetch {
        /// Read this POWER CSV instead of calling the API.
        #[arg(long, conflicts_with = "simulate")]
        offline: Option<PathBuf>,
        /// Generate the series with the built-in seeded simulator (labelled synthetic).
        #[arg(long)]
        simulate: bool,
    },
    /// Correlation, density and monthly profile CSVs.
    Analyze {
        /// Cleaned CSV to read instead of `clean_csv` from the config.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train and score the six models on one split.
    Benchmark {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(EXIT_MISSING_INPUT, format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(t) = cli.target {
        config.target = t;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.output_dir = o.clone();
    }
    if let Some(l) = cli.lag {
        config.lag = l;
    }
    config.validate().map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    Ok(config)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn read_table(path: &Path) -> Result<WeatherTable, Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        fail(EXIT_MISSING_INPUT, format!("{}: {e} (run `weather-bench fetch` first)", path.display()))
    })?;
    parse_power_csv(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn cmd_fetch(config: &RunConfig, offline: Option<PathBuf>, simulate: bool) -> Result<(), Failure> {
    let raw = if simulate {
        write_power_csv(&synth::simulate_dhaka(config.start, config.end, config.seed))
    } else {
        let request = PowerRequest::all_features(config.latitude, config.longitude, config.start, config.end);
        let transport: Box<dyn HttpTransport> = match &offline {
            Some(path) => {
                if !path.exists() {
                    return Err(fail(EXIT_MISSING_INPUT, format!("{}: no such file", path.display())));
                }
                Box::new(FixtureTransport::new(path))
            }
            None => Box::new(UreqTransport::default()),
        };
        eprintln!("fetching {}", request.url());
        fetch_power_daily(&request, transport.as_ref(), RetryPolicy::default()).map_err(|e| match e {
            FetchError::InvalidRequest(_) => fail(EXIT_USAGE, e.to_string()),
            _ => fail(EXIT_NETWORK, e.to_string()),
        })?
    };
    write_file(&config.raw_csv, &raw)?;
    let table = parse_power_csv(&raw).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    let cleaned = clean_missing(&table, config.cleaning).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    write_file(&config.clean_csv, &write_power_csv(&cleaned))?;
    println!("raw rows: {}  -> {}", table.len(), config.raw_csv.display());
    println!("clean rows: {}  -> {}", cleaned.len(), config.clean_csv.display());
    Ok(())
}

fn pipeline_failure(e: PipelineError) -> Failure {
    match e {
        PipelineError::Model { .. } => fail(EXIT_MODEL, e.to_string()),
        PipelineError::Config(_) => fail(EXIT_USAGE, e.to_string()),
        PipelineError::Io { .. } => fail(EXIT_USAGE, e.to_string()),
        PipelineError::Preprocess(_) | PipelineError::Analysis(_) => fail(EXIT_MODEL, e.to_string()),
    }
}

fn cmd_analyze(config: &RunConfig, input: Option<PathBuf>) -> Result<(), Failure> {
    let table = read_table(input.as_deref().unwrap_or(&config.clean_csv))?;
    let written = pipeline::run_analysis(&config.output_dir, config, &table).map_err(pipeline_failure)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_benchmark(config: &RunConfig, input: Option<PathBuf>) -> Result<(), Failure> {
    let table = read_table(input.as_deref().unwrap_or(&config.clean_csv))?;
    let prep = pipeline::prepare(config, &table).map_err(pipeline_failure)?;
    let outcome = pipeline::run_benchmark(config, &prep).map_err(pipeline_failure)?;
    pipeline::write_benchmark(&config.output_dir, config, &outcome).map_err(pipeline_failure)?;
    let target = config.target.name();
    if let Ok(table) = fs::read_to_string(config.output_dir.join(format!("table_{target}.txt"))) {
        print!("{table}");
    }
    println!("results in {}", config.output_dir.display());
    match outcome.first_failure() {
        Some(e) => Err(fail(EXIT_MODEL, e.to_string())),
        None => Ok(()),
    }
}

fn run() -> Result<(), Failure> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return if code == 0 { Ok(()) } else { Err(fail(code, String::new())) };
        }
    };
    let config = load_config(&cli)?;
    match cli.command {
        Command::Fetch { offline, simulate } => cmd_fetch(&config, offline, simulate),
        Command::Analyze { input } => cmd_analyze(&config, input),
        Command::Benchmark { input } => cmd_benchmark(&config, input),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
