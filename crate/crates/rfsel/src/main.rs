use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rfsel::config::SyntheticConfig;
use rfsel::report::{summarize, write_reports, DatasetInfo, Manifest, RunReports};
use rfsel::runner::{load_dataset, resolve_workers, run_experiment};
use rfsel::{write_csv, CliError, RunConfig};
use rfsel_core::generate_synthetic;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "rfsel", version, about = "Bootstrap stability benchmark for ensemble-based feature selection")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config (or a run manifest).
    Run {
        config: PathBuf,
        /// Worker threads; overrides the config file.
        #[arg(long, env = "RFSEL_WORKERS")]
        workers: Option<usize>,
        /// Output directory; overrides the config file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic dataset as CSV, plus `<out>.truth.json`.
    Gen { spec: PathBuf, out: PathBuf },
    /// Print the report tables of a finished run.
    Report { run_dir: PathBuf },
}

#[derive(Serialize)]
struct TruthFile<'a> {
    relevant: Vec<&'a str>,
    redundant: Vec<&'a str>,
    noise: Vec<&'a str>,
}

fn run(config: PathBuf, workers: Option<usize>, output: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = RunConfig::load(&config)?;
    cfg.validate()?;
    let out_dir = output.unwrap_or_else(|| cfg.output.clone());
    let workers = resolve_workers(workers.or(cfg.workers));
    let (d, _) = load_dataset(&cfg.dataset)?;
    let result = run_experiment(&d, &cfg, workers)?;
    let info = DatasetInfo { n_objects: d.n_objects(), n_features: d.n_features(), n_classes: d.n_classes() };
    let manifest = Manifest::new(&cfg, info, &result);
    for path in write_reports(&out_dir, &RunReports::from_result(&result), Some(&manifest))? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn gen(spec: PathBuf, out: PathBuf) -> Result<(), CliError> {
    let spec = SyntheticConfig::load(&spec)?;
    let (d, truth) = generate_synthetic(&spec.to_spec()).map_err(|e| CliError::Config(e.to_string()))?;
    write_csv(&d, &out, "class")?;
    let names = |idx: &[usize]| idx.iter().map(|&f| d.feature_names()[f].as_str()).collect();
    let sidecar = TruthFile { relevant: names(&truth.relevant), redundant: names(&truth.redundant), noise: names(&truth.noise) };
    let mut path = out.into_os_string();
    path.push(".truth.json");
    let path = PathBuf::from(path);
    let body = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    std::fs::write(&path, body).map_err(|source| CliError::Output { path, source })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Run { config, workers, output } => run(config, workers, output),
        Command::Gen { spec, out } => gen(spec, out),
        Command::Report { run_dir } => summarize(&run_dir).map(|s| print!("{s}")),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rfsel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
