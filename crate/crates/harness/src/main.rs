use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use safefcm::algorithm::{run_once, Algorithm, RunSpec};
use safefcm::catalog::{default_data_dir, DataSource, DatasetName};
use safefcm::config::ExperimentConfig;
use safefcm::csv_io::write_dataset_csv;
use safefcm::oracle::{data_checks, formula_checks};
use safefcm::reference::DEFAULT_TOLERANCE;
use safefcm::report::write_report;
use safefcm::sweep::run_sweep_from;

#[derive(Parser)]
#[command(name = "safefcm", version, about = "Safe semi-supervised fuzzy c-means benchmarks")]
struct Cli {
    /// Directory holding the UCI CSV files.
    #[arg(long, global = true, env = "SAFEFCM_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic datasets as CSV.
    GenData {
        #[arg(long, default_value = "data")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit one algorithm on one seeded split and print the outcome as JSON.
    Run {
        #[arg(long)]
        dataset: DatasetName,
        #[arg(long, value_enum, default_value_t = Algorithm::Kgbs3fcm)]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 0.0)]
        ratio: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda1: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Experiment config supplying the labeled fraction and solver settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run (or resume) a sweep into an output directory.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the worker count of the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Summarize a sweep directory.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Exit with status 1 when any checked cell is outside the tolerance.
        #[arg(long)]
        check: bool,
    },
    /// Run the oracle checks and print them as JSON.
    Oracle {
        /// Skip the checks that need dataset files.
        #[arg(long)]
        formulas_only: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn source(dir: Option<PathBuf>, cfg: &ExperimentConfig) -> DataSource {
    let mut src = DataSource { standardize: cfg.standardize, synthetic_seed: cfg.synthetic_seed, ..DataSource::default() };
    if let Some(d) = dir {
        src.dir = d;
    }
    src
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenData { out, seed } => {
            std::fs::create_dir_all(&out)?;
            let src = DataSource { standardize: false, synthetic_seed: seed, ..DataSource::default() };
            for name in DatasetName::ALL.into_iter().filter(|d| d.is_synthetic()) {
                let path = out.join(format!("{name}.csv"));
                write_dataset_csv(&src.load(name)?, &path)?;
                println!("{}", path.display());
            }
        }
        Command::Run { dataset, algorithm, ratio, lambda1, lambda2, seed, config } => {
            let cfg = load_config(config.as_ref())?;
            let ds = source(cli.data_dir, &cfg).load(dataset)?;
            let spec = RunSpec { algorithm, mislabel_ratio: ratio, lambda1, lambda2, labeled_fraction: cfg.labeled_fraction, seed };
            let outcome = run_once(&ds, &spec, &cfg.safe)?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
        }
        Command::Sweep { config, out, workers } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let dir = cli.data_dir.unwrap_or_else(default_data_dir);
            let s = run_sweep_from(&cfg, &dir, &out)?;
            println!(
                "executed {} skipped {} failed {} missing datasets {}",
                s.executed, s.skipped, s.failed, s.missing_datasets
            );
        }
        Command::Report { out, tolerance, check } => {
            let r = write_report(&out, tolerance).with_context(|| format!("summarizing {}", out.display()))?;
            print!("{}", r.comparison.to_markdown());
            for d in r.comparison.missing() {
                log::warn!("{d}: no complete results");
            }
            println!("{} records, {} cells outside ±{tolerance}", r.records, r.comparison.flags());
            if check && r.comparison.flags() > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Oracle { formulas_only, json } => {
            let mut checks = formula_checks()?;
            if !formulas_only {
                checks.extend(data_checks(&source(cli.data_dir, &ExperimentConfig::default()))?);
            }
            for c in &checks {
                eprintln!("{} {} ({:.3e} / {:.1e}) {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.error, c.tolerance, c.detail);
            }
            let text = serde_json::to_string_pretty(&checks)?;
            match json {
                Some(p) => std::fs::write(&p, text)?,
                None => println!("{text}"),
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
