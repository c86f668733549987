use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nomafl_core::{canonicalize, run_scheme, SchemeId};
use nomafl_harness::config::{ScenarioConfig, SCHEMA_VERSION};
use nomafl_harness::io::{read_instance, write_instance, write_json, ReportFile};
use nomafl_harness::sampling::sample_raw;
use nomafl_harness::{oracle, plot, sweep, Result};

#[derive(Parser)]
#[command(
    name = "nomafl",
    version,
    about = "Resource allocation for NOMA federated learning with synthetic data"
)]
struct Cli {
    /// Overrides the seed of a scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file and write the reports as JSON.
    Solve {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Schemes to run (repeatable); all of them by default.
        #[arg(long = "scheme")]
        schemes: Vec<SchemeId>,
    },
    /// Draw one instance of a scenario.
    Sample {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        drop: usize,
        /// Sweep value; the first one of the scenario by default.
        #[arg(long)]
        value: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario sweep and write the per-point means as CSV.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a sweep CSV as an SVG line chart.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print reference values: closed-form, downlink, uplink, dgen or all.
    Oracle { suite: String },
}

fn load(path: &std::path::Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            instance,
            out,
            schemes,
        } => {
            let inst = canonicalize(&read_instance(&instance)?)?;
            let schemes = if schemes.is_empty() {
                SchemeId::ALL.to_vec()
            } else {
                schemes
            };
            let file = ReportFile {
                schema_version: SCHEMA_VERSION,
                index_map: inst.index_map.clone(),
                reports: schemes.iter().map(|&s| run_scheme(&inst, s)).collect(),
            };
            match out {
                Some(path) => write_json(&file, &path)?,
                None => println!("{}", serde_json::to_string_pretty(&file)?),
            }
        }
        Command::Sample {
            config,
            drop,
            value,
            out,
        } => {
            let cfg = load(&config, cli.seed)?;
            let v = value.unwrap_or(cfg.sweep.values[0]);
            write_instance(&sample_raw(&cfg, drop, v), &out)?;
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config, cli.seed)?;
            sweep::write_csv(&sweep::run_sweep(&cfg)?, &out)?;
        }
        Command::Plot { csv, out } => plot::emit_plot(&csv, &out)?,
        Command::Oracle { suite } => {
            print!("{}", oracle::run_suite(&suite, cli.seed.unwrap_or(0))?)
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
