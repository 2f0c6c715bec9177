//! `gridcast`: demand forecasting, residual fitting and market simulation
//! from the command line.

mod config;
mod forecast;
mod market;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "gridcast", version, about = "Day-ahead demand forecasting and market simulation")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalise an hourly demand CSV.
    Ingest(IngestArgs),
    /// Generate a synthetic hourly demand series.
    Synth(SynthArgs),
    /// Train 24 per-hour models for each configured algorithm.
    Train(TrainArgs),
    /// Score saved models on the test period and analyse reserve coverage.
    Evaluate(EvaluateArgs),
    /// Fit residual distributions and keep the lowest-SSE family.
    FitResiduals(FitResidualsArgs),
    /// Run one market simulation.
    Simulate(SimulateArgs),
    /// Sweep demand-noise levels or residual distributions over seeds.
    Sensitivity(SensitivityArgs),
    /// Long-format tables for plotting from earlier outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Hourly demand CSV (overrides `data.path`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// First test date (overrides `features.test_start`).
    #[arg(long)]
    test_start: Option<NaiveDate>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Raw CSV (overrides `data.path`).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    timestamp_column: Option<String>,
    #[arg(long)]
    demand_column: Option<String>,
    /// chrono format of the timestamp column.
    #[arg(long)]
    timestamp_format: Option<String>,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "demand.csv")]
    name: String,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Noise seed (overrides `data.synth.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Length in days (overrides `data.synth.n_days`).
    #[arg(long)]
    days: Option<usize>,
    /// First day (overrides `data.synth.start`).
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Hourly noise standard deviation in MWh (overrides `data.synth.noise_sd_mwh`).
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Emit the shipped drifting benchmark series.
    #[arg(long)]
    drift_benchmark: bool,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "demand.csv")]
    name: String,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated algorithm names (overrides `train.algorithms`).
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    /// Base seed for fits and grid search (overrides `train.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write wall-clock timings (not reproducible byte for byte).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Directory of `hour_HH.json` models; defaults to the first trained
    /// algorithm under `<out>/models`.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long, default_value_t = gridcast::eval::MAX_RESERVE_MWH)]
    max_reserve: f64,
    #[arg(long, default_value_t = gridcast::eval::AVG_RESERVE_MWH)]
    avg_reserve: f64,
}

#[derive(Debug, Args)]
struct FitResidualsArgs {
    /// CSV with a `residual` column (overrides `residuals.input`).
    #[arg(long)]
    residuals: Option<PathBuf>,
    /// Comma-separated families (overrides `residuals.families`).
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    /// Fixed histogram bin count instead of Freedman–Diaconis.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario TOML (overrides `simulate.scenario`).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// First simulated year (overrides the scenario).
    #[arg(long)]
    start_year: Option<i32>,
    /// Last simulated year (overrides the scenario).
    #[arg(long)]
    end_year: Option<i32>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Residual distribution document.
    #[arg(long, conflicts_with = "normal_sd")]
    distribution: Option<PathBuf>,
    /// Normal(0, σ) demand noise in MW.
    #[arg(long)]
    normal_sd: Option<f64>,
    /// Simulation seed (overrides `simulate.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated σ values in MW.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', conflicts_with = "n_seeds")]
    seeds: Option<Vec<u64>>,
    /// Seeds 0..N.
    #[arg(long)]
    n_seeds: Option<u64>,
    /// `label=path` residual distributions; switches to a distribution sweep.
    #[arg(long = "distribution")]
    distributions: Vec<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directories holding earlier outputs; defaults to the output directory.
    #[arg(long = "from")]
    from: Vec<PathBuf>,
}

fn apply_data(cfg: &mut RunConfig, a: &DataArgs) {
    if let Some(p) = &a.data {
        cfg.data.path = Some(p.clone());
    }
    if let Some(d) = a.test_start {
        cfg.features.test_start = Some(d);
    }
}

fn apply_scenario(cfg: &mut RunConfig, a: &ScenarioArgs) {
    if let Some(p) = &a.scenario {
        cfg.simulate.scenario = Some(p.clone());
    }
    if a.start_year.is_some() {
        cfg.simulate.start_year = a.start_year;
    }
    if a.end_year.is_some() {
        cfg.simulate.end_year = a.end_year;
    }
}

fn run(cli: Cli) -> Result<String> {
    let mut cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    match cli.command {
        Command::Ingest(a) => {
            if let Some(p) = a.input {
                cfg.data.path = Some(p);
            }
            if let Some(c) = a.timestamp_column {
                cfg.data.timestamp_column = c;
            }
            if let Some(c) = a.demand_column {
                cfg.data.demand_column = c;
            }
            if a.timestamp_format.is_some() {
                cfg.data.timestamp_format = a.timestamp_format;
            }
            forecast::ingest(&cfg, &a.name)
        }
        Command::Synth(a) => {
            let s = cfg.data.synth.get_or_insert_with(Default::default);
            if let Some(v) = a.seed {
                s.seed = v;
            }
            if let Some(v) = a.days {
                s.n_days = v;
            }
            if let Some(v) = a.start {
                s.start = v;
            }
            if let Some(v) = a.noise_sd {
                s.noise_sd_mwh = v;
            }
            s.drift_benchmark |= a.drift_benchmark;
            cfg.data.path = None;
            forecast::synth(&cfg, &a.name)
        }
        Command::Train(a) => {
            apply_data(&mut cfg, &a.data);
            if let Some(v) = a.algorithms {
                cfg.train.algorithms = v;
            }
            if let Some(v) = a.seed {
                cfg.train.seed = v;
            }
            forecast::train(&cfg, a.timings)
        }
        Command::Evaluate(a) => {
            apply_data(&mut cfg, &a.data);
            forecast::evaluate(&cfg, a.models.as_deref(), a.max_reserve, a.avg_reserve)
        }
        Command::FitResiduals(a) => {
            if let Some(p) = a.residuals {
                cfg.residuals.input = Some(p);
            }
            if let Some(f) = a.families {
                cfg.residuals.families = f;
            }
            if let Some(n) = a.bins {
                cfg.residuals.bin_rule = gridcast::residuals::BinRule::Fixed { n_bins: n };
            }
            market::fit_residuals(&cfg)
        }
        Command::Simulate(a) => {
            apply_scenario(&mut cfg, &a.scenario);
            if let Some(p) = a.distribution {
                cfg.simulate.distribution = Some(p);
                cfg.simulate.normal_sd_mw = None;
            }
            if let Some(sd) = a.normal_sd {
                cfg.simulate.normal_sd_mw = Some(sd);
                cfg.simulate.distribution = None;
            }
            if let Some(s) = a.seed {
                cfg.simulate.seed = s;
            }
            market::simulate(&cfg)
        }
        Command::Sensitivity(a) => {
            apply_scenario(&mut cfg, &a.scenario);
            if let Some(s) = a.sigmas {
                cfg.simulate.sigmas_mw = s;
            }
            if let Some(s) = a.seeds {
                cfg.simulate.sweep_seeds = s;
            }
            if let Some(n) = a.n_seeds {
                cfg.simulate.sweep_seeds = (0..n).collect();
            }
            if !a.distributions.is_empty() {
                cfg.simulate.distributions = a
                    .distributions
                    .iter()
                    .map(|d| {
                        d.split_once('=')
                            .map(|(l, p)| (l.to_string(), PathBuf::from(p)))
                            .with_context(|| format!("--distribution `{d}` is not of the form label=path"))
                    })
                    .collect::<Result<_>>()?;
            }
            market::sensitivity(&cfg)
        }
        Command::Report(a) => {
            let from = if a.from.is_empty() { vec![cfg.output.dir.clone()] } else { a.from };
            report::report(&cfg, &from)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.jobs);
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
