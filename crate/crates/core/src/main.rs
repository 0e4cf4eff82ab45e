use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use muse::harness::{self, Method, RunConfig, RunSettings};
use muse::metrics::EceConfig;
use muse::record::ExpansionKind;
use muse::select::{Aggregation, MuseParams};
use muse::synth::{self, RegionWeights, SynthConfig};
use muse::Error;

#[derive(Parser)]
#[command(name = "muse", version, about = "Subset selection and aggregation of binary predictive distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one method over a record file.
    Run(RunArgs),
    /// Evaluate a MUSE method over an (m_min, eps_tol) grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated m_min values.
        #[arg(long, value_delimiter = ',', required = true)]
        m_min_values: Vec<usize>,
        /// Comma-separated eps_tol values.
        #[arg(long, value_delimiter = ',', required = true)]
        eps_tol_values: Vec<f64>,
    },
    /// Compare p_yes and total uncertainty as scoring signals.
    CompareSignals(RunArgs),
    /// Generate a synthetic record file and labels CSV.
    Synth(SynthArgs),
    /// Check a record file (and optional labels) without running anything.
    Validate {
        records: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sll,
    GenBs,
    Majority,
    Mean,
    MuseGreedy,
    MuseConservative,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sll => Method::Sll,
            MethodArg::GenBs => Method::GenBs,
            MethodArg::Majority => Method::Majority,
            MethodArg::Mean => Method::Mean,
            MethodArg::MuseGreedy => Method::MuseGreedy,
            MethodArg::MuseConservative => Method::MuseConservative,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpansionArg {
    Point,
    Replicates,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Mean,
    AleatoricWeighted,
}

#[derive(Args)]
struct RunArgs {
    /// JSONL record file.
    records: PathBuf,
    /// Optional item_id,label CSV.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "muse-greedy")]
    method: MethodArg,
    #[arg(long, default_value_t = 20)]
    m_min: usize,
    /// Accepts `inf`.
    #[arg(long, default_value_t = 0.04)]
    eps_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    square_jsd: bool,
    #[arg(long, value_enum, default_value = "mean")]
    aggregation: AggregationArg,
    #[arg(long, value_enum, default_value = "replicates")]
    expansion: ExpansionArg,
    #[arg(long, default_value_t = 100)]
    bootstrap_trials: usize,
    #[arg(long, default_value_t = 0.9)]
    bootstrap_fraction: f64,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to these models (repeatable).
    #[arg(long = "model")]
    models: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    vote_threshold: f64,
    /// Record the wall-clock time in the report header (breaks byte-identical reruns).
    #[arg(long)]
    stamp_time: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        let settings = RunSettings {
            method: self.method.into(),
            muse: MuseParams {
                beta: self.beta,
                eps_tol: self.eps_tol,
                tau: self.tau,
                m_min: self.m_min,
                square_jsd: self.square_jsd,
                aggregation: match self.aggregation {
                    AggregationArg::Mean => Aggregation::Mean,
                    AggregationArg::AleatoricWeighted => Aggregation::AleatoricWeighted,
                },
            },
            bootstrap_trials: self.bootstrap_trials,
            bootstrap_fraction: self.bootstrap_fraction,
            seed: self.seed,
            expansion: match self.expansion {
                ExpansionArg::Point => ExpansionKind::Point,
                ExpansionArg::Replicates => ExpansionKind::Replicates,
            },
            ece: EceConfig { n_bins: self.bins },
            models: self.models.clone(),
            vote_threshold: self.vote_threshold,
            timestamp: self.stamp_time.then(|| chrono::Utc::now().to_rfc3339()),
        };
        RunConfig {
            records: self.records.clone(),
            labels: self.labels.clone(),
            settings,
            out_dir: self.out.clone(),
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; receives records.jsonl and labels.csv.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    n_items: usize,
    #[arg(long, default_value_t = 4)]
    n_models: usize,
    /// Defaults to the number of models.
    #[arg(long)]
    n_regions: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    noise_level: f64,
    #[arg(long, default_value_t = 0.5)]
    miscalibration: f64,
    #[arg(long, default_value_t = 10)]
    k_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Zipf exponent for region frequencies (uniform when omitted).
    #[arg(long)]
    zipf: Option<f64>,
    #[arg(long)]
    emit_probability: bool,
    #[arg(long)]
    emit_likelihoods: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let report = harness::run(&args.config())?;
            println!(
                "{} items  {}",
                report.rows.len(),
                harness::summary_line(report.metrics.as_ref())
            );
        }
        Command::Sweep {
            run,
            m_min_values,
            eps_tol_values,
        } => {
            let grid = harness::sweep(&run.config(), &m_min_values, &eps_tol_values)?;
            print!("{}", String::from_utf8_lossy(&grid.grid_csv()?));
        }
        Command::CompareSignals(args) => {
            let cmp = harness::compare_signals(&args.config())?;
            print!("{}", String::from_utf8_lossy(&cmp.signals_csv()?));
        }
        Command::Synth(args) => {
            let cfg = SynthConfig {
                n_items: args.n_items,
                n_models: args.n_models,
                n_regions: args.n_regions.unwrap_or(args.n_models),
                noise_level: args.noise_level,
                miscalibration: args.miscalibration,
                k_samples: args.k_samples,
                seed: args.seed,
                region_weights: match args.zipf {
                    Some(exponent) => RegionWeights::Zipf { exponent },
                    None => RegionWeights::Uniform,
                },
                emit_probability: args.emit_probability,
                emit_likelihoods: args.emit_likelihoods,
                ..SynthConfig::default()
            };
            let data = synth::generate(&cfg)?;
            std::fs::create_dir_all(&args.out)?;
            harness::write_records(&args.out.join("records.jsonl"), &data.records)?;
            harness::write_labels(&args.out.join("labels.csv"), &data.labels)?;
            muse::harness::to_json_bytes(&cfg).and_then(|b| Ok(std::fs::write(args.out.join("synth_config.json"), b)?))?;
            println!("{} records, {} items -> {}", data.records.len(), data.labels.len(), args.out.display());
        }
        Command::Validate { records, labels } => {
            print_json(&harness::validate_files(&records, labels.as_deref())?)?;
        }
    }
    Ok(())
}
