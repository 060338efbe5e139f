//! Command-line front end. Every failure prints one `error:` line to stderr
//! and exits with status 2.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::asymptotics::DEFAULT_GRID_STEP;
use crate::distributions::DistributionSpec;
use crate::empirical::BandwidthRule;
use crate::interface::api::{self, EstimateMethod, EstimateRequest};
use crate::interface::input::read_column_file;
use crate::interface::server::{self, ServerLimits};
use crate::simulation::{self, MethodSpec, SimConfig, WidthSummary};

#[derive(Debug, Parser)]
#[command(name = "qratio", version, about = "Ratios of quantiles, IQRs and variances for two samples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interval estimate (or Shoemaker test) from two single-column CSV files.
    Estimate(EstimateArgs),
    /// Monte Carlo coverage and width of the interval methods.
    Simulate(SimulateArgs),
    /// The p minimising the asymptotic variance of the squared IQR ratio.
    OptimalP(OptimalPArgs),
    /// Run the HTTP JSON service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// rq, riqr, rvar, pb, f or shoemaker.
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fixed kernel bandwidth in (0, 1) instead of the plug-in rule.
    #[arg(long, conflicts_with = "bandwidth_scale")]
    pub bandwidth: Option<f64>,
    /// Multiplier on the normal-reference plug-in bandwidth.
    #[arg(long)]
    pub bandwidth_scale: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with simulation settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dist1: Option<DistributionSpec>,
    #[arg(long)]
    pub dist2: Option<DistributionSpec>,
    /// Comma-separated size pairs, e.g. `50x50,100x100`.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Comma-separated methods, e.g. `pb,rq:0.5,riqr:0.2`.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// mean, median or both.
    #[arg(long)]
    pub width_summary: Option<String>,
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
    /// Results CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON results instead of the text table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct OptimalPArgs {
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub step: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    #[arg(long, default_value_t = 100_000)]
    pub max_trials: u32,
    #[arg(long, default_value_t = 256)]
    pub max_cells: usize,
    #[arg(long, default_value_t = 2)]
    pub max_jobs: usize,
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_sizes(text: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|pair| {
            let (a, b) = pair
                .trim()
                .split_once(['x', 'X', ':'])
                .with_context(|| format!("size pair '{pair}' must look like 50x50"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

fn estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let method: EstimateMethod = args.method.parse()?;
    let x = read_column_file(&args.x)?;
    let y = read_column_file(&args.y)?;
    let mut request = EstimateRequest::from_samples(x, y, method, args.p, args.alpha);
    request.bandwidth = match (args.bandwidth, args.bandwidth_scale) {
        (Some(b), _) => BandwidthRule::Fixed { b },
        (None, Some(scale)) => BandwidthRule::PlugIn { scale },
        (None, None) => BandwidthRule::default(),
    };
    let out = request.run()?;
    if args.json {
        println!("{}", serde_json::to_string(&out)?);
    } else {
        println!("{out}");
    }
    Ok(())
}

fn build_config(args: &SimulateArgs) -> anyhow::Result<SimConfig> {
    let mut table = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let table: toml::Table = text.parse().map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            simulation::check_config_keys(table.keys().map(String::as_str))?;
            table
        }
        None => toml::Table::new(),
    };
    let mut set = |key: &str, value: toml::Value| {
        table.insert(key.to_string(), value);
    };
    if let Some(d) = &args.dist1 {
        set("dist1", d.to_string().into());
    }
    if let Some(d) = &args.dist2 {
        set("dist2", d.to_string().into());
    }
    if let Some(s) = &args.sizes {
        let pairs = parse_sizes(s)?
            .into_iter()
            .map(|(a, b)| toml::Value::Array(vec![(a as i64).into(), (b as i64).into()]))
            .collect();
        set("sample_sizes", toml::Value::Array(pairs));
    }
    if let Some(m) = &args.methods {
        let specs = m.split(',').map(|s| s.trim().parse::<MethodSpec>()).collect::<Result<Vec<_>, _>>()?;
        set("methods", toml::Value::Array(specs.iter().map(|s| s.to_string().into()).collect()));
    }
    if let Some(a) = args.alpha {
        set("alpha", a.into());
    }
    if let Some(t) = args.trials {
        set("trials", (t as i64).into());
    }
    if let Some(s) = args.seed {
        let seed = i64::try_from(s).context("seed must fit in a signed 64-bit integer")?;
        set("master_seed", seed.into());
    }
    if let Some(w) = &args.width_summary {
        set("width_summary", w.clone().into());
    }
    for key in ["dist1", "dist2", "sample_sizes", "methods"] {
        if !table.contains_key(key) {
            bail!("missing '{key}': give it in --config or as a flag");
        }
    }
    Ok(SimConfig::from_toml_str(&toml::to_string(&table)?)?)
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let config = build_config(&args)?;
    let results = simulation::run_table(&config, args.workers)?;
    if let Some(path) = &args.out {
        let file = std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        simulation::write_csv(&results, file)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&results)?);
    } else {
        print!("{}", simulation::render_table(&results));
        if config.width_summary == WidthSummary::Median {
            println!("* median width");
        }
    }
    Ok(())
}

fn optimal_p(args: OptimalPArgs) -> anyhow::Result<()> {
    let out = api::optimal_p(&args.dist, args.step)?;
    if args.json {
        println!("{}", serde_json::to_string(&out)?);
    } else {
        println!("{out}");
    }
    Ok(())
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let limits = ServerLimits {
        max_trials: args.max_trials,
        max_cells: args.max_cells,
        max_concurrent_jobs: args.max_jobs,
        workers: args.workers.max(1),
        ..ServerLimits::default()
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(server::serve(&args.addr, limits))?;
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::OptimalP(a) => optimal_p(a),
        Command::Serve(a) => serve(a),
    }
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
