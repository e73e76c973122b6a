//! Batch CLI over the pipeline stages. All heavy lifting lives in the
//! library; this binary parses arguments, applies flag overrides to the
//! config, and maps errors to exit codes (0 ok, 2 input, 3 precondition,
//! 4 exhaustion/partial).

use clap::{Args, Parser, Subcommand};
use gridhot::config::PipelineConfig;
use gridhot::detect::RadiusSpec;
use gridhot::error::Result;
use gridhot::pipeline;
use gridhot::sim::Mechanism;
use gridhot::synth::SyntheticCitySpec;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "gridhot",
    version,
    about = "Local hotspot detection and arrangement analysis on metric grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the config master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the detection radius (cells).
    #[arg(long, global = true)]
    radius: Option<usize>,

    /// Override the interaction cutoff d_cut (meters).
    #[arg(long = "d-cut", global = true)]
    d_cut: Option<f64>,

    /// Override the knn kernel size K.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Override the distance-decay exponent alpha.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Override the run count (null-model runs or simulations).
    #[arg(long = "n-runs", global = true)]
    n_runs: Option<usize>,

    /// Restrict simulation to one mechanism (knn, global, random).
    #[arg(long, global = true)]
    mechanism: Option<String>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline config JSON.
    #[arg(long)]
    config: PathBuf,

    /// Output directory shared by the pipeline stages.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic city (stops, roads, ground truth).
    Synth {
        /// Synthetic-city spec JSON.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect local hotspots from a stops CSV.
    Detect {
        #[command(flatten)]
        common: ConfigArgs,
        /// Stops CSV with `lon,lat` columns.
        #[arg(long)]
        stops: PathBuf,
        /// Roads as GeoJSON lines or a `row,col` CSV.
        #[arg(long)]
        roads: Option<PathBuf>,
    },
    /// Classify detected hotspots into popularity levels.
    Classify {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Accompanying/inhibiting metrics with null-model bands.
    Metrics {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Cascade simulation and mechanism comparison.
    Simulate {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Emit SVG figures from prior stage outputs.
    Report {
        #[command(flatten)]
        common: ConfigArgs,
    },
}

fn apply_overrides(config: &mut PipelineConfig, cli: &Cli) -> Result<()> {
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(radius) = cli.radius {
        config.detection.radius_cells = RadiusSpec::Fixed(radius);
    }
    if let Some(d_cut) = cli.d_cut {
        config.simulation.d_cut = d_cut;
    }
    if let Some(k) = cli.k {
        config.simulation.k_nearest = k;
    }
    if let Some(alpha) = cli.alpha {
        config.simulation.alpha = alpha;
    }
    if let Some(n) = cli.n_runs {
        config.metrics.n_runs = n;
        config.simulation.n_sims = n;
    }
    if let Some(name) = &cli.mechanism {
        config.simulation.mechanisms = vec![Mechanism::from_str(name)?];
    }
    Ok(())
}

fn load_config(cli: &Cli, path: &PathBuf) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(path)?;
    apply_overrides(&mut config, cli)?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth { spec, out } => {
            let mut spec: SyntheticCitySpec = gridhot::io::read_json(spec)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let city = pipeline::run_synth(&spec, out)?;
            let centers: usize = city.levels.iter().map(|l| l.len()).sum();
            println!(
                "synth: {} stops, {} road cells, {centers} planted centers over {} levels",
                city.stops.len(),
                city.road.len(),
                city.levels.len()
            );
        }
        Command::Detect {
            common,
            stops,
            roads,
        } => {
            let config = load_config(cli, &common.config)?;
            let t0 = std::time::Instant::now();
            let summary = pipeline::run_detect(&config, stops, roads.as_deref(), &common.out)?;
            eprintln!("detect: {:.2?} elapsed", t0.elapsed());
            println!(
                "detect: {} hotspots at radius {} cells ({} stops out of bounds)",
                summary.n_hotspots, summary.radius_cells, summary.out_of_bounds
            );
        }
        Command::Classify { common } => {
            let config = load_config(cli, &common.config)?;
            let summary = pipeline::run_classify(&config, &common.out)?;
            println!(
                "classify: {} hotspots into {} levels",
                summary.n_hotspots, summary.n_levels
            );
        }
        Command::Metrics { common } => {
            let config = load_config(cli, &common.config)?;
            let t0 = std::time::Instant::now();
            let report = pipeline::run_metrics(&config, &common.out)?;
            eprintln!("metrics: {:.2?} elapsed", t0.elapsed());
            println!(
                "metrics: {} level pairs, {} null runs each",
                report.pairs.len(),
                report.config.n_runs
            );
        }
        Command::Simulate { common } => {
            let config = load_config(cli, &common.config)?;
            let t0 = std::time::Instant::now();
            let experiment = pipeline::run_simulate(&config, &common.out)?;
            eprintln!("simulate: {:.2?} elapsed", t0.elapsed());
            let partial: usize = experiment.partial_runs.iter().map(|p| p.1).sum();
            println!(
                "simulate: {} mechanisms x {} runs ({partial} partial)",
                experiment.partial_runs.len(),
                experiment.n_sims
            );
        }
        Command::Report { common } => {
            let config = load_config(cli, &common.config)?;
            let figures = pipeline::run_report(&config, &common.out)?;
            println!("report: {} figures written", figures.len());
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
