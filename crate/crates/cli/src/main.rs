mod analysis;
mod evolve;
mod sample;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdart_core::qd::RunConfig;

#[derive(Parser)]
#[command(name = "qdart", version, about = "Quality-diversity workbench for agent-drawn line images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render random genotypes into a corpus directory with a manifest.
    Sample(sample::SampleArgs),
    /// Render one genotype to SVG and PNG.
    Render(sample::RenderArgs),
    /// Compute image metrics for every PNG in a corpus.
    Metrics(analysis::MetricsArgs),
    /// Correlate image metrics with direct scores and/or pairwise outcomes.
    Correlate(analysis::CorrelateArgs),
    /// Fit the 2-D feature map used to place drawings on the grid.
    FitMap(analysis::FitMapArgs),
    /// Run MAP-Elites.
    Evolve(evolve::EvolveArgs),
    /// Serve the ranking and grid API.
    Serve(ServeArgs),
    /// Export montages, grid and stats from a run directory.
    Export(evolve::ExportArgs),
}

/// Optional run config supplying canvas and gene ranges.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArg {
    /// Run config JSON (canvas, gene_ranges, fitness, ...).
    #[arg(long, env = "QDA_CONFIG")]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    pub fn load(&self) -> anyhow::Result<RunConfig> {
        Ok(match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        })
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "QDA_HOST", default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "QDA_PORT", default_value_t = 8080)]
    port: u16,
    /// Directory of PNG (and optional SVG) images to rank.
    #[arg(long, env = "QDA_CORPUS")]
    corpus: PathBuf,
    /// Directory whose subdirectories are evolution runs.
    #[arg(long, env = "QDA_RUNS")]
    runs: Option<PathBuf>,
    /// Static UI directory served at `/`.
    #[arg(long, env = "QDA_UI")]
    ui: Option<PathBuf>,
    #[arg(long, env = "QDA_RD_THRESHOLD", default_value_t = qdart_core::ranking::DEFAULT_RD_THRESHOLD)]
    rd_threshold: f64,
    /// Seed for pair selection.
    #[arg(long, env = "QDA_SEED", default_value_t = 0)]
    seed: u64,
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let cfg = qdart_service::ServiceConfig {
        host: args.host,
        port: args.port,
        corpus: args.corpus,
        runs: args.runs,
        ui: args.ui,
        rd_threshold: args.rd_threshold,
        seed: args.seed,
    };
    tokio::runtime::Runtime::new()?.block_on(qdart_service::serve(cfg))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("QDA_LOG").unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .without_time()
        .with_target(false)
        .init();
    let result = match Cli::parse().command {
        Command::Sample(a) => sample::sample(a),
        Command::Render(a) => sample::render(a),
        Command::Metrics(a) => analysis::metrics(a),
        Command::Correlate(a) => analysis::correlate(a),
        Command::FitMap(a) => analysis::fit_map(a),
        Command::Evolve(a) => evolve::evolve(a),
        Command::Serve(a) => serve(a),
        Command::Export(a) => evolve::export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
