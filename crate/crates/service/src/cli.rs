//! Command-line interface shared by the `mpagent` and `bench` binaries.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mpagent_core::bench::{load_queries, ScorReport};
use mpagent_core::SystemClock;

use crate::config::Config;
use crate::runtime::Runtime;
use crate::server::{router, AppState};
use crate::store::SessionStore;

const DEFAULT_CONFIG: &str = "mpagent.toml";

#[derive(Debug, Parser)]
#[command(name = "mpagent", version, about = "Materials Project agents: chat service and benchmarks")]
pub struct Cli {
    /// Configuration file (default: ./mpagent.toml if present)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP chat service
    Serve {
        /// Address to listen on, overriding the config
        #[arg(long)]
        bind: Option<String>,
    },
    /// Self-consistency benchmarks
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Parser)]
#[command(name = "bench", version, about = "Run and report self-consistency benchmarks")]
pub struct BenchCli {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: BenchCommand,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Ask every query N times and write a metrics report
    Run(RunArgs),
    /// Print a saved report
    Report {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON-lines query set
    #[arg(long)]
    pub queries: PathBuf,
    /// Backend name from the config's [backends] table
    #[arg(long)]
    pub backend: Option<String>,
    /// Trials per query, overriding each query's n_trials
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None if Path::new(DEFAULT_CONFIG).is_file() => Ok(Config::load(Path::new(DEFAULT_CONFIG))?),
        None => Ok(Config::from_toml("", Path::new(DEFAULT_CONFIG))?),
    }
}

pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

pub fn run_cli(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve { bind } => serve(cli.config.as_deref(), bind),
        Command::Bench(cmd) => bench(cli.config.as_deref(), cmd),
    }
}

pub fn bench(config: Option<&Path>, cmd: BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Run(args) => {
            if args.trials == Some(0) {
                bail!("--trials must be positive");
            }
            let cfg = load_config(config)?;
            let runtime = Runtime::from_config(&cfg, args.backend.as_deref())?;
            let queries = load_queries(&args.queries)?;
            tracing::info!(queries = queries.len(), backend = %runtime.backend_name, "starting benchmark");
            let report = crate::bench::run(&runtime, &queries, args.trials, args.parallelism, &SystemClock)?;
            std::fs::write(&args.out, report.to_json()).with_context(|| format!("writing {}", args.out.display()))?;
            print!("{}", report.render_table());
            Ok(())
        }
        BenchCommand::Report { path, format } => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let report = ScorReport::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            match format {
                ReportFormat::Table => print!("{}", report.render_table()),
                ReportFormat::Json => println!("{}", report.to_json()),
            }
            Ok(())
        }
    }
}

fn serve(config: Option<&Path>, bind: Option<String>) -> Result<()> {
    let cfg = load_config(config)?;
    let runtime = Runtime::from_config(&cfg, None)?;
    let store = SessionStore::open(&cfg.server.session_root)
        .with_context(|| format!("opening session root {}", cfg.server.session_root.display()))?;
    let addr: SocketAddr = bind.as_deref().unwrap_or(&cfg.server.bind).parse().context("invalid bind address")?;
    let state = Arc::new(AppState { store, runtime, clock: Arc::new(SystemClock) });
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        tracing::info!(%addr, backend = %state.runtime.backend_name, "listening");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
