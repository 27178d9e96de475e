use clap::Parser;
use mpagent_service::cli::{bench, init_logging, BenchCli};

fn main() -> anyhow::Result<()> {
    init_logging();
    let cli = BenchCli::parse();
    bench(cli.config.as_deref(), cli.command)
}
