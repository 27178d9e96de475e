use clap::Parser;
use mpagent_service::cli::{init_logging, run_cli, Cli};

fn main() -> anyhow::Result<()> {
    init_logging();
    run_cli(Cli::parse())
}
