//! Command-line driver for the lexforge pipeline.

pub mod cli;
pub mod config;
pub mod pipeline;

use anyhow::Result;

use cli::{apply_command, Cli, Command};
use pipeline::Pipeline;

pub fn run(cli: Cli) -> Result<()> {
    let mut config = cli.global.resolve()?;
    apply_command(&mut config, &cli.command)?;
    let mut p = Pipeline::new(config, cli.global.force)?;
    match &cli.command {
        Command::Ingest { .. } => p.ingest(),
        Command::Clean(_) => p.clean(),
        Command::Segment => p.segment(),
        Command::Generate { .. } => p.generate(),
        Command::Assemble => p.assemble(),
        Command::Stats { input } => p.stats(input.as_deref()),
        Command::Split => p.split(),
        Command::Export => p.export(),
        Command::Eval { cases } => p.eval(cases),
        Command::EmitTrainConfig(args) => p.emit_train_config(&args.overrides()),
    }
}
