use std::process::ExitCode;

use beziergan_cli::args::{Cli, Command};
use beziergan_cli::{commands, service, UsageError};
use clap::Parser;

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Dataset(cmd) => commands::dataset(cmd),
        Command::Train(a) => commands::train(a),
        Command::Generate(a) => commands::generate(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Serve(a) => {
            log::info!("serve config: {}", serde_json::to_string(a)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(&a.checkpoint, &a.host, a.port))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
