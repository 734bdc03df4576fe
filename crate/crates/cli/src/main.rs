use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moldebate_cli::commands::{
    cmd_canon, cmd_eval, cmd_examine, cmd_mock_run, cmd_run, EvalOptions, RunOptions,
};
use moldebate_core::eval::DatasetFormat;
use moldebate_core::examiner::{is_descriptor, Mask};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "moldebate", version, about = "Generate, debate and refine molecules from text")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Process at most this many records.
    #[arg(long, global = true)]
    limit: Option<usize>,
    /// Records processed concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Overrides the configured selection seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (results for `run`, report for `eval`, trace for `mock-run`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a dataset.
    Run {
        dataset: PathBuf,
        /// chebi20-tsv or open-gen-jsonl; guessed from the extension otherwise.
        #[arg(long)]
        format: Option<DatasetFormat>,
        /// Trace file; defaults to the results path with a `.trace.jsonl` extension.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score predictions (`{"id", "smiles"}` per line) against a dataset.
    Eval {
        predictions: PathBuf,
        dataset: PathBuf,
        #[arg(long)]
        format: Option<DatasetFormat>,
        /// Print a text table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Print the examiner report for one SMILES.
    Examine {
        smiles: String,
        /// Comma-separated descriptor keys to hide.
        #[arg(long, value_delimiter = ',')]
        mask: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print the canonical SMILES.
    Canon { smiles: String },
    /// Run one instruction against scripted agents.
    MockRun { script: PathBuf },
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { dataset, format, trace } => {
            let config = cli
                .config
                .ok_or_else(|| anyhow::anyhow!("run needs --config"))?;
            cmd_run(
                &RunOptions {
                    config,
                    dataset,
                    format,
                    limit: cli.limit,
                    workers: cli.workers,
                    seed: cli.seed,
                    out: cli.out,
                    trace,
                },
                stdout,
            )
        }
        Command::Eval { predictions, dataset, format, table } => {
            cmd_eval(
                &EvalOptions {
                    predictions,
                    dataset,
                    format,
                    limit: cli.limit,
                    workers: cli.workers,
                    table,
                    out: cli.out,
                },
                stdout,
            )?;
            Ok(true)
        }
        Command::Examine { smiles, mask, json } => {
            if let Some(bad) = mask.iter().find(|k| !is_descriptor(k)) {
                anyhow::bail!("unknown descriptor {bad:?} in --mask");
            }
            cmd_examine(&smiles, &mask.into_iter().collect::<Mask>(), json, stdout)?;
            Ok(true)
        }
        Command::Canon { smiles } => {
            cmd_canon(&smiles, stdout)?;
            Ok(true)
        }
        Command::MockRun { script } => {
            cmd_mock_run(&script, cli.seed, cli.out.as_deref(), stdout)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match dispatch(cli, &mut stdout) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some records aborted");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
