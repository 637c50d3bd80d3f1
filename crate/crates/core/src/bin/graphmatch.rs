use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graphmatch::cli;
use graphmatch::config::RunConfig;
use graphmatch::Error;

#[derive(Parser)]
#[command(name = "graphmatch", about = "Concept-sentence matching with relational graph networks")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set hidden=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[arg(long, global = true)]
    data_dir: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    lr: Option<String>,
    #[arg(long, global = true)]
    bases: Option<String>,
    #[arg(long, global = true)]
    split_mode: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    repeats: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the labelled, split pairs file from graph, parses and labels.
    Build,
    /// Train a matcher and write checkpoint, log and report.
    Train,
    /// Evaluate the checkpoint on one split and dump predictions.
    Eval,
    /// Generate the synthetic negation corpus.
    Synth,
    /// Print dataset statistics for the pairs file.
    Stats,
}

fn resolve(args: &Args) -> graphmatch::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    let flags = [
        ("data_dir", &args.data_dir),
        ("out_dir", &args.out_dir),
        ("model", &args.model),
        ("epochs", &args.epochs),
        ("lr", &args.lr),
        ("bases", &args.bases),
        ("split_mode", &args.split_mode),
        ("seed", &args.seed),
        ("repeats", &args.repeats),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in &args.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(cfg)
}

fn run(args: &Args) -> graphmatch::Result<String> {
    let cfg = resolve(args)?;
    if args.print_config {
        return Ok(cfg.to_text());
    }
    match args.command {
        Command::Build => cli::cmd_build(&cfg),
        Command::Train => cli::cmd_train(&cfg),
        Command::Eval => cli::cmd_eval(&cfg),
        Command::Synth => cli::cmd_synth(&cfg),
        Command::Stats => cli::cmd_stats(&cfg),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&args) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
