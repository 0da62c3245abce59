use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use quart_qkd::cli::{emit, execute, CliError, ConfigBuilder, OutputFormat, RunSpec, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    /// Simulate a session and report error rates and eavesdropper statistics.
    Run,
    /// Exact strategy tables for qubits and qu-quarts.
    Analyze,
    /// Routing matrix of the photonic energy-basis analyzer.
    Photon,
    /// Compare the photonic model with the abstract protocol.
    Equivalence,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Csv,
    Doc,
}

#[derive(Parser, Debug)]
#[command(
    name = "quart-qkd",
    version,
    about = "Four-dimensional BB84-style key distribution simulator"
)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// `run` only: write the round transcript here (`.json` for the document form).
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
}

fn build(args: Args) -> Result<RunSpec, CliError> {
    let mut b = ConfigBuilder::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        b.parse_text(&text, &path.display().to_string())?;
    }
    for (i, kv) in args.set.iter().enumerate() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        b.set(k, v)
            .map_err(|m| CliError::Usage(format!("--set #{}: {m}", i + 1)))?;
    }
    if let Some(seed) = args.seed {
        b.seed(seed);
    }
    let subcommand = match args.command {
        Cmd::Run => Subcommand::Run,
        Cmd::Analyze => Subcommand::Analyze,
        Cmd::Photon => Subcommand::Photon,
        Cmd::Equivalence => Subcommand::Equivalence,
    };
    let format = match args.format {
        Format::Text => OutputFormat::Text,
        Format::Csv => OutputFormat::Csv,
        Format::Doc => OutputFormat::Doc,
    };
    Ok(RunSpec {
        subcommand,
        settings: b.finish()?,
        format,
        out: args.out,
        transcript: args.transcript,
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = build(args).and_then(|spec| {
        let report = execute(&spec)?;
        if let Some(text) = emit(&spec, &report)? {
            print!("{text}");
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quart-qkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
