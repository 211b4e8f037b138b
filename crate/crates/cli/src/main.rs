use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use repulse_core::harness::{self, ConfigError, Entries, Experiment, HarnessError, Kind};

/// Brownian motion with oblique electrostatic repulsion in the quadrant.
#[derive(Debug, Parser)]
#[command(name = "repulse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corner polarity, side hitting and existence regime of a parameter set.
    Classify(Common),
    /// One recorded path, or Monte Carlo endpoint statistics for n_paths > 1.
    Simulate(Common),
    /// Long ergodic run checked against the product gamma law.
    Stationary(Common),
    /// Noise-free system started at the corner.
    Deterministic(Common),
    /// Numerical boundary-hit frequencies.
    Hitting(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Data destination; `-` writes to standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Override any config key, e.g. `--set alpha=0.7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Command {
    fn split(&self) -> (Kind, &Common) {
        match self {
            Command::Classify(c) => (Kind::Classify, c),
            Command::Simulate(c) => (Kind::Simulate, c),
            Command::Stationary(c) => (Kind::Stationary, c),
            Command::Deterministic(c) => (Kind::Deterministic, c),
            Command::Hitting(c) => (Kind::Hitting, c),
        }
    }
}

fn load(kind: Kind, args: &Common) -> Result<Experiment, HarnessError> {
    let mut entries = match &args.config {
        Some(path) => harness::parse_entries(&fs::read_to_string(path)?)?,
        None => Entries::default(),
    };
    match entries.get("kind") {
        None => entries.set("kind", kind.name())?,
        Some(k) if k == kind.name() => {}
        Some(k) => {
            return Err(ConfigError::InvalidValue {
                key: "kind".into(),
                message: format!("config declares `{k}` but the `{kind}` command was run"),
            }
            .into())
        }
    }
    if let Some(seed) = args.seed {
        entries.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &args.out {
        entries.set("out", out)?;
    }
    for o in &args.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::InvalidValue {
            key: o.clone(),
            message: "expected KEY=VALUE".into(),
        })?;
        entries.set(k.trim(), v)?;
    }
    Ok(Experiment::from_entries(&entries)?)
}

fn run(kind: Kind, args: &Common) -> Result<(), HarnessError> {
    let exp = load(kind, args)?;
    let output = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError::InvalidValue {
                key: "threads".into(),
                message: e.to_string(),
            })?
            .install(|| harness::execute(&exp))?,
        None => harness::execute(&exp)?,
    };
    let mut stdout = io::stdout().lock();
    stdout.write_all(output.stdout.as_bytes())?;
    if let Some(data) = output.data {
        match exp.output_path.as_deref() {
            Some("-") | None => stdout.write_all(data.as_bytes())?,
            Some(path) => fs::write(path, data)?,
        }
    }
    stdout.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
