use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dimer::config::{ModeKind, RawConfig};
use dimer::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "dimer", version, about = "Driven-dissipative entanglement of a qubit dimer")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<String>,

    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Include the Lamb shifts of the dressed levels.
    #[arg(long, global = true)]
    lamb_shift: bool,

    /// Photon cutoff per mode for the oracle.
    #[arg(long, global = true)]
    nmax: Option<usize>,

    #[arg(long, global = true, value_enum)]
    target: Option<TargetArg>,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Set a config key, overriding the file (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Steady state at a fixed drive.
    Ness,
    /// Steady state at the optimal drive frequency of the target.
    Protocol,
    /// Grid of drive frequencies and strengths.
    Sweep,
    /// Drive-strength window where the rate hierarchy holds.
    Window,
    /// Drive the singlet transition of the symmetric mode.
    Dark,
    /// Compare against the full two-mode model.
    Oracle,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TargetArg {
    Singlet,
    Triplet0,
}

impl Command {
    fn kind(self) -> ModeKind {
        match self {
            Command::Ness => ModeKind::Ness,
            Command::Protocol => ModeKind::Protocol,
            Command::Sweep => ModeKind::Sweep,
            Command::Window => ModeKind::Window,
            Command::Dark => ModeKind::Dark,
            Command::Oracle => ModeKind::Oracle,
        }
    }
}

fn build_config(cli: &Cli) -> CliResult<dimer::config::RunConfig> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RawConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        raw.set(k.trim(), v)?;
    }
    if let Some(o) = &cli.out {
        raw.set("out", o)?;
    }
    if let Some(f) = cli.format {
        raw.set("format", if matches!(f, FormatArg::Csv) { "csv" } else { "json" })?;
    }
    if cli.lamb_shift {
        raw.set("lamb_shift", "true")?;
    }
    if let Some(n) = cli.nmax {
        raw.set("n_max", &n.to_string())?;
    }
    if let Some(t) = cli.target {
        raw.set("target", if matches!(t, TargetArg::Singlet) { "singlet" } else { "triplet0" })?;
    }
    if let Some(t) = cli.threads {
        raw.set("threads", &t.to_string())?;
    }
    raw.resolve(Some(cli.command.kind()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match build_config(&cli) {
        Ok(cfg) => dimer::run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
