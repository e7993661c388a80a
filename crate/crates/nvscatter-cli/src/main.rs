//! nvscatter: batch front end for the NV / mNV inverse scattering solver.

mod commands;
mod config;
mod export;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Rejected before any compute.
    Config(String),
    /// Input data failed validation at load.
    Input(nvscatter::Error),
    Run(nvscatter::Error),
}

impl From<nvscatter::Error> for CliError {
    fn from(e: nvscatter::Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use nvscatter::Error::*;
        match self {
            CliError::Config(_) | CliError::Input(_) => 3,
            CliError::Run(e) => match e {
                PhaseUnderresolved { .. } => 4,
                NonConvergence { .. } | SingularSmallK { .. } | Unstable { .. } | StepTooLarge { .. } => 2,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "config: {s}"),
            CliError::Input(e) => write!(f, "input: {e}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "nvscatter", version, about = "Inverse scattering for the Novikov-Veselov equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value run configuration with [section] headers
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run NV pipelines on data outside the Miura domain
    #[arg(long, global = true)]
    force: bool,
    /// With `evolve` on NV data, also run the Schrodinger-side pipeline and compare
    #[arg(long, global = true)]
    compare_schrodinger: bool,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
enum Command {
    /// Potential u -> scattering data r
    Forward,
    /// Scattering data (r or t) -> potential
    Inverse,
    /// Forward then inverse, reporting the relative error
    Roundtrip,
    /// Time evolution through the scattering side
    Evolve,
    /// Run every identity check and report pass/fail
    Verify,
    /// Conductivity -> Miura datum (u, q) with domain diagnostics
    Miura,
    /// IST solution against the direct pseudospectral stepper
    OracleCompare,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let out_override = std::env::var_os("NVSCATTER_OUT").map(PathBuf::from);
    let cfg = config::load(path, out_override)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if cli.compare_schrodinger && (cli.command != Command::Evolve || cfg.plan.flavor != nvscatter::evolution::Flavor::NvSchrodingerCubic) {
        return Err(CliError::Config("--compare-schrodinger needs `evolve` with evolution.flavor = nv".into()));
    }

    let outputs = if cli.command == Command::Inverse {
        let data = commands::load_scattering(&cfg)?;
        commands::inverse(&cfg, &data)?
    } else {
        let (u, datum) = commands::load_potential(&cfg)?;
        match cli.command {
            Command::Forward => commands::forward(&cfg, &u)?,
            Command::Roundtrip => commands::roundtrip(&cfg, &u)?,
            Command::Evolve => commands::evolve(&cfg, &u, cli.force, cli.compare_schrodinger)?,
            Command::Verify => commands::verify(&cfg, &u)?,
            Command::Miura => commands::miura(&u, datum.as_ref())?,
            Command::OracleCompare => commands::oracle_compare(&cfg, &u)?,
            Command::Inverse => unreachable!(),
        }
    };
    outputs.write(&cfg.out_dir, "report.txt")
}

fn main() -> ExitCode {
    // usage errors share exit code 3 with bad configs; 2 means solver failure
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("nvscatter: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
