//! `finsub`: curvature, point invariants, pencils of quadrics and the
//! positive-flag-curvature saddle example from the command line.
//!
//! Reports are JSON on stdout (or `--out`), sweeps are CSV. Exit status is 0
//! on success or a consistent audit, 1 on a failed check or a violation,
//! and 2 on a usage or input-file error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<finsub::Error> for CliError {
    fn from(e: finsub::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Whether the command's check passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every random choice; overrides the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Direction count, sample count or angular grid size.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Tolerance, where the command has a configurable one.
    #[arg(long, value_parser = positive)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleArg {
    Jet,
    Fd,
}

#[derive(Debug, Parser)]
#[command(name = "finsub", version, about = "Local invariants of submanifolds in Minkowski spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check homogeneity and strong convexity of a norm.
    CheckNorm {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Every curvature quantity in one direction.
    Curvature {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        direction: Vec<f64>,
        /// Also evaluate an independent oracle.
        #[arg(long, value_enum)]
        oracle: Option<OracleArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Curvature sweep over a direction grid, as CSV.
    RicciGrid {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Relative nullity, type and null space.
    Invariants {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Pencils of quadratic forms.
    Pencil {
        #[command(subcommand)]
        action: PencilCommand,
    },
    /// Check the saddle example with positive flag curvature.
    VerifyExample {
        /// Parameter file `{"A", "B", "eps1", "eps2", "eps3", "C"}`.
        #[arg(long, required_unless_present = "auto", conflicts_with = "auto")]
        params: Option<PathBuf>,
        /// Search for parameters first.
        #[arg(long)]
        auto: bool,
        #[arg(long, default_value_t = 729)]
        budget: usize,
        /// Also write `angle,ric_closed,ric_pipeline` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Search the logarithmic grid for example parameters.
    FindParams {
        #[arg(long, default_value_t = 729)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Audit a local curvature proposition on a germ.
    Audit {
        #[command(subcommand)]
        action: AuditCommand,
    },
}

#[derive(Debug, Subcommand)]
enum PencilCommand {
    /// Exact and sampled type, spectral data and genericity.
    Type {
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Topology of the common zero set on the sphere.
    Classify {
        /// Canonical data `{"l", "n_j", "s"}` or a pencil at canonical angles.
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Common zero of both forms and both cubics on the unit sphere.
    CommonZero {
        #[arg(long)]
        file: PathBuf,
        /// Number of local descents.
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
enum AuditCommand {
    Hyper {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    Codim2 {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    Ruled {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        direction: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

fn dispatch(cmd: Command) -> Result<Outcome, CliError> {
    use commands as c;
    match cmd {
        Command::CheckNorm { config, common } => c::check_norm(&config, &common),
        Command::Curvature { config, direction, oracle, common } => {
            c::curvature(&config, &direction, oracle, &common)
        }
        Command::RicciGrid { config, common } => c::ricci_grid(&config, &common),
        Command::Invariants { config, common } => c::invariants(&config, &common),
        Command::Pencil { action } => match action {
            PencilCommand::Type { file, common } => c::pencil_type(&file, &common),
            PencilCommand::Classify { file, common } => c::pencil_classify(&file, &common),
            PencilCommand::CommonZero { file, budget, common } => c::common_zero(&file, budget, &common),
        },
        Command::VerifyExample { params, auto, budget, csv, common } => {
            c::verify_example(params.as_deref(), auto, budget, csv.as_deref(), &common)
        }
        Command::FindParams { budget, common } => c::find_params(budget, &common),
        Command::Audit { action } => match action {
            AuditCommand::Hyper { config, common } => c::audit(&config, c::AuditKind::Hyper, &common),
            AuditCommand::Codim2 { config, common } => c::audit(&config, c::AuditKind::Codim2, &common),
            AuditCommand::Ruled { config, direction, common } => {
                c::audit(&config, c::AuditKind::Ruled(direction), &common)
            }
        },
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .and_then(|j| j.io_error_kind())
                .is_some_and(|k| k == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
