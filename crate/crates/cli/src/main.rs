use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

/// Deficiency profiles and hull certificates for finite-dimensional spaces.
#[derive(Debug, Parser)]
#[command(name = "dklab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lipschitz seminorm of a function on a metric file, optionally extended.
    Lip(Common),
    /// Search a ring family on a metric file.
    Rings(Common),
    /// Build and verify a certificate.
    Cert {
        #[arg(value_enum)]
        kind: CertKind,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the deficiency profile k -> D_k.
    Dk(Common),
    /// Write a generated metric space.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertKind {
    Ivakhno,
    Centralizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Chain,
    Ray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetLevel {
    Light,
    Default,
    Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Construct {
    Auto,
    None,
    Centralizer,
    Rings,
}

/// Every flag of every command; each command reads the ones it needs.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Normed space, e.g. `lp(2,8)`, `sup(3, lp(inf,4))`, `fmod(8, lp(2,1))`.
    #[arg(long)]
    pub space: Option<String>,
    /// Metric file: first line N, then N rows of N distances.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    /// Tuple arity n.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Generator norm bound; defaults to 1. `--alpha plus` means 1 + eps.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Hull size k or a range `a..b`, `a-b`, `a,b,c`.
    #[arg(long)]
    pub k: Option<String>,
    /// Number of sets for the centralizer certificate.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum)]
    pub budget: Option<BudgetLevel>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid resolution h for certified lower bounds.
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Spacing of the z-grid for certified upper bounds on D_k.
    #[arg(long)]
    pub sup_resolution: Option<f64>,
    /// Constructive upper bound route for `dk`.
    #[arg(long, value_enum)]
    pub construct: Option<Construct>,
    /// Also run the certified floor check in `dk`.
    #[arg(long)]
    pub floor: bool,
    /// Ring family JSON written by `rings`.
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Number of random tuples verified by `cert` and by constructive bounds.
    #[arg(long)]
    pub panel: Option<usize>,
    /// Function values, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    /// File of function values separated by commas or whitespace; `#` starts a comment.
    #[arg(long, conflicts_with = "values")]
    pub values_file: Option<PathBuf>,
    /// Restrict the function to these point indices, comma separated.
    #[arg(long)]
    pub mask: Option<String>,
    /// Extend the function with this Lipschitz constant.
    #[arg(long)]
    pub extend: Option<f64>,
    /// Generator ratio q (chain) or growth a (ray).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Number of points for generators.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Echo of the invocation carried by every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(flatten)]
    pub args: Common,
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_VERIFY_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NOT_FOUND: u8 = 3;
pub const EXIT_REFUSED: u8 = 4;

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<dklab_core::Error> for Failure {
    fn from(e: dklab_core::Error) -> Self {
        use dklab_core::Error;
        let code = match e {
            Error::GridRefused { .. } => EXIT_REFUSED,
            Error::Inconsistency(_) => EXIT_VERIFY_FAIL,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Lip(c) => commands::lip(RunConfig { command: "lip".into(), args: c }),
        Command::Rings(c) => commands::rings(RunConfig { command: "rings".into(), args: c }),
        Command::Cert { kind, common } => {
            let name = match kind {
                CertKind::Ivakhno => "cert ivakhno",
                CertKind::Centralizer => "cert centralizer",
            };
            commands::cert(kind, RunConfig { command: name.into(), args: common })
        }
        Command::Dk(c) => commands::dk(RunConfig { command: "dk".into(), args: c }),
        Command::Gen { kind, common } => {
            let name = match kind {
                GenKind::Chain => "gen chain",
                GenKind::Ray => "gen ray",
            };
            commands::generate(kind, RunConfig { command: name.into(), args: common })
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("dklab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
