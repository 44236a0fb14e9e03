use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use riccati_core::Sign;

#[derive(Debug, Parser)]
#[command(name = "riccati", version, about = "Check, solve and verify integrable Riccati equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an integrability condition on a grid.
    Check {
        #[command(subcommand)]
        mode: CheckMode,
    },
    /// Assemble a general solution, verify it and sample it.
    Solve {
        #[command(subcommand)]
        mode: SolveMode,
    },
    /// Run the bundled worked cases.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Evaluate an expression and its derivative on a grid.
    Sample(SampleArgs),
}

#[derive(Debug, Subcommand)]
pub enum CheckMode {
    /// Full equation generated by `f`: particular solution `(−b ± √f)/(2c)`.
    Full(FullArgs),
    /// `b = (F − a)/S − c S` with `S = ∫F + F0`.
    Bbb(TheoremArgs),
    /// `±(√(f/c))' = a + f` for `b ≡ 0`.
    Reduced(ReducedArgs),
}

#[derive(Debug, Subcommand)]
pub enum SolveMode {
    /// `y = (−b ± √f)/(2c) + e^{±∫√f} / (C − ∫ c e^{±∫√f})`.
    Amc(FullArgs),
    /// `y = S + e^{∫P} / (C − ∫ c e^{∫P})` with `S = ∫F + F0`, `b` derived.
    Theorem(TheoremArgs),
    /// `y = ±√(f/c) + N / (C − ∫ c N)`, `N = e^{±2∫c√(f/c)}`, for `b ≡ 0`.
    Reduced(ReducedArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusAction {
    /// List case ids, default parameters and domains.
    List(ListArgs),
    /// Run cases and report residual, oracle and cross-check results.
    Run(CorpusRunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

// Options shared by every subcommand that evaluates expressions.
#[derive(Debug, Args)]
pub struct Common {
    /// Interval `[LO, HI]`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, required = true)]
    pub dom: Vec<f64>,
    /// Base point of every indefinite integral (default: LO).
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Named constant usable in expressions, `NAME=VALUE`; repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment, allow_hyphen_values = true)]
    pub set: Vec<(String, f64)>,
    /// Tolerance (default 1e-8 for checks, 1e-6 for verification).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of sample points.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// Solve-only switches; `check` rejects them.
#[derive(Debug, Args)]
pub struct SolveFlags {
    /// Integration constant: the denominator value at the base point.
    #[arg(long = "C", allow_negative_numbers = true, default_value_t = 0.0)]
    pub constant: f64,
    /// Assemble even when the condition fails; the report then fails.
    #[arg(long)]
    pub force: bool,
    /// Scale the denominator integral by this factor before verifying
    /// (negative control).
    #[arg(long, allow_negative_numbers = true)]
    pub corrupt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FullArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// Linear coefficient (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: String,
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
    #[arg(long, allow_hyphen_values = true, default_value = "+")]
    pub sign: Sign,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solve: SolveFlags,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// Linear coefficient to test (`check bbb` only).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: String,
    /// Generating function `F`.
    #[arg(long = "F", allow_hyphen_values = true)]
    pub gen: String,
    /// Value of `∫F + F0` at the base point.
    #[arg(long = "F0", allow_negative_numbers = true)]
    pub f0: f64,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solve: SolveFlags,
}

#[derive(Debug, Args)]
pub struct ReducedArgs {
    /// Free coefficient (default: the one implied by the condition).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    pub c: String,
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
    #[arg(long, allow_hyphen_values = true, default_value = "+")]
    pub sign: Sign,
    /// Use `y = ±√f − (ln D)'`; requires `c ≡ 1`.
    #[arg(long)]
    pub log_form: bool,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solve: SolveFlags,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    /// Emit JSON instead of a text table.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct CorpusRunArgs {
    /// Case ids.
    pub ids: Vec<String>,
    #[arg(long, conflicts_with = "ids")]
    pub all: bool,
    /// Parameter override, `NAME=VALUE`; applied to every selected case
    /// that declares the parameter.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment, allow_hyphen_values = true)]
    pub set: Vec<(String, f64)>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub dom: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub expr: String,
    #[command(flatten)]
    pub common: Common,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("invalid constant name `{name}`"));
    }
    let value: f64 = value.trim().parse().map_err(|e| format!("invalid value for {name}: {e}"))?;
    if !value.is_finite() {
        return Err(format!("value for {name} is not finite"));
    }
    Ok((name.to_string(), value))
}
