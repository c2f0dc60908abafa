//! Command-line front end: system files, subcommands and reports.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod report;
pub mod system;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] system::LoadError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Module(String),
}

impl CliError {
    pub fn module(e: impl std::fmt::Display) -> Self {
        CliError::Module(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "jetbal", version, about = "Balance systems on partial jet bundles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// Machine-readable output (sorted keys, numbers as decimal strings).
    #[arg(long, global = true)]
    pub json: bool,
    /// Point for pointwise checks, e.g. "y=1,t=0".
    #[arg(long, global = true, value_name = "BINDINGS")]
    pub at: Option<String>,
    /// Grid points per axis for section checks.
    #[arg(long, global = true, default_value_t = 32)]
    pub grid: usize,
    /// Finite-difference stencil order.
    #[arg(long, global = true, default_value_t = 2, value_parser = stencil_order)]
    pub stencil: usize,
    /// Tolerance for numerical checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Parameter override, repeatable.
    #[arg(long = "param", global = true, value_name = "NAME=VALUE")]
    pub params: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum RouteArg {
    #[default]
    Full,
    Admitted,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the balance system generated by the constitutive relation.
    Derive { file: PathBuf },
    /// Compare the generated system with the Euler-Lagrange equations.
    ElCompare { file: PathBuf },
    /// Admissibility condition of a vertical field, split into determining equations.
    Admissible {
        file: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long, value_enum, default_value_t = RouteArg::Full)]
        route: RouteArg,
    },
    /// Symmetry equations and class of a vector field.
    Symmetry {
        file: PathBuf,
        #[arg(long)]
        field: String,
    },
    /// Noether current and balance law of a symmetry.
    Noether {
        file: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long)]
        section: Option<String>,
        /// Use finite differences of the sampled section instead of exact jets.
        #[arg(long)]
        sampled: bool,
    },
    /// Energy-momentum tensor and balance.
    EnergyMomentum {
        file: PathBuf,
        #[arg(long)]
        section: Option<String>,
        #[arg(long)]
        sampled: bool,
    },
    /// Hyperbolic, parabolic and stationary counts at a point.
    Classify { file: PathBuf },
    /// Convexity, holonomicity and residual-inequality audit of RET data.
    RetAudit { file: PathBuf },
    /// Residuals of the generated system along a named section.
    Verify {
        file: PathBuf,
        #[arg(long)]
        section: String,
        #[arg(long)]
        sampled: bool,
    },
    /// Identity suites for forms and prolongations.
    FormsSelftest {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, hide = true)]
        corrupt_eta: bool,
    },
}

fn stencil_order(s: &str) -> Result<usize, String> {
    match s {
        "2" => Ok(2),
        "4" => Ok(4),
        _ => Err("stencil order must be 2 or 4".into()),
    }
}

/// `name=value` pairs separated by commas.
pub fn parse_bindings(s: &str) -> Result<Vec<(String, f64)>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| CliError::Usage(format!("expected name=value, got `{p}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| CliError::Usage(format!("`{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

impl Flags {
    pub fn param_overrides(&self) -> Result<BTreeMap<String, f64>, CliError> {
        let mut out = BTreeMap::new();
        for p in &self.params {
            out.extend(parse_bindings(p)?);
        }
        Ok(out)
    }
}

/// Exit status and rendered output of one invocation.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(cli: &Cli) -> Outcome {
    match commands::dispatch(cli) {
        Ok(report) => Outcome {
            code: if report.passed { 0 } else { 1 },
            stdout: if cli.flags.json { report.json() } else { report.text() },
            stderr: String::new(),
        },
        Err(e) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

/// Parse arguments and run; clap usage errors map to exit code 2.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}
