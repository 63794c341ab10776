//! `prewavelet`: solve, verify and benchmark the multilevel Poisson solver.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical failure.

mod commands;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prewavelet_core::bench::{Method, SolverKind};
use prewavelet_core::quadrature::QuadRule;

pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "prewavelet",
    version,
    about = "Multilevel prewavelet solver for -Δu = g on the unit square"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write the level-J solution as CSV.
    Solve(SolveArgs),
    /// Run the structural checks and print PASS/FAIL per check.
    Verify(VerifyArgs),
    /// Time direct FEM against the prewavelet ladder and write CSV records.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fem,
    Prewavelet,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fem => Method::Fem,
            MethodArg::Prewavelet => Method::Prewavelet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Direct,
    Cg,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Direct => SolverKind::Direct,
            SolverArg::Cg => SolverKind::Cg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuadArg {
    Mid3,
    Gauss7,
}

impl From<QuadArg> for QuadRule {
    fn from(q: QuadArg) -> Self {
        match q {
            QuadArg::Mid3 => QuadRule::Mid3,
            QuadArg::Gauss7 => QuadRule::Gauss7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    All,
    Orthogonality,
    Rank,
    Dimensions,
    Strip,
    Identity,
    Equivalence,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Target level J (1..=12, capped by PREWAVELET_MAX_LEVEL).
    #[arg(long)]
    pub level: u32,
    /// Builtin problem (sine, poly, exp) or path to a JSON problem file.
    #[arg(long, default_value = "sine")]
    pub problem: String,
    #[arg(long, value_enum, default_value = "prewavelet")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "direct")]
    pub solver: SolverArg,
    /// Relative residual tolerance for cg, in (0, 1).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Jacobi preconditioning for cg.
    #[arg(long)]
    pub jacobi: bool,
    /// Solution CSV path; stdout when omitted (the summary then goes to stderr).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quadrature rule for load vectors.
    #[arg(long, value_enum, default_value = "mid3")]
    pub quad: QuadArg,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Checks run on wavelet levels 1..level−1.
    #[arg(long, default_value_t = 3)]
    pub level: u32,
    #[arg(long, value_enum, default_value = "all")]
    pub check: Check,
    /// Perturbs one wavelet coefficient before checking (self-test of the checks).
    #[arg(long, hide = true)]
    pub perturb: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
    pub levels: Vec<u32>,
    /// Comma-separated builtin problems.
    #[arg(long = "problem", value_delimiter = ',', default_value = "sine,poly,exp")]
    pub problems: Vec<String>,
    #[arg(long = "method", value_enum, value_delimiter = ',', default_value = "fem,prewavelet")]
    pub methods: Vec<MethodArg>,
    #[arg(long = "solver", value_enum, value_delimiter = ',', default_value = "direct")]
    pub solvers: Vec<SolverArg>,
    /// Comma-separated cg tolerances.
    #[arg(long, value_delimiter = ',', default_value = "1e-8,1e-9,1e-10,1e-11,1e-12,1e-13")]
    pub tolerances: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Skip the discarded warm-up run.
    #[arg(long)]
    pub no_warmup: bool,
    #[arg(long)]
    pub jacobi: bool,
    /// Run combinations on several threads (timings become unreliable).
    #[arg(long)]
    pub parallel: bool,
    #[arg(long, value_enum, default_value = "mid3")]
    pub quad: QuadArg,
    /// Records CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match commands::max_level() {
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Ok(max) => match &cli.command {
            Command::Solve(args) => commands::solve(args, max),
            Command::Verify(args) => commands::verify(args, max),
            Command::Bench(args) => commands::bench(args, max),
        },
    };
    ExitCode::from(code)
}
