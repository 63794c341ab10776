//! Timing harness: direct FEM against the cumulative prewavelet ladder.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::stiffness_matrix;
use crate::linalg::{CgOptions, SolverReport};
use crate::mesh::num_interior;
use crate::quadrature::{load_vector, QuadRule};
use crate::solver::{h1_error, l2_error, solve_spd, Hierarchy, LoadLadder, SolveMethod};

pub const DEFAULT_MAX_LEVEL: u32 = 7;

type Scalar = fn(f64, f64) -> f64;

/// A test case with known solution on the unit square (zero boundary).
#[derive(Clone, Copy)]
pub struct BuiltinProblem {
    pub name: &'static str,
    pub u: Scalar,
    pub grad: fn(f64, f64) -> (f64, f64),
    /// `(u_xx, u_xy, u_yy)`.
    pub hessian: fn(f64, f64) -> (f64, f64, f64),
    pub rhs: Scalar,
}

impl fmt::Debug for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuiltinProblem").field("name", &self.name).finish()
    }
}

impl BuiltinProblem {
    /// `√12·2^{−j}·√(‖u_xx‖²_∞ + ‖u_x u_y‖²_∞ + ‖u_yy‖²_∞)`, with the
    /// maxima sampled on a 1024×1024 grid.
    pub fn error_bound(&self, level: u32) -> f64 {
        let n = 1024;
        let (mut sxx, mut sxy, mut syy) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..=n {
            for i in 0..=n {
                let (x, y) = (i as f64 / n as f64, k as f64 / n as f64);
                let (uxx, _, uyy) = (self.hessian)(x, y);
                let (ux, uy) = (self.grad)(x, y);
                sxx = sxx.max(uxx.abs());
                sxy = sxy.max((ux * uy).abs());
                syy = syy.max(uyy.abs());
            }
        }
        12f64.sqrt() / (1u64 << level) as f64 * (sxx * sxx + sxy * sxy + syy * syy).sqrt()
    }
}

mod sine {
    use std::f64::consts::PI;

    const W: f64 = 2.0 * PI;

    pub fn u(x: f64, y: f64) -> f64 {
        (W * x).sin() * (W * y).sin()
    }
    pub fn grad(x: f64, y: f64) -> (f64, f64) {
        (W * (W * x).cos() * (W * y).sin(), W * (W * x).sin() * (W * y).cos())
    }
    pub fn hessian(x: f64, y: f64) -> (f64, f64, f64) {
        let v = -W * W * u(x, y);
        (v, W * W * (W * x).cos() * (W * y).cos(), v)
    }
    pub fn rhs(x: f64, y: f64) -> f64 {
        2.0 * W * W * u(x, y)
    }
}

mod poly {
    pub fn u(x: f64, y: f64) -> f64 {
        x * (1.0 - x) * y * (1.0 - y)
    }
    pub fn grad(x: f64, y: f64) -> (f64, f64) {
        ((1.0 - 2.0 * x) * y * (1.0 - y), x * (1.0 - x) * (1.0 - 2.0 * y))
    }
    pub fn hessian(x: f64, y: f64) -> (f64, f64, f64) {
        (
            -2.0 * y * (1.0 - y),
            (1.0 - 2.0 * x) * (1.0 - 2.0 * y),
            -2.0 * x * (1.0 - x),
        )
    }
    pub fn rhs(x: f64, y: f64) -> f64 {
        2.0 * x * (1.0 - x) + 2.0 * y * (1.0 - y)
    }
}

/// `u = p·q` with `p = x(1−x)y(1−y)`, `q = e^{8xy}`.
mod exp {
    fn parts(x: f64, y: f64) -> (f64, f64, f64, f64) {
        let p = x * (1.0 - x) * y * (1.0 - y);
        let px = (1.0 - 2.0 * x) * y * (1.0 - y);
        let py = x * (1.0 - x) * (1.0 - 2.0 * y);
        (p, px, py, (8.0 * x * y).exp())
    }
    pub fn u(x: f64, y: f64) -> f64 {
        let (p, _, _, q) = parts(x, y);
        p * q
    }
    pub fn grad(x: f64, y: f64) -> (f64, f64) {
        let (p, px, py, q) = parts(x, y);
        (q * (px + 8.0 * y * p), q * (py + 8.0 * x * p))
    }
    pub fn hessian(x: f64, y: f64) -> (f64, f64, f64) {
        let (p, px, py, q) = parts(x, y);
        let pxx = -2.0 * y * (1.0 - y);
        let pyy = -2.0 * x * (1.0 - x);
        let pxy = (1.0 - 2.0 * x) * (1.0 - 2.0 * y);
        (
            q * (pxx + 16.0 * y * px + 64.0 * y * y * p),
            q * (pxy + 8.0 * x * px + 8.0 * y * py + 8.0 * p + 64.0 * x * y * p),
            q * (pyy + 16.0 * x * py + 64.0 * x * x * p),
        )
    }
    pub fn rhs(x: f64, y: f64) -> f64 {
        let (uxx, _, uyy) = hessian(x, y);
        -(uxx + uyy)
    }
}

pub fn builtin_problems() -> Vec<BuiltinProblem> {
    vec![
        BuiltinProblem {
            name: "sine",
            u: sine::u,
            grad: sine::grad,
            hessian: sine::hessian,
            rhs: sine::rhs,
        },
        BuiltinProblem {
            name: "poly",
            u: poly::u,
            grad: poly::grad,
            hessian: poly::hessian,
            rhs: poly::rhs,
        },
        BuiltinProblem {
            name: "exp",
            u: exp::u,
            grad: exp::grad,
            hessian: exp::hessian,
            rhs: exp::rhs,
        },
    ]
}

pub fn find_problem(name: &str) -> Option<BuiltinProblem> {
    builtin_problems().into_iter().find(|p| p.name == name)
}

pub fn builtin_names() -> Vec<&'static str> {
    builtin_problems().iter().map(|p| p.name).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fem,
    Prewavelet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Cg,
}

macro_rules! keyword_enum {
    ($ty:ty, $($variant:path => $text:literal),+) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($variant),)+
                    other => Err(format!(
                        "unknown value '{other}' (expected one of: {})",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $text,)+ })
            }
        }
    };
}

keyword_enum!(Method, Method::Fem => "fem", Method::Prewavelet => "prewavelet");
keyword_enum!(SolverKind, SolverKind::Direct => "direct", SolverKind::Cg => "cg");

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub problem: String,
    pub method: Method,
    pub solver: SolverKind,
    pub level: u32,
    pub tolerance: Option<f64>,
    pub unknowns: usize,
    pub assemble_s: f64,
    pub solve_s: f64,
    pub total_s: f64,
    /// Empty when the solve failed.
    pub h1_error: Option<f64>,
    pub l2_error: Option<f64>,
}

/// A record plus data that has no CSV column.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchEntry {
    pub record: BenchRecord,
    /// Total CG iterations (all levels for the prewavelet ladder).
    pub iterations: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub problems: Vec<String>,
    pub levels: Vec<u32>,
    pub methods: Vec<Method>,
    pub solvers: Vec<SolverKind>,
    pub tolerances: Vec<f64>,
    pub repetitions: usize,
    pub warmup: bool,
    pub rule: QuadRule,
    pub jacobi: bool,
    pub max_iterations: usize,
    pub max_level: u32,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problems: builtin_names().iter().map(|s| s.to_string()).collect(),
            levels: vec![4, 5, 6],
            methods: vec![Method::Fem, Method::Prewavelet],
            solvers: vec![SolverKind::Direct],
            tolerances: vec![1e-8, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13],
            repetitions: 3,
            warmup: true,
            rule: QuadRule::Mid3,
            jacobi: false,
            max_iterations: 100_000,
            max_level: DEFAULT_MAX_LEVEL,
            parallel: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown problem '{name}' (builtins: {})", builtin_names().join(", "))]
    UnknownProblem { name: String },
    #[error("level {level} outside 1..={max}")]
    LevelOutOfRange { level: u32, max: u32 },
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
struct Case {
    problem: BuiltinProblem,
    method: Method,
    solver: SolverKind,
    level: u32,
    tolerance: Option<f64>,
}

struct Run {
    assemble: f64,
    solve: f64,
    outcome: Result<(Vec<f64>, usize), String>,
}

fn solve_method(case: &Case, config: &BenchConfig) -> SolveMethod {
    match case.tolerance {
        None => SolveMethod::Direct,
        Some(tolerance) => SolveMethod::Cg(CgOptions {
            tolerance,
            max_iterations: config.max_iterations,
            jacobi: config.jacobi,
        }),
    }
}

fn iterations(reports: &[SolverReport]) -> usize {
    reports.iter().map(|r| r.iterations).sum()
}

fn run_once(case: &Case, config: &BenchConfig) -> Run {
    let rule = config.rule.rule();
    let method = solve_method(case, config);
    let g = case.problem.rhs;
    let j = case.level;
    match case.method {
        Method::Fem => {
            let start = Instant::now();
            let d = stiffness_matrix(j);
            let load = load_vector(j, g, &rule);
            let assemble = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let outcome = solve_spd(&d, &load, method)
                .map(|(a, r)| (a, r.iterations))
                .map_err(|e| e.to_string());
            let solve = start.elapsed().as_secs_f64();
            Run {
                assemble,
                solve,
                outcome,
            }
        }
        Method::Prewavelet => {
            let start = Instant::now();
            let built = Hierarchy::new(j);
            let loads = LoadLadder::new(j, g, &rule);
            let assemble = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let outcome = built.map_err(|e| e.to_string()).and_then(|h| {
                let ml = h.multilevel_solve(1, &loads, method).map_err(|e| e.to_string())?;
                let c = ml.coefficients(&h, j).map_err(|e| e.to_string())?;
                Ok((c, iterations(&ml.reports)))
            });
            let solve = start.elapsed().as_secs_f64();
            Run {
                assemble,
                solve,
                outcome,
            }
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn run_case(case: &Case, config: &BenchConfig) -> BenchEntry {
    if config.warmup {
        run_once(case, config);
    }
    let runs: Vec<Run> = (0..config.repetitions).map(|_| run_once(case, config)).collect();
    let assemble = median(runs.iter().map(|r| r.assemble).collect());
    let solve = median(runs.iter().map(|r| r.solve).collect());
    let total = median(runs.iter().map(|r| r.assemble + r.solve).collect());
    let last = runs.into_iter().last().expect("at least one repetition");
    let (h1, l2, its, failure) = match last.outcome {
        Ok((c, its)) => (
            Some(h1_error(case.level, &c, case.problem.grad)),
            Some(l2_error(case.level, &c, case.problem.u)),
            its,
            None,
        ),
        Err(msg) => (None, None, 0, Some(msg)),
    };
    BenchEntry {
        record: BenchRecord {
            problem: case.problem.name.to_string(),
            method: case.method,
            solver: case.solver,
            level: case.level,
            tolerance: case.tolerance,
            unknowns: num_interior(case.level),
            assemble_s: assemble,
            solve_s: solve,
            total_s: total,
            h1_error: h1,
            l2_error: l2,
        },
        iterations: its,
        failure,
    }
}

fn cases(config: &BenchConfig) -> Result<Vec<Case>, BenchError> {
    if config.repetitions == 0 {
        return Err(BenchError::NoRepetitions);
    }
    let mut problems = Vec::new();
    for name in &config.problems {
        problems.push(find_problem(name).ok_or_else(|| BenchError::UnknownProblem { name: name.clone() })?);
    }
    for &level in &config.levels {
        if level == 0 || level > config.max_level {
            return Err(BenchError::LevelOutOfRange {
                level,
                max: config.max_level,
            });
        }
    }
    let mut out = Vec::new();
    for problem in &problems {
        for &level in &config.levels {
            for &method in &config.methods {
                for &solver in &config.solvers {
                    let tolerances: Vec<Option<f64>> = match solver {
                        SolverKind::Direct => vec![None],
                        SolverKind::Cg => config.tolerances.iter().map(|t| Some(*t)).collect(),
                    };
                    for tolerance in tolerances {
                        out.push(Case {
                            problem: *problem,
                            method,
                            solver,
                            level,
                            tolerance,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One entry per (problem, level, method, solver[, tolerance]) in that
/// nesting order. Failed solves are kept, with empty error columns.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchEntry>, BenchError> {
    let cases = cases(config)?;
    if !config.parallel {
        return Ok(cases.iter().map(|c| run_case(c, config)).collect());
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cases.len().max(1));
    let chunk = cases.len().div_ceil(workers).max(1);
    let entries = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|c| run_case(c, config)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("benchmark worker panicked"))
            .collect()
    });
    Ok(entries)
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "problem",
            "method",
            "solver",
            "level",
            "tolerance",
            "unknowns",
            "assemble_s",
            "solve_s",
            "total_s",
            "h1_error",
            "l2_error",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Direct-solver totals at one level: `(problem, fem_total, prewavelet_total)`.
pub fn speedup_report(records: &[BenchRecord], level: u32) -> Vec<(String, f64, f64)> {
    let total = |problem: &str, method| {
        records
            .iter()
            .find(|r| r.problem == problem && r.level == level && r.method == method && r.solver == SolverKind::Direct)
            .map(|r| r.total_s)
    };
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.problem.as_str()) {
            names.push(&r.problem);
        }
    }
    names
        .into_iter()
        .filter_map(|p| Some((p.to_string(), total(p, Method::Fem)?, total(p, Method::Prewavelet)?)))
        .collect()
}
