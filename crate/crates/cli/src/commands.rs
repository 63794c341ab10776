use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use prewavelet_core::assembly::stiffness_matrix;
use prewavelet_core::bench::{self, builtin_problems, BenchConfig, DEFAULT_MAX_LEVEL};
use prewavelet_core::echelon;
use prewavelet_core::homogenize::homogenize;
use prewavelet_core::linalg::CgOptions;
use prewavelet_core::mesh::{mesh_width, num_interior, GridIndex, MAX_LEVEL};
use prewavelet_core::prewavelet::{dimension_check, orthogonality_residual, strip_wavelets, wavelet_matrix};
use prewavelet_core::quadrature::{load_vector, QuadRule};
use prewavelet_core::solver::{
    h1_error_nodal, identity_residual, l2_error_nodal, solve_spd, write_solution_csv, Hierarchy, LoadLadder,
    SolveMethod,
};
use prewavelet_core::sparse::SparseMatrix;

use crate::problem::Problem;
use crate::{BenchArgs, Check, MethodArg, SolveArgs, SolverArg, VerifyArgs, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY};

pub const MAX_LEVEL_ENV: &str = "PREWAVELET_MAX_LEVEL";

/// Largest level any command accepts.
pub fn max_level() -> Result<u32, String> {
    match std::env::var(MAX_LEVEL_ENV) {
        Err(_) => Ok(DEFAULT_MAX_LEVEL),
        Ok(v) => match v.trim().parse::<u32>() {
            Ok(n) if (1..=MAX_LEVEL).contains(&n) => Ok(n),
            _ => Err(format!("{MAX_LEVEL_ENV}={v} is not a level in 1..={MAX_LEVEL}")),
        },
    }
}

fn config_error(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_CONFIG
}

fn check_level(level: u32, min: u32, max: u32) -> Result<(), String> {
    if level < min || level > max {
        Err(format!("level {level} outside {min}..={max}"))
    } else {
        Ok(())
    }
}

fn check_tolerance(tol: f64) -> Result<(), String> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(format!("tolerance {tol} outside (0, 1)"))
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn solve(args: &SolveArgs, max: u32) -> u8 {
    if let Err(e) = check_level(args.level, 1, max).and_then(|_| check_tolerance(args.tol)) {
        return config_error(e);
    }
    let problem = match Problem::resolve(&args.problem) {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let hom = match homogenize(&problem.dirichlet) {
        Ok(h) => h,
        Err(e) => return config_error(e),
    };
    let mut out = match output(args.out.as_deref()) {
        Ok(w) => w,
        Err(e) => return config_error(format!("cannot open output: {e}")),
    };
    let g1 = hom.rhs_field();
    let rule = QuadRule::from(args.quad).rule();
    let level = args.level;
    let method = match args.solver {
        SolverArg::Direct => SolveMethod::Direct,
        SolverArg::Cg => SolveMethod::Cg(CgOptions {
            tolerance: args.tol,
            max_iterations: 100_000,
            jacobi: args.jacobi,
        }),
    };

    let start = Instant::now();
    let result = match args.method {
        MethodArg::Fem => {
            let d = stiffness_matrix(level);
            let load = load_vector(level, |x, y| g1(x, y), &rule);
            let assemble = start.elapsed().as_secs_f64();
            solve_spd(&d, &load, method)
                .map(|(w, r)| (w, assemble, r.iterations))
                .map_err(|e| e.to_string())
        }
        MethodArg::Prewavelet => Hierarchy::new(level).map_err(|e| e.to_string()).and_then(|h| {
            let loads = LoadLadder::new(level, |x, y| g1(x, y), &rule);
            let assemble = start.elapsed().as_secs_f64();
            let ml = h.multilevel_solve(1, &loads, method).map_err(|e| e.to_string())?;
            let w = ml.coefficients(&h, level).map_err(|e| e.to_string())?;
            Ok((w, assemble, ml.iterations()))
        }),
    };
    let total = start.elapsed().as_secs_f64();
    let (w, assemble, iterations) = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: solve failed: {e}");
            return EXIT_NUMERICAL;
        }
    };

    let h = mesh_width(level);
    let n = (1usize << level) + 1;
    let mut full = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            full[k * n + i] = hom.lift.eval(i as f64 * h, k as f64 * h);
        }
    }
    let mut values = vec![0.0; w.len()];
    for g in GridIndex::all(level) {
        let idx = g.k as usize * n + g.i as usize;
        full[idx] += w[g.linear_index()];
        values[g.linear_index()] = full[idx];
    }

    if let Err(e) = write_solution_csv(&mut out, level, &values).and_then(|_| out.flush()) {
        eprintln!("error: writing solution: {e}");
        return EXIT_NUMERICAL;
    }

    let errors = match &problem.exact {
        Some((u, grad)) => format!(
            " h1_error={:.6e} l2_error={:.6e}",
            h1_error_nodal(level, &full, |x, y| grad(x, y)),
            l2_error_nodal(level, &full, |x, y| u(x, y))
        ),
        None => String::new(),
    };
    let summary = format!(
        "problem={} level={level} unknowns={} method={:?} solver={:?}{errors} assemble_s={assemble:.6} solve_s={:.6} total_s={total:.6} iterations={iterations}",
        problem.name,
        num_interior(level),
        args.method,
        args.solver,
        total - assemble,
    )
    .to_lowercase();
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    0
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, ok: bool, check: &str, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} {check} {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn perturbed(c: SparseMatrix) -> SparseMatrix {
    let mut rows: Vec<Vec<(usize, f64)>> = (0..c.rows()).map(|r| c.row_entries(r).collect()).collect();
    if let Some(first) = rows.first_mut().and_then(|r| r.first_mut()) {
        first.1 += 0.25;
    }
    SparseMatrix::from_rows(c.cols(), rows)
}

const IDENTITY_MAX_LEVEL: u32 = 4;

pub fn verify(args: &VerifyArgs, max: u32) -> u8 {
    if let Err(e) = check_level(args.level, 2, max) {
        return config_error(e);
    }
    let wants = |c: Check| args.check == Check::All || args.check == c;
    let mut report = Report { failures: 0 };
    let levels = 1..args.level;

    let mut matrices = Vec::new();
    for j in levels.clone() {
        match wavelet_matrix(j) {
            Ok(c) => matrices.push(if args.perturb { perturbed(c) } else { c }),
            Err(e) => {
                report.line(false, "construction", format!("j={j}: {e}"));
                return EXIT_VERIFY;
            }
        }
    }

    for (j, c) in levels.clone().zip(&matrices) {
        if wants(Check::Orthogonality) {
            match orthogonality_residual(c, j) {
                Ok(r) => report.line(r <= 1e-12, "orthogonality", format!("j={j} max|B D C^T|={r:.2e}")),
                Err(e) => report.line(false, "orthogonality", format!("j={j}: {e}")),
            }
        }
        if wants(Check::Rank) {
            let rank = echelon::rank_of((0..c.rows()).map(|r| echelon::from_f64_entries(c.row_entries(r))));
            let expected = num_interior(j + 1) - num_interior(j);
            report.line(
                rank == expected && c.rows() == expected,
                "rank",
                format!("j={j} rank={rank} expected={expected}"),
            );
        }
        if wants(Check::Strip) {
            let expected = (1usize << (j + 3)) - 8;
            match strip_wavelets(j) {
                Ok(s) => report.line(
                    s.len() == expected,
                    "strip",
                    format!("j={j} count={} expected={expected}", s.len()),
                ),
                Err(e) => report.line(false, "strip", format!("j={j}: {e}")),
            }
        }
        if wants(Check::Dimensions) {
            println!("dimensions j={j}: n expected actual");
            let mut ok = true;
            for n in 1..(1u32 << j) {
                match dimension_check(j, n) {
                    Ok((e, a)) => {
                        println!("  {n:>3} {e:>6} {a:>6}");
                        ok &= e == a;
                    }
                    Err(err) => {
                        println!("  {n:>3} error: {err}");
                        ok = false;
                    }
                }
            }
            report.line(
                ok,
                "dimensions",
                format!("j={j} 3n^2-4n+1 for n=1..{}", (1u32 << j) - 1),
            );
        }
        if wants(Check::Identity) {
            if j > IDENTITY_MAX_LEVEL {
                println!("SKIP identity j={j} (dense check limited to j <= {IDENTITY_MAX_LEVEL})");
            } else {
                let b = prewavelet_core::assembly::refinement_matrix(j);
                match identity_residual(&b, c, &stiffness_matrix(j + 1)) {
                    Some(r) => report.line(r <= 1e-11, "identity", format!("j={j} residual={r:.2e}")),
                    None => report.line(false, "identity", format!("j={j} singular Gram matrix")),
                }
            }
        }
    }

    if wants(Check::Equivalence) {
        let top = args.level;
        match Hierarchy::new(top) {
            Ok(h) => {
                for p in builtin_problems() {
                    let rule = QuadRule::Mid3.rule();
                    let loads = LoadLadder::new(top, p.rhs, &rule);
                    let direct = solve_spd(
                        h.stiffness(top).expect("top level"),
                        loads.get(top),
                        SolveMethod::Direct,
                    );
                    let ladder = h
                        .multilevel_solve(1, &loads, SolveMethod::Direct)
                        .and_then(|ml| ml.coefficients(&h, top));
                    match (direct, ladder) {
                        (Ok((d, _)), Ok(c)) => {
                            let diff = d.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                            let rel = diff / scale;
                            report.line(
                                rel <= 1e-9,
                                "equivalence",
                                format!("{} J={top} relative={rel:.2e}", p.name),
                            );
                        }
                        (d, c) => report.line(
                            false,
                            "equivalence",
                            format!("{}: {:?} {:?}", p.name, d.err(), c.err().map(|e| e.to_string())),
                        ),
                    }
                }
            }
            Err(e) => report.line(false, "equivalence", e.to_string()),
        }
    }

    println!("verify: {} failed", report.failures);
    if report.failures == 0 {
        0
    } else {
        EXIT_VERIFY
    }
}

pub fn bench(args: &BenchArgs, max: u32) -> u8 {
    if args.reps == 0 {
        return config_error("--reps must be at least 1");
    }
    if let Some(bad) = args.tolerances.iter().find(|t| check_tolerance(**t).is_err()) {
        return config_error(format!("tolerance {bad} outside (0, 1)"));
    }
    let config = BenchConfig {
        problems: args.problems.clone(),
        levels: args.levels.clone(),
        methods: args.methods.iter().map(|m| (*m).into()).collect(),
        solvers: args.solvers.iter().map(|s| (*s).into()).collect(),
        tolerances: args.tolerances.clone(),
        repetitions: args.reps,
        warmup: !args.no_warmup,
        rule: args.quad.into(),
        jacobi: args.jacobi,
        max_iterations: 100_000,
        max_level: max,
        parallel: args.parallel,
    };
    let entries = match bench::run_benchmark(&config) {
        Ok(e) => e,
        Err(e) => return config_error(e),
    };
    for e in &entries {
        if let Some(f) = &e.failure {
            eprintln!(
                "warning: {} {} {} level {}: {f}",
                e.record.problem, e.record.method, e.record.solver, e.record.level
            );
        }
    }
    let records: Vec<_> = entries.into_iter().map(|e| e.record).collect();
    let written = output(args.out.as_deref())
        .map_err(bench::BenchError::from)
        .and_then(|w| bench::write_csv(w, &records));
    if let Err(e) = written {
        return config_error(format!("writing records: {e}"));
    }
    if let Some(&top) = args.levels.iter().max() {
        for (p, fem, pw) in bench::speedup_report(&records, top) {
            eprintln!(
                "level {top} {p}: fem total {fem:.6}s, prewavelet total {pw:.6}s, ratio {:.3}",
                pw / fem
            );
        }
    }
    0
}
