//! Standard and multilevel Galerkin solves, error norms and solution export.
//!
//! The multilevel path solves `D_{j₀} a = F_{j₀}`, then for each level
//! `E_j b_j = C_j F_{j+1}` and `c_{j+1} = B_jᵀ c_j + C_jᵀ b_j`. Because `W_j`
//! is `⟨·,·⟩_s`-orthogonal to `V_j`, the result equals the direct level-`J`
//! solution up to round-off.

use std::io::{self, Write};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::assembly::{refinement_matrix, stiffness_matrix};
use crate::linalg::{cg_solve, CgOptions, LinalgError, SolverReport, SparseCholesky};
use crate::mesh::{mesh_width, num_interior, side, triangles, GridIndex, MAX_LEVEL};
use crate::prewavelet::{gram_of, PrewaveletError, WaveletBasis};
use crate::quadrature::{load_vector, QuadratureRule};
use crate::sparse::{SparseError, SparseMatrix};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error(transparent)]
    Prewavelet(#[from] PrewaveletError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("solve failed on level {level}: {source}")]
    LevelFailed {
        level: u32,
        source: LinalgError,
        partial: Box<MultilevelSolution>,
    },
    #[error("a dense oracle matrix was singular at level {0}")]
    Singular(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolveMethod {
    #[default]
    Direct,
    Cg(CgOptions),
}

fn solve_with(
    a: &SparseMatrix,
    factor: &OnceLock<SparseCholesky>,
    b: &[f64],
    method: SolveMethod,
) -> Result<(Vec<f64>, SolverReport), LinalgError> {
    match method {
        SolveMethod::Cg(opts) => cg_solve(a, b, opts),
        SolveMethod::Direct => {
            let start = std::time::Instant::now();
            if factor.get().is_none() {
                let _ = factor.set(SparseCholesky::factor(a)?);
            }
            let x = factor.get().expect("factor set above").solve(b)?;
            let seconds = start.elapsed().as_secs_f64();
            let ax = a
                .mul_vec(&x)
                .map_err(|e| LinalgError::DimensionMismatch(e.to_string()))?;
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            let nb = crate::sparse::norm2(b);
            let res = crate::sparse::norm2(&r);
            Ok((
                x,
                SolverReport {
                    iterations: 0,
                    relative_residual: if nb > 0.0 { res / nb } else { res },
                    seconds,
                    converged: true,
                },
            ))
        }
    }
}

/// Solves an SPD system with either method; no factor caching.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], method: SolveMethod) -> Result<(Vec<f64>, SolverReport), LinalgError> {
    solve_with(a, &OnceLock::new(), b, method)
}

/// `D_J a = F_J` without any prewavelet machinery.
pub fn fem_solve(level: u32, load: &[f64], method: SolveMethod) -> Result<(Vec<f64>, SolverReport), SolveError> {
    check_level(level)?;
    Ok(solve_spd(&stiffness_matrix(level), load, method)?)
}

fn check_level(level: u32) -> Result<(), SolveError> {
    if level == 0 || level > MAX_LEVEL {
        return Err(SolveError::InvalidLevel(format!("{level} outside 1..={MAX_LEVEL}")));
    }
    Ok(())
}

/// Operators linking level `j` to `j + 1`.
#[derive(Debug)]
pub struct LevelOperators {
    pub level: u32,
    pub refinement: SparseMatrix,
    pub basis: WaveletBasis,
    pub wavelets: SparseMatrix,
    pub gram: SparseMatrix,
    gram_factor: OnceLock<SparseCholesky>,
}

/// Everything needed to solve on levels `1..=top`. Factorizations are
/// computed on first use and cached.
#[derive(Debug)]
pub struct Hierarchy {
    top: u32,
    stiffness: Vec<SparseMatrix>,
    stiffness_factor: Vec<OnceLock<SparseCholesky>>,
    levels: Vec<LevelOperators>,
}

impl Hierarchy {
    pub fn new(top: u32) -> Result<Self, SolveError> {
        check_level(top)?;
        let stiffness = (1..=top).map(stiffness_matrix).collect();
        let stiffness_factor = (1..=top).map(|_| OnceLock::new()).collect();
        let mut levels = Vec::new();
        for j in 1..top {
            let basis = WaveletBasis::build(j)?;
            let wavelets = basis.matrix();
            let gram = gram_of(&wavelets, j)?;
            levels.push(LevelOperators {
                level: j,
                refinement: refinement_matrix(j),
                basis,
                wavelets,
                gram,
                gram_factor: OnceLock::new(),
            });
        }
        Ok(Self {
            top,
            stiffness,
            stiffness_factor,
            levels,
        })
    }

    pub fn top(&self) -> u32 {
        self.top
    }

    fn check(&self, level: u32) -> Result<(), SolveError> {
        if level == 0 || level > self.top {
            return Err(SolveError::InvalidLevel(format!(
                "{level} outside 1..={} of this hierarchy",
                self.top
            )));
        }
        Ok(())
    }

    pub fn stiffness(&self, level: u32) -> Result<&SparseMatrix, SolveError> {
        self.check(level)?;
        Ok(&self.stiffness[level as usize - 1])
    }

    /// Operators between `level` and `level + 1`.
    pub fn operators(&self, level: u32) -> Result<&LevelOperators, SolveError> {
        if level == 0 || level >= self.top {
            return Err(SolveError::InvalidLevel(format!(
                "no wavelet level {level} below top level {}",
                self.top
            )));
        }
        Ok(&self.levels[level as usize - 1])
    }

    pub fn fem_solve(
        &self,
        level: u32,
        load: &[f64],
        method: SolveMethod,
    ) -> Result<(Vec<f64>, SolverReport), SolveError> {
        self.check(level)?;
        let i = level as usize - 1;
        Ok(solve_with(&self.stiffness[i], &self.stiffness_factor[i], load, method)?)
    }

    /// `E_j b = C_j F_{j+1}`.
    pub fn wavelet_solve(
        &self,
        level: u32,
        fine_load: &[f64],
        method: SolveMethod,
    ) -> Result<(Vec<f64>, SolverReport), SolveError> {
        let ops = self.operators(level)?;
        let rhs = ops.wavelets.mul_vec(fine_load)?;
        Ok(solve_with(&ops.gram, &ops.gram_factor, &rhs, method)?)
    }

    /// `c_{j+1} = B_jᵀ a + C_jᵀ b`.
    pub fn prolong(&self, level: u32, coarse: &[f64], detail: &[f64]) -> Result<Vec<f64>, SolveError> {
        let ops = self.operators(level)?;
        let mut c = ops.refinement.transpose_mul_vec(coarse)?;
        for (c, w) in c.iter_mut().zip(ops.wavelets.transpose_mul_vec(detail)?) {
            *c += w;
        }
        Ok(c)
    }

    /// Coarse solve on `base`, then one wavelet correction per level up to
    /// the load ladder's top level.
    pub fn multilevel_solve(
        &self,
        base: u32,
        loads: &LoadLadder,
        method: SolveMethod,
    ) -> Result<MultilevelSolution, SolveError> {
        let top = loads.top();
        self.check(top)?;
        if base == 0 || base > top {
            return Err(SolveError::InvalidLevel(format!("base level {base} outside 1..={top}")));
        }
        let (coarse, report) = self.fem_solve(base, loads.get(base), method).map_err(|e| match e {
            SolveError::Linalg(source) => SolveError::LevelFailed {
                level: base,
                source,
                partial: Box::new(MultilevelSolution::empty(base, num_interior(base))),
            },
            other => other,
        })?;
        let mut solution = MultilevelSolution {
            base_level: base,
            coarse,
            details: Vec::new(),
            reports: vec![report],
        };
        for j in base..top {
            match self.wavelet_solve(j, loads.get(j + 1), method) {
                Ok((b, report)) => {
                    solution.details.push(b);
                    solution.reports.push(report);
                }
                Err(SolveError::Linalg(source)) => {
                    return Err(SolveError::LevelFailed {
                        level: j,
                        source,
                        partial: Box::new(solution),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(solution)
    }
}

/// Load vectors `F_j` for `j = 1..=top`. Only `F_top` is integrated; the
/// coarser ones are restrictions `F_j = B_j F_{j+1}`, so every level sees the
/// same discrete functional.
#[derive(Debug, Clone)]
pub struct LoadLadder {
    loads: Vec<Vec<f64>>,
}

impl LoadLadder {
    pub fn new<F: Fn(f64, f64) -> f64>(top: u32, g: F, rule: &QuadratureRule) -> Self {
        Self::restricted(top, load_vector(top, g, rule)).expect("load has level-top length")
    }

    pub fn restricted(top: u32, fine: Vec<f64>) -> Result<Self, SolveError> {
        let mut loads = vec![fine];
        for j in (1..top).rev() {
            let next = refinement_matrix(j).mul_vec(loads.last().expect("nonempty"))?;
            loads.push(next);
        }
        loads.reverse();
        Ok(Self { loads })
    }

    pub fn from_loads(loads: Vec<Vec<f64>>) -> Self {
        Self { loads }
    }

    pub fn top(&self) -> u32 {
        self.loads.len() as u32
    }

    pub fn get(&self, level: u32) -> &[f64] {
        &self.loads[level as usize - 1]
    }
}

/// Coarse coefficients on `base_level` plus wavelet coefficients for every
/// level above it.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelSolution {
    pub base_level: u32,
    pub coarse: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub reports: Vec<SolverReport>,
}

impl MultilevelSolution {
    fn empty(base_level: u32, n: usize) -> Self {
        Self {
            base_level,
            coarse: vec![0.0; n],
            details: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn top_level(&self) -> u32 {
        self.base_level + self.details.len() as u32
    }

    /// Total CG iterations over all solves.
    pub fn iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).sum()
    }

    /// Drops every correction above `level`; this is the level-`level`
    /// Galerkin solution.
    pub fn truncated(&self, level: u32) -> Self {
        let keep = level.saturating_sub(self.base_level).min(self.details.len() as u32) as usize;
        Self {
            base_level: self.base_level,
            coarse: self.coarse.clone(),
            details: self.details[..keep].to_vec(),
            reports: self.reports[..(keep + 1).min(self.reports.len())].to_vec(),
        }
    }

    /// Hat coefficients on `level` (between base and top).
    pub fn coefficients(&self, hierarchy: &Hierarchy, level: u32) -> Result<Vec<f64>, SolveError> {
        if level < self.base_level || level > self.top_level() {
            return Err(SolveError::InvalidLevel(format!(
                "{level} outside {}..={}",
                self.base_level,
                self.top_level()
            )));
        }
        let mut c = self.coarse.clone();
        for (j, b) in (self.base_level..level).zip(&self.details) {
            c = hierarchy.prolong(j, &c, b)?;
        }
        Ok(c)
    }
}

/// Dense `max |Bᵀ(BDBᵀ)⁻¹B + Cᵀ(CDCᵀ)⁻¹C − D⁻¹|`.
pub fn identity_residual(b: &SparseMatrix, c: &SparseMatrix, d: &SparseMatrix) -> Option<f64> {
    let dense = |m: &SparseMatrix| {
        let mut out = DMatrix::zeros(m.rows(), m.cols());
        for (r, col, v) in m.iter() {
            out[(r, col)] = v;
        }
        out
    };
    let (b, c, d) = (dense(b), dense(c), dense(d));
    let inv = |m: DMatrix<f64>| m.try_inverse();
    let coarse = inv(&b * &d * b.transpose())?;
    let detail = inv(&c * &d * c.transpose())?;
    let d_inv = inv(d)?;
    let r = b.transpose() * coarse * &b + c.transpose() * detail * &c - d_inv;
    Some(r.amax())
}

pub fn verify_identity(level: u32) -> Result<f64, SolveError> {
    check_level(level)?;
    let c = WaveletBasis::build(level)?.matrix();
    identity_residual(&refinement_matrix(level), &c, &stiffness_matrix(level + 1)).ok_or(SolveError::Singular(level))
}

/// Interior coefficients padded with zero boundary values, `(2^j+1)²`
/// entries row-major by `(k, i)`.
pub fn with_zero_boundary(level: u32, interior: &[f64]) -> Vec<f64> {
    let n = side(level) as usize + 2;
    let mut full = vec![0.0; n * n];
    for g in GridIndex::all(level) {
        full[g.k as usize * n + g.i as usize] = interior[g.linear_index()];
    }
    full
}

fn nodal_value(full: &[f64], n: usize, v: (u32, u32)) -> f64 {
    full[v.1 as usize * n + v.0 as usize]
}

/// `‖∇(u − u_h)‖₀` for the piecewise-linear `u_h` with nodal values `full`
/// (boundary included), using the seven-point rule.
pub fn h1_error_nodal<G: Fn(f64, f64) -> (f64, f64)>(level: u32, full: &[f64], grad: G) -> f64 {
    let rule = QuadratureRule::gauss7();
    let n = side(level) as usize + 2;
    let mut sum = 0.0;
    for t in triangles(level) {
        let gv = t.grid_vertices();
        let gradients = t.barycentric_gradients();
        let mut gh = (0.0, 0.0);
        for (v, g) in gv.iter().zip(gradients) {
            let c = nodal_value(full, n, *v);
            gh.0 += c * g.0;
            gh.1 += c * g.1;
        }
        sum += crate::quadrature::integrate(
            &t,
            |x, y| {
                let (ux, uy) = grad(x, y);
                (ux - gh.0).powi(2) + (uy - gh.1).powi(2)
            },
            &rule,
        );
    }
    sum.sqrt()
}

/// `‖u − u_h‖₀`, same conventions as [`h1_error_nodal`].
pub fn l2_error_nodal<U: Fn(f64, f64) -> f64>(level: u32, full: &[f64], u: U) -> f64 {
    let rule = QuadratureRule::gauss7();
    let n = side(level) as usize + 2;
    let mut sum = 0.0;
    for t in triangles(level) {
        let c = t.grid_vertices().map(|v| nodal_value(full, n, v));
        let area = t.area();
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let (x, y) = t.point(*b);
            let uh = c[0] * b[0] + c[1] * b[1] + c[2] * b[2];
            sum += area * w * (u(x, y) - uh).powi(2);
        }
    }
    sum.sqrt()
}

pub fn h1_error<G: Fn(f64, f64) -> (f64, f64)>(level: u32, coefficients: &[f64], grad: G) -> f64 {
    h1_error_nodal(level, &with_zero_boundary(level, coefficients), grad)
}

pub fn l2_error<U: Fn(f64, f64) -> f64>(level: u32, coefficients: &[f64], u: U) -> f64 {
    l2_error_nodal(level, &with_zero_boundary(level, coefficients), u)
}

/// Writes `level,i,k,x,y,value` for every interior node in ordinal order.
pub fn write_solution_csv<W: Write>(mut out: W, level: u32, values: &[f64]) -> io::Result<()> {
    writeln!(out, "level,i,k,x,y,value")?;
    let h = mesh_width(level);
    for g in GridIndex::all(level) {
        writeln!(
            out,
            "{level},{},{},{},{},{}",
            g.i,
            g.k,
            g.i as f64 * h,
            g.k as f64 * h,
            values[g.linear_index()]
        )?;
    }
    Ok(())
}
