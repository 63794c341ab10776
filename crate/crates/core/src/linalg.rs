//! Sparse SPD solvers: up-looking Cholesky and (Jacobi-preconditioned) CG.

use std::time::Instant;

use crate::sparse::{dot, norm2, SparseMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("CG stopped after {} iterations at relative residual {:.3e}", .report.iterations, .report.relative_residual)]
    NotConverged { x: Vec<f64>, report: SolverReport },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub seconds: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            jacobi: false,
        }
    }
}

fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x).expect("shape checked by caller");
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

fn check_square(a: &SparseMatrix, b_len: Option<usize>) -> Result<(), LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {}×{}, not square",
            a.rows(),
            a.cols()
        )));
    }
    match b_len {
        Some(n) if n != a.rows() => Err(LinalgError::DimensionMismatch(format!(
            "right-hand side has length {n}, matrix has {} rows",
            a.rows()
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    #[default]
    ReverseCuthillMcKee,
}

/// Reverse Cuthill–McKee permutation of the symmetric pattern of `a`:
/// `perm[new] = old`. Each component starts from a pseudo-peripheral node.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.rows();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|r| a.row_entries(r).map(|e| e.0).filter(|&c| c != r).collect())
        .collect();
    let degree = |v: usize| neighbours[v].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| {
        let first = out.len();
        visited[start] = true;
        out.push(start);
        let mut head = first;
        while head < out.len() {
            let v = out[head];
            head += 1;
            let mut next: Vec<usize> = neighbours[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree(w), w));
            for w in next {
                visited[w] = true;
                out.push(w);
            }
        }
        first
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Two sweeps to move the start towards the periphery.
        let mut start = seed;
        for _ in 0..2 {
            let mut scratch = visited.clone();
            let mut probe = Vec::new();
            bfs(start, &mut scratch, &mut probe);
            let last = *probe.last().expect("start is visited");
            if last == start {
                break;
            }
            start = last;
        }
        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

fn permuted(a: &SparseMatrix, perm: &[usize]) -> SparseMatrix {
    let mut inverse = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    let rows = perm
        .iter()
        .map(|&old| a.row_entries(old).map(|(c, v)| (inverse[c], v)).collect())
        .collect();
    SparseMatrix::from_rows(a.cols(), rows)
}

/// `P A Pᵀ = L Lᵀ` with `L` in compressed columns, diagonal first in each
/// column. Only the lower triangle of the permuted matrix is read.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    perm: Option<Vec<usize>>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl SparseCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self, LinalgError> {
        Self::factor_with(a, Ordering::default())
    }

    pub fn factor_with(a: &SparseMatrix, ordering: Ordering) -> Result<Self, LinalgError> {
        check_square(a, None)?;
        match ordering {
            Ordering::Natural => Self::factor_natural(a),
            Ordering::ReverseCuthillMcKee => {
                let perm = reverse_cuthill_mckee(a);
                let mut f = Self::factor_natural(&permuted(a, &perm)).map_err(|e| match e {
                    LinalgError::NotPositiveDefinite { row, pivot } => {
                        LinalgError::NotPositiveDefinite { row: perm[row], pivot }
                    }
                    other => other,
                })?;
                f.perm = Some(perm);
                Ok(f)
            }
        }
    }

    fn factor_natural(a: &SparseMatrix) -> Result<Self, LinalgError> {
        let n = a.rows();
        let lower = |k: usize| a.row_entries(k).filter(move |&(i, _)| i < k);

        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for (mut i, _) in lower(k) {
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        let mut mark = vec![NONE; n];
        let mut path = Vec::new();
        let mut pattern = Vec::new();
        // Row pattern of L, children before parents.
        let mut reach = |k: usize, mark: &mut Vec<usize>, pattern: &mut Vec<usize>| {
            pattern.clear();
            mark[k] = k;
            for (i, _) in lower(k) {
                let mut i = i;
                path.clear();
                while mark[i] != k {
                    path.push(i);
                    mark[i] = k;
                    i = parent[i];
                }
                pattern.splice(0..0, path.iter().copied());
            }
        };

        let mut counts = vec![1usize; n];
        for k in 0..n {
            reach(k, &mut mark, &mut pattern);
            for &i in &pattern {
                counts[i] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next: Vec<usize> = col_ptr[..n].iter().map(|p| p + 1).collect();

        mark.fill(NONE);
        let mut x = vec![0.0; n];
        for k in 0..n {
            reach(k, &mut mark, &mut pattern);
            let mut diag = 0.0;
            for (i, v) in a.row_entries(k) {
                if i < k {
                    x[i] = v;
                } else if i == k {
                    diag = v;
                }
            }
            for &i in &pattern {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..next[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                diag -= lki * lki;
                let p = next[i];
                next[i] += 1;
                row_idx[p] = k;
                values[p] = lki;
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { row: k, pivot: diag });
            }
            row_idx[col_ptr[k]] = k;
            values[col_ptr[k]] = diag.sqrt();
        }
        Ok(Self {
            n,
            perm: None,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L`.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch(format!(
                "right-hand side has length {}, factor has order {}",
                b.len(),
                self.n
            )));
        }
        let mut x = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect(),
            None => b.to_vec(),
        };
        for j in 0..self.n {
            let start = self.col_ptr[j];
            x[j] /= self.values[start];
            let xj = x[j];
            for p in start + 1..self.col_ptr[j + 1] {
                x[self.row_idx[p]] -= self.values[p] * xj;
            }
        }
        for j in (0..self.n).rev() {
            let start = self.col_ptr[j];
            let mut s = x[j];
            for p in start + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * x[self.row_idx[p]];
            }
            x[j] = s / self.values[start];
        }
        if let Some(p) = &self.perm {
            let mut out = vec![0.0; self.n];
            for (new, &old) in p.iter().enumerate() {
                out[old] = x[new];
            }
            x = out;
        }
        Ok(x)
    }
}

/// Factor and solve in one call.
pub fn cholesky_solve(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolverReport), LinalgError> {
    check_square(a, Some(b.len()))?;
    let start = Instant::now();
    let x = SparseCholesky::factor(a)?.solve(b)?;
    let seconds = start.elapsed().as_secs_f64();
    let report = SolverReport {
        iterations: 0,
        relative_residual: relative_residual(a, &x, b),
        seconds,
        converged: true,
    };
    Ok((x, report))
}

/// Conjugate gradients from `x₀ = 0`, stopping when `‖r‖ ≤ tol·‖b‖`.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], options: CgOptions) -> Result<(Vec<f64>, SolverReport), LinalgError> {
    check_square(a, Some(b.len()))?;
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let nb = norm2(b);
    if nb == 0.0 {
        let report = SolverReport {
            iterations: 0,
            relative_residual: 0.0,
            seconds: start.elapsed().as_secs_f64(),
            converged: true,
        };
        return Ok((x, report));
    }
    let inv_diag: Option<Vec<f64>> = options.jacobi.then(|| {
        a.diagonal()
            .iter()
            .map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 })
            .collect()
    });
    let precondition = |r: &[f64]| match &inv_diag {
        Some(m) => r.iter().zip(m).map(|(r, m)| r * m).collect(),
        None => r.to_vec(),
    };

    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        let ap = a.mul_vec(&p).expect("shape checked");
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LinalgError::NotPositiveDefinite {
                row: iterations,
                pivot: pap,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        res = norm2(&r) / nb;
        if res <= options.tolerance {
            break;
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let report = SolverReport {
        iterations,
        relative_residual: res,
        seconds: start.elapsed().as_secs_f64(),
        converged: res <= options.tolerance,
    };
    if report.converged {
        Ok((x, report))
    } else {
        Err(LinalgError::NotConverged { x, report })
    }
}
