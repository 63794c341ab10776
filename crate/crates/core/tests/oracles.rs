//! Checks against independent dense or geometric computations.

use nalgebra::DMatrix;
use prewavelet_core::assembly::{refinement_matrix, stiffness_matrix};
use prewavelet_core::bench::builtin_problems;
use prewavelet_core::mesh::{num_interior, triangles, GridIndex};
use prewavelet_core::prewavelet::{wavelet_matrix, WaveletBasis};
use prewavelet_core::quadrature::{integrate, load_vector, wavelet_load, QuadratureRule};
use prewavelet_core::solver::{fem_solve, h1_error, Hierarchy, LoadLadder, SolveMethod};
use prewavelet_core::sparse::SparseMatrix;

fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.rows(), m.cols());
    for (r, c, v) in m.iter() {
        out[(r, c)] = v;
    }
    out
}

fn hat(g: GridIndex, x: f64, y: f64) -> f64 {
    let n = (1u64 << g.level) as f64;
    let (s, t) = (x * n - g.i as f64, y * n - g.k as f64);
    (1.0 - s.abs().max(t.abs()).max((s - t).abs())).max(0.0)
}

#[test]
fn wavelet_matrix_has_full_rank() {
    for level in 1..=4 {
        let c = dense(&wavelet_matrix(level).unwrap());
        let expected = num_interior(level + 1) - num_interior(level);
        assert_eq!(c.nrows(), expected);
        assert_eq!(c.rank(1e-9), expected, "level {level}");
    }
}

#[test]
fn stacked_basis_is_invertible() {
    for level in 1..=4 {
        let b = refinement_matrix(level);
        let c = wavelet_matrix(level).unwrap();
        let stacked = dense(&b.vstack(&c).unwrap());
        assert!(stacked.is_square());
        assert_eq!(stacked.rank(1e-9), num_interior(level + 1), "level {level}");
    }
}

#[test]
fn wavelet_gram_is_positive_definite() {
    for level in 1..=3 {
        let e = dense(&prewavelet_core::prewavelet::wavelet_gram(level).unwrap());
        let min = e.symmetric_eigenvalues().min();
        assert!(min > 1e-6, "level {level}: {min}");
    }
}

#[test]
fn wavelet_load_is_geometric_quadrature() {
    let g = |x: f64, y: f64| (3.0 * x).sin() + x * y * y;
    let rule = QuadratureRule::gauss7();
    for level in 1..=3 {
        let basis = WaveletBasis::build(level).unwrap();
        let fast = wavelet_load(&basis.matrix(), &load_vector(level + 1, g, &rule)).unwrap();
        let fine = triangles(level + 1);
        for (w, value) in basis.wavelets.iter().zip(&fast) {
            let psi = |x: f64, y: f64| w.stencil.iter().map(|(v, c)| c * hat(*v, x, y)).sum::<f64>();
            let direct: f64 = fine
                .iter()
                .map(|t| integrate(t, |x, y| g(x, y) * psi(x, y), &rule))
                .sum();
            assert!((direct - value).abs() < 1e-12, "level {level}");
        }
    }
}

#[test]
fn two_level_identity_for_unit_load() {
    let rule = QuadratureRule::mid3();
    let h = Hierarchy::new(2).unwrap();
    let f2 = load_vector(2, |_, _| 1.0, &rule);
    let (a, _) = fem_solve(1, &load_vector(1, |_, _| 1.0, &rule), SolveMethod::Direct).unwrap();
    let (c, _) = fem_solve(2, &f2, SolveMethod::Direct).unwrap();
    let (b, report) = h.wavelet_solve(1, &f2, SolveMethod::Direct).unwrap();
    assert!(report.relative_residual <= 1e-10);
    let ops = h.operators(1).unwrap();
    let lhs = ops.wavelets.transpose_mul_vec(&b).unwrap();
    let coarse = ops.refinement.transpose_mul_vec(&a).unwrap();
    for ((l, c), p) in lhs.iter().zip(&c).zip(&coarse) {
        assert!((l - (c - p)).abs() < 1e-10);
    }
    let (zero, _) = h.wavelet_solve(1, &[0.0; 9], SolveMethod::Direct).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
}

#[test]
fn corrections_are_stiffness_orthogonal_to_coarse_space() {
    let rule = QuadratureRule::mid3();
    for p in builtin_problems() {
        let h = Hierarchy::new(5).unwrap();
        let loads = LoadLadder::new(5, p.rhs, &rule);
        let ml = h.multilevel_solve(1, &loads, SolveMethod::Direct).unwrap();
        for j in 1..5 {
            let a = ml.coefficients(&h, j).unwrap();
            let c = ml.coefficients(&h, j + 1).unwrap();
            let up = refinement_matrix(j).transpose_mul_vec(&a).unwrap();
            let diff: Vec<f64> = c.iter().zip(&up).map(|(c, u)| c - u).collect();
            let bd = refinement_matrix(j).matmul(&stiffness_matrix(j + 1)).unwrap();
            let r = bd.mul_vec(&diff).unwrap();
            let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(r.iter().all(|v| v.abs() <= 1e-9 * scale), "{} level {j}", p.name);
        }
    }
}

#[test]
fn h1_error_decreases_with_level() {
    let rule = QuadratureRule::mid3();
    for p in builtin_problems() {
        let errors: Vec<f64> = (1..=6)
            .map(|j| {
                let (a, _) = fem_solve(j, &load_vector(j, p.rhs, &rule), SolveMethod::Direct).unwrap();
                h1_error(j, &a, p.grad)
            })
            .collect();
        assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{}: {errors:?}", p.name);
    }
}

#[test]
fn galerkin_reproduces_members_of_the_space() {
    // u = φ^2_{2,2}: its load is D_2 e, so the Galerkin solution is e exactly.
    let g = GridIndex::new(2, 2, 2).unwrap();
    let d = stiffness_matrix(2);
    let mut e = vec![0.0; 9];
    e[g.linear_index()] = 1.0;
    let load = d.mul_vec(&e).unwrap();
    let (a, _) = fem_solve(2, &load, SolveMethod::Direct).unwrap();
    let grad = |x: f64, y: f64| {
        // Gradient of 1 − max(|s|, |t|, |s − t|) on the active piece.
        let n = 4.0;
        let (s, t) = (x * n - 2.0, y * n - 2.0);
        let terms = [
            (s.abs(), (s.signum(), 0.0)),
            (t.abs(), (0.0, t.signum())),
            ((s - t).abs(), ((s - t).signum(), -(s - t).signum())),
        ];
        let (m, (dx, dy)) = terms.into_iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
        if m >= 1.0 {
            (0.0, 0.0)
        } else {
            (-n * dx, -n * dy)
        }
    };
    assert!(h1_error(2, &a, grad) < 1e-10);
}
