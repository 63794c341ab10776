//! Hat-function algebra between consecutive levels.
//!
//! * `B_j` (refinement): coarse hats written in fine hats.
//! * `D_j` (stiffness): `⟨φ_m, φ_n⟩_s` on one level.
//! * `G_j` (cross-level Gram): `⟨φ^j_m, φ^{j+1}_n⟩_s`.
//!
//! On the Type-1 mesh every one of these is a fixed stencil whose entries are
//! multiples of 1/2, so all matrices are exact in `f64`.

pub use crate::sparse::SparseMatrix;

use crate::mesh::{num_interior, GridIndex};

/// Two-scale stencil: offsets from `(2i, 2k)` and weights.
const REFINEMENT_STENCIL: [(i64, i64, f64); 7] = [
    (0, 0, 1.0),
    (-1, 0, 0.5),
    (1, 0, 0.5),
    (0, -1, 0.5),
    (0, 1, 0.5),
    (-1, -1, 0.5),
    (1, 1, 0.5),
];

/// Same-level stiffness stencil. Diagonal-direction neighbours
/// `(±1, ±1)` share two triangles but have orthogonal gradients there.
const STIFFNESS_STENCIL: [(i64, i64, f64); 5] = [(0, 0, 4.0), (-1, 0, -1.0), (1, 0, -1.0), (0, -1, -1.0), (0, 1, -1.0)];

/// `⟨φ^j_{ik}, φ^{j+1}_{2i+p, 2k+q}⟩_s` for offsets `(p, q)`; every offset not
/// listed (including `(±2, ±2)`) gives 0.
const CROSS_LEVEL_STENCIL: [(i64, i64, f64); 17] = [
    (0, 0, 2.0),
    (-1, 0, 0.5),
    (0, -1, 0.5),
    (1, 0, 0.5),
    (0, 1, 0.5),
    (-1, -1, 1.0),
    (1, 1, 1.0),
    (-2, 0, -0.5),
    (2, 0, -0.5),
    (0, -2, -0.5),
    (0, 2, -0.5),
    (-2, -1, -0.5),
    (-1, 1, -1.0),
    (1, 2, -0.5),
    (2, 1, -0.5),
    (1, -1, -1.0),
    (-1, -2, -0.5),
];

fn dilated_row(g: GridIndex, stencil: &[(i64, i64, f64)]) -> Vec<(GridIndex, f64)> {
    let fine = g.level + 1;
    let (ci, ck) = (2 * g.i as i64, 2 * g.k as i64);
    stencil
        .iter()
        .filter_map(|&(di, dk, v)| GridIndex::checked(fine, ci + di, ck + dk).map(|f| (f, v)))
        .collect()
}

/// Coefficients of `φ^j_{ik}` in the level-`j+1` hats. Entries falling on
/// the boundary are dropped.
pub fn refinement_row(g: GridIndex) -> Vec<(GridIndex, f64)> {
    dilated_row(g, &REFINEMENT_STENCIL)
}

fn stencil_matrix<F>(rows_level: u32, cols_level: u32, row: F) -> SparseMatrix
where
    F: Fn(GridIndex) -> Vec<(GridIndex, f64)>,
{
    let rows = GridIndex::all(rows_level)
        .map(|g| row(g).into_iter().map(|(f, v)| (f.linear_index(), v)).collect())
        .collect();
    SparseMatrix::from_rows(num_interior(cols_level), rows)
}

/// `B_j`, shape `N_j × N_{j+1}`.
pub fn refinement_matrix(level: u32) -> SparseMatrix {
    stencil_matrix(level, level + 1, refinement_row)
}

/// `D_j`, shape `N_j × N_j`.
pub fn stiffness_matrix(level: u32) -> SparseMatrix {
    stencil_matrix(level, level, |g| {
        STIFFNESS_STENCIL
            .iter()
            .filter_map(|&(di, dk, v)| GridIndex::checked(level, g.i as i64 + di, g.k as i64 + dk).map(|n| (n, v)))
            .collect()
    })
}

/// One row of `G_j`: the stiffness pairing of a coarse hat with every fine hat.
pub fn cross_level_row(g: GridIndex) -> Vec<(GridIndex, f64)> {
    dilated_row(g, &CROSS_LEVEL_STENCIL)
}

/// `G_j`, shape `N_j × N_{j+1}`; equals `B_j D_{j+1}`.
pub fn cross_level_gram(level: u32) -> SparseMatrix {
    stencil_matrix(level, level + 1, cross_level_row)
}
