//! Multilevel solver for `−Δu = g` on the unit square with Dirichlet data,
//! built on H¹-orthogonal prewavelets over the Type-1 triangulation.
//!
//! The level-`J` Galerkin solution is reached either directly (`D_J a = F_J`)
//! or incrementally: solve on level 1, then add one prewavelet correction per
//! level, each an independent system `E_j b_j = C_j F_{j+1}`. Both paths give
//! the same coefficients; see [`solver`].

pub mod assembly;
pub mod bench;
pub mod echelon;
pub mod homogenize;
pub mod linalg;
pub mod mesh;
pub mod prewavelet;
pub mod quadrature;
pub mod solver;
pub mod sparse;
