//! Dyadic Type-1 triangulation of the unit square.
//!
//! Level `j` splits `[0,1]²` into `2^j × 2^j` cells, each cut by its
//! down-left to up-right diagonal. Interior vertices `(i/2^j, k/2^j)` with
//! `1 ≤ i, k ≤ 2^j − 1` carry the nodal hat functions; they are numbered
//! row-major by `(k, i)`.
//!
//! Geometry is kept in integer grid units so that areas and incidences are
//! exact; floating point only appears when a caller asks for coordinates.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeshError {
    #[error("level must be at least 1 (got {0})")]
    InvalidLevel(u32),
    #[error("vertex ({i}, {k}) is not interior at level {level} (valid range 1..={max})")]
    IndexOutOfRange { level: u32, i: u32, k: u32, max: u32 },
    #[error("ordinal {ordinal} out of range for level {level} ({count} interior vertices)")]
    OrdinalOutOfRange { level: u32, ordinal: usize, count: usize },
}

/// Largest supported level. `4^MAX_LEVEL` interior vertices still fit
/// comfortably in memory for the sparse structures used here.
pub const MAX_LEVEL: u32 = 12;

/// Number of interior vertices along one axis, `2^j − 1`.
#[inline]
pub fn side(level: u32) -> u32 {
    (1u32 << level) - 1
}

/// `N_j = (2^j − 1)²`, the dimension of the level-`j` hat space.
#[inline]
pub fn num_interior(level: u32) -> usize {
    let s = side(level) as usize;
    s * s
}

/// Mesh width `2^{−j}`.
#[inline]
pub fn mesh_width(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

fn check_level(level: u32) -> Result<(), MeshError> {
    if level == 0 || level > MAX_LEVEL {
        return Err(MeshError::InvalidLevel(level));
    }
    Ok(())
}

/// An interior vertex of the level-`j` triangulation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub level: u32,
    pub i: u32,
    pub k: u32,
}

impl fmt::Debug for GridIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})@{}", self.i, self.k, self.level)
    }
}

impl GridIndex {
    pub fn new(level: u32, i: u32, k: u32) -> Result<Self, MeshError> {
        check_level(level)?;
        let max = side(level);
        if i == 0 || k == 0 || i > max || k > max {
            return Err(MeshError::IndexOutOfRange { level, i, k, max });
        }
        Ok(Self { level, i, k })
    }

    /// Builds an index from signed coordinates, returning `None` for
    /// anything on or outside the boundary.
    pub fn checked(level: u32, i: i64, k: i64) -> Option<Self> {
        let max = side(level) as i64;
        if (1..=max).contains(&i) && (1..=max).contains(&k) {
            Some(Self {
                level,
                i: i as u32,
                k: k as u32,
            })
        } else {
            None
        }
    }

    /// Row-major ordinal `(k−1)(2^j−1) + (i−1)`.
    #[inline]
    pub fn linear_index(&self) -> usize {
        let s = side(self.level) as usize;
        (self.k as usize - 1) * s + (self.i as usize - 1)
    }

    pub fn from_linear(level: u32, ordinal: usize) -> Result<Self, MeshError> {
        check_level(level)?;
        let count = num_interior(level);
        if ordinal >= count {
            return Err(MeshError::OrdinalOutOfRange { level, ordinal, count });
        }
        let s = side(level) as usize;
        Ok(Self {
            level,
            i: (ordinal % s) as u32 + 1,
            k: (ordinal / s) as u32 + 1,
        })
    }

    pub fn coords(&self) -> (f64, f64) {
        let h = mesh_width(self.level);
        (self.i as f64 * h, self.k as f64 * h)
    }

    /// All interior vertices of a level in ordinal order.
    pub fn all(level: u32) -> impl Iterator<Item = GridIndex> {
        let s = side(level);
        (1..=s).flat_map(move |k| (1..=s).map(move |i| GridIndex { level, i, k }))
    }
}

/// Free-function form of [`GridIndex::linear_index`].
pub fn linear_index(g: GridIndex) -> usize {
    g.linear_index()
}

/// Free-function form of [`GridIndex::from_linear`].
pub fn inverse_index(level: u32, ordinal: usize) -> Result<GridIndex, MeshError> {
    GridIndex::from_linear(level, ordinal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Below the diagonal: `(a,b), (a+1,b), (a+1,b+1)`.
    Lower,
    /// Above the diagonal: `(a,b), (a+1,b+1), (a,b+1)`.
    Upper,
}

/// A triangle of the level-`j` mesh, stored as the cell `(a, b)` it lives in
/// (lower-left corner in grid units, `0 ≤ a, b < 2^j`) plus its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triangle {
    pub level: u32,
    pub cell: (u32, u32),
    pub orientation: Orientation,
}

impl Triangle {
    /// Vertices in integer grid units, counter-clockwise.
    pub fn grid_vertices(&self) -> [(u32, u32); 3] {
        let (a, b) = self.cell;
        match self.orientation {
            Orientation::Lower => [(a, b), (a + 1, b), (a + 1, b + 1)],
            Orientation::Upper => [(a, b), (a + 1, b + 1), (a, b + 1)],
        }
    }

    pub fn vertices(&self) -> [(f64, f64); 3] {
        let h = mesh_width(self.level);
        self.grid_vertices().map(|(a, b)| (a as f64 * h, b as f64 * h))
    }

    /// `2^{−(2j+1)}`, exact in binary floating point.
    pub fn area(&self) -> f64 {
        (-(2.0 * self.level as f64 + 1.0)).exp2()
    }

    /// Twice the area in units of the level-`j` cell, always 1; kept as an
    /// integer check that the vertices are not degenerate.
    pub fn doubled_grid_area(&self) -> i64 {
        let [(x0, y0), (x1, y1), (x2, y2)] = self.grid_vertices().map(|(a, b)| (a as i64, b as i64));
        (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    }

    /// Interior-vertex index of each corner, `None` where the corner lies on
    /// the boundary of the square.
    pub fn vertex_indices(&self) -> [Option<GridIndex>; 3] {
        self.grid_vertices()
            .map(|(a, b)| GridIndex::checked(self.level, a as i64, b as i64))
    }

    pub fn has_vertex(&self, g: GridIndex) -> bool {
        g.level == self.level && self.grid_vertices().contains(&(g.i, g.k))
    }

    /// Gradients of the three barycentric coordinates (constant on the
    /// triangle), in the vertex order of [`grid_vertices`](Self::grid_vertices).
    pub fn barycentric_gradients(&self) -> [(f64, f64); 3] {
        let n = (1u64 << self.level) as f64;
        match self.orientation {
            Orientation::Lower => [(-n, 0.0), (n, -n), (0.0, n)],
            Orientation::Upper => [(0.0, -n), (n, 0.0), (-n, n)],
        }
    }

    /// Cartesian point for barycentric weights over [`vertices`](Self::vertices).
    pub fn point(&self, bary: [f64; 3]) -> (f64, f64) {
        let v = self.vertices();
        (
            bary[0] * v[0].0 + bary[1] * v[1].0 + bary[2] * v[2].0,
            bary[0] * v[0].1 + bary[1] * v[1].1 + bary[2] * v[2].1,
        )
    }
}

/// All `2·4^j` triangles, cell-major with the lower triangle first.
pub fn triangles(level: u32) -> Vec<Triangle> {
    let n = 1u32 << level;
    let mut out = Vec::with_capacity(2 * (n as usize) * (n as usize));
    for b in 0..n {
        for a in 0..n {
            for orientation in [Orientation::Lower, Orientation::Upper] {
                out.push(Triangle {
                    level,
                    cell: (a, b),
                    orientation,
                });
            }
        }
    }
    out
}

/// The six triangles of the hexagonal support of the hat at `g`.
pub fn support_triangles(g: GridIndex) -> Vec<Triangle> {
    use Orientation::*;
    let (i, k) = (g.i, g.k);
    let t = |a: u32, b: u32, orientation| Triangle {
        level: g.level,
        cell: (a, b),
        orientation,
    };
    vec![
        t(i - 1, k - 1, Lower),
        t(i - 1, k - 1, Upper),
        t(i, k - 1, Upper),
        t(i, k, Lower),
        t(i, k, Upper),
        t(i - 1, k, Lower),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinal_examples() {
        assert_eq!(GridIndex::new(2, 1, 1).unwrap().linear_index(), 0);
        assert_eq!(GridIndex::new(2, 3, 2).unwrap().linear_index(), 5);
        assert_eq!(inverse_index(2, 8).unwrap(), GridIndex::new(2, 3, 3).unwrap());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            GridIndex::new(2, 0, 1),
            Err(MeshError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            GridIndex::new(2, 1, 4),
            Err(MeshError::IndexOutOfRange { .. })
        ));
        assert!(matches!(GridIndex::new(0, 1, 1), Err(MeshError::InvalidLevel(0))));
        assert!(matches!(inverse_index(2, 9), Err(MeshError::OrdinalOutOfRange { .. })));
    }

    #[test]
    fn ordinal_roundtrip() {
        for level in 1..=6 {
            for ord in 0..num_interior(level) {
                assert_eq!(inverse_index(level, ord).unwrap().linear_index(), ord);
            }
        }
    }

    #[test]
    fn triangle_counts_and_area() {
        assert_eq!(triangles(1).len(), 8);
        assert_eq!(triangles(2).len(), 32);
        for level in 1..=6 {
            let tris = triangles(level);
            assert_eq!(tris.len(), 2 * 4usize.pow(level));
            let total: f64 = tris.iter().map(Triangle::area).sum();
            assert_eq!(total, 1.0);
            assert!(tris.iter().all(|t| t.doubled_grid_area() == 1));
        }
    }

    #[test]
    fn support_of_first_vertex() {
        let g = GridIndex::new(2, 1, 1).unwrap();
        let sup = support_triangles(g);
        assert_eq!(sup.len(), 6);
        let area: f64 = sup.iter().map(Triangle::area).sum();
        assert_eq!(area, 6.0 * (-5f64).exp2());
        assert!(sup.iter().all(|t| t.has_vertex(g)));
    }

    #[test]
    fn level_one_support_misses_two_corners() {
        let g = GridIndex::new(1, 1, 1).unwrap();
        let brute: Vec<Triangle> = triangles(1).into_iter().filter(|t| t.has_vertex(g)).collect();
        let sup = support_triangles(g);
        assert_eq!(brute.len(), 6);
        for t in &brute {
            assert!(sup.contains(t));
        }
        let missing: Vec<_> = triangles(1).into_iter().filter(|t| !sup.contains(t)).collect();
        assert_eq!(missing.len(), 2);
        // The two excluded triangles sit in the top-left and bottom-right cells.
        let cells: Vec<_> = missing.iter().map(|t| t.cell).collect();
        assert!(cells.contains(&(0, 1)) && cells.contains(&(1, 0)));
    }

    #[test]
    fn every_interior_vertex_touches_six_triangles() {
        for level in 1..=4 {
            let tris = triangles(level);
            let mut count = vec![0usize; num_interior(level)];
            for t in &tris {
                for g in t.vertex_indices().into_iter().flatten() {
                    count[g.linear_index()] += 1;
                }
            }
            assert!(count.iter().all(|&c| c == 6));
            for g in GridIndex::all(level) {
                let brute: Vec<_> = tris.iter().filter(|t| t.has_vertex(g)).copied().collect();
                let mut sup = support_triangles(g);
                sup.sort_by_key(|t| (t.cell, t.orientation as u8));
                let mut brute_sorted = brute.clone();
                brute_sorted.sort_by_key(|t| (t.cell, t.orientation as u8));
                assert_eq!(sup, brute_sorted);
            }
        }
    }

    #[test]
    fn barycentric_gradients_sum_to_zero_and_reproduce_vertices() {
        for t in triangles(3) {
            let g = t.barycentric_gradients();
            let sx: f64 = g.iter().map(|p| p.0).sum();
            let sy: f64 = g.iter().map(|p| p.1).sum();
            assert_eq!((sx, sy), (0.0, 0.0));
            let v = t.vertices();
            // λ_a(v_b) = δ_ab: check differences along edges.
            for a in 0..3 {
                for b in 0..3 {
                    let d = (v[b].0 - v[0].0, v[b].1 - v[0].1);
                    let delta = g[a].0 * d.0 + g[a].1 * d.1;
                    let expected = (a == b) as i32 as f64 - (a == 0) as i32 as f64;
                    assert!((delta - expected).abs() < 1e-12);
                }
            }
        }
    }
}
