//! Quadrature on mesh triangles and the load vectors `⟨g, φ⟩`, `⟨g, ψ⟩`.

use std::fmt;
use std::str::FromStr;

use crate::mesh::{mesh_width, num_interior, triangles, Triangle};
use crate::sparse::{SparseError, SparseMatrix};

/// Symmetric rule in barycentric coordinates; weights sum to 1 and are
/// scaled by the triangle area when applied.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: u32,
}

impl QuadratureRule {
    /// Edge-midpoint rule, degree 2.
    pub fn mid3() -> Self {
        Self {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Seven-point rule, degree 5.
    pub fn gauss7() -> Self {
        let s = 15f64.sqrt();
        let (a1, b1) = ((6.0 - s) / 21.0, (9.0 + 2.0 * s) / 21.0);
        let (a2, b2) = ((6.0 + s) / 21.0, (9.0 - 2.0 * s) / 21.0);
        let (w1, w2) = ((155.0 - s) / 1200.0, (155.0 + s) / 1200.0);
        let third = 1.0 / 3.0;
        Self {
            points: vec![
                [third, third, third],
                [a1, a1, b1],
                [a1, b1, a1],
                [b1, a1, a1],
                [a2, a2, b2],
                [a2, b2, a2],
                [b2, a2, a2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// User-facing rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadRule {
    #[default]
    Mid3,
    Gauss7,
}

impl QuadRule {
    pub fn rule(self) -> QuadratureRule {
        match self {
            QuadRule::Mid3 => QuadratureRule::mid3(),
            QuadRule::Gauss7 => QuadratureRule::gauss7(),
        }
    }
}

impl FromStr for QuadRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mid3" => Ok(QuadRule::Mid3),
            "gauss7" => Ok(QuadRule::Gauss7),
            other => Err(format!("unknown quadrature rule '{other}' (expected mid3 or gauss7)")),
        }
    }
}

impl fmt::Display for QuadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuadRule::Mid3 => "mid3",
            QuadRule::Gauss7 => "gauss7",
        })
    }
}

pub fn integrate<F: Fn(f64, f64) -> f64>(tri: &Triangle, f: F, rule: &QuadratureRule) -> f64 {
    let sum: f64 = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(b, w)| {
            let (x, y) = tri.point(*b);
            w * f(x, y)
        })
        .sum();
    tri.area() * sum
}

/// `F_m = ⟨g, φ^j_m⟩` for every interior hat, accumulated triangle by
/// triangle in mesh order.
pub fn load_vector<F: Fn(f64, f64) -> f64>(level: u32, g: F, rule: &QuadratureRule) -> Vec<f64> {
    let mut out = vec![0.0; num_interior(level)];
    for tri in triangles(level) {
        let idx = tri.vertex_indices();
        if idx.iter().all(Option::is_none) {
            continue;
        }
        let area = tri.area();
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let (x, y) = tri.point(*b);
            let gw = area * w * g(x, y);
            for (slot, lambda) in idx.iter().zip(b) {
                if let Some(v) = slot {
                    out[v.linear_index()] += gw * lambda;
                }
            }
        }
    }
    out
}

/// `C_j F_{j+1}`: wavelet loads from fine hat loads.
pub fn wavelet_load(wavelets: &SparseMatrix, fine_load: &[f64]) -> Result<Vec<f64>, SparseError> {
    wavelets.mul_vec(fine_load)
}

/// Right-hand side given by nodal samples on a level-`L` grid (boundary
/// included), evaluated as the piecewise-linear interpolant. Anything finer
/// than level `L` in the true data is lost.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalTable {
    pub level: u32,
    /// `(2^L + 1)²` samples, row-major by `(k, i)` from `(0, 0)`.
    pub values: Vec<f64>,
}

impl NodalTable {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self, String> {
        let n = (1usize << level) + 1;
        if values.len() != n * n {
            return Err(format!(
                "tabulated level {level} needs {} values, got {}",
                n * n,
                values.len()
            ));
        }
        Ok(Self { level, values })
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(level: u32, f: F) -> Self {
        let n = 1usize << level;
        let h = mesh_width(level);
        let values = (0..=n)
            .flat_map(|k| (0..=n).map(move |i| (i, k)))
            .map(|(i, k)| f(i as f64 * h, k as f64 * h))
            .collect();
        Self { level, values }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let n = 1usize << self.level;
        let nf = n as f64;
        let a = ((x * nf).floor().max(0.0) as usize).min(n - 1);
        let b = ((y * nf).floor().max(0.0) as usize).min(n - 1);
        let s = x * nf - a as f64;
        let t = y * nf - b as f64;
        let v = |i: usize, k: usize| self.values[k * (n + 1) + i];
        if t <= s {
            v(a, b) + s * (v(a + 1, b) - v(a, b)) + t * (v(a + 1, b + 1) - v(a + 1, b))
        } else {
            v(a, b) + t * (v(a, b + 1) - v(a, b)) + s * (v(a + 1, b + 1) - v(a, b + 1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{GridIndex, Orientation};
    use std::f64::consts::PI;

    fn tri(level: u32, a: u32, b: u32, o: Orientation) -> Triangle {
        Triangle {
            level,
            cell: (a, b),
            orientation: o,
        }
    }

    /// Closed form of `∫_T x²`.
    fn x_squared_exact(t: &Triangle) -> f64 {
        let v = t.vertices();
        let (x1, x2, x3) = (v[0].0, v[1].0, v[2].0);
        t.area() / 6.0 * (x1 * x1 + x2 * x2 + x3 * x3 + x1 * x2 + x2 * x3 + x3 * x1)
    }

    /// Integrates over a `4^depth` uniform subdivision with the seven-point
    /// rule; independent of the load-vector accumulation.
    fn subdivided<F: Fn(f64, f64) -> f64>(t: &Triangle, f: &F, depth: u32) -> f64 {
        let v = t.vertices();
        let rule = QuadratureRule::gauss7();
        let n = 1usize << depth;
        let mut total = 0.0;
        let p = |i: usize, k: usize| {
            let (s, r) = (i as f64 / n as f64, k as f64 / n as f64);
            (
                v[0].0 + s * (v[1].0 - v[0].0) + r * (v[2].0 - v[0].0),
                v[0].1 + s * (v[1].1 - v[0].1) + r * (v[2].1 - v[0].1),
            )
        };
        let area = t.area() / (n * n) as f64;
        let mut sub = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
            for (bc, w) in rule.points.iter().zip(&rule.weights) {
                let x = bc[0] * a.0 + bc[1] * b.0 + bc[2] * c.0;
                let y = bc[0] * a.1 + bc[1] * b.1 + bc[2] * c.1;
                total += area * w * f(x, y);
            }
        };
        for k in 0..n {
            for i in 0..n - k {
                sub(p(i, k), p(i + 1, k), p(i, k + 1));
                if i + k + 1 < n {
                    sub(p(i + 1, k), p(i + 1, k + 1), p(i, k + 1));
                }
            }
        }
        total
    }

    /// Hat function evaluated geometrically, for oracle integrands.
    fn hat(g: GridIndex) -> impl Fn(f64, f64) -> f64 {
        let n = (1u64 << g.level) as f64;
        let (ci, ck) = (g.i as f64, g.k as f64);
        move |x, y| {
            let (s, t) = (x * n - ci, y * n - ck);
            // Type-1 hat: max(0, 1 - max(|s|, |t|, |s - t|)).
            (1.0 - s.abs().max(t.abs()).max((s - t).abs())).max(0.0)
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for r in [QuadratureRule::mid3(), QuadratureRule::gauss7()] {
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(r.weights.iter().all(|w| *w > 0.0));
            for p in &r.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_gives_area() {
        for level in 1..=4 {
            for t in triangles(level) {
                assert_eq!(integrate(&t, |_, _| 1.0, &QuadratureRule::mid3()), t.area());
            }
        }
    }

    #[test]
    fn linear_on_reference_triangle() {
        let t = tri(1, 0, 0, Orientation::Lower);
        let v = integrate(&t, |x, _| x, &QuadratureRule::mid3());
        assert!((v - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn quadratics_are_exact() {
        for t in triangles(2) {
            let exact = x_squared_exact(&t);
            for r in [QuadratureRule::mid3(), QuadratureRule::gauss7()] {
                assert!((integrate(&t, |x, _| x * x, &r) - exact).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gauss7_is_degree_five() {
        let f = |x: f64, y: f64| x.powi(5) - 3.0 * x * x * y.powi(3) + y.powi(4) + 2.0;
        for t in triangles(1) {
            let reference = subdivided(&t, &f, 4);
            assert!((integrate(&t, f, &QuadratureRule::gauss7()) - reference).abs() < 1e-15);
        }
    }

    #[test]
    fn hat_oracle_matches_barycentrics() {
        let g = GridIndex::new(2, 2, 1).unwrap();
        let h = hat(g);
        assert_eq!(h(0.5, 0.25), 1.0);
        assert_eq!(h(0.75, 0.5), 0.0);
        assert!((h(0.625, 0.375) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unit_load() {
        for level in 1..=5 {
            let f = load_vector(level, |_, _| 1.0, &QuadratureRule::mid3());
            let expected = 4f64.powi(-(level as i32));
            assert!(f.iter().all(|v| (v - expected).abs() < 1e-16));
        }
        assert!(load_vector(3, |_, _| 0.0, &QuadratureRule::mid3())
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn load_matches_subdivided_oracle_within_rule_degree() {
        // g·φ stays within each rule's exact degree.
        let linear = |x: f64, y: f64| 1.0 + 2.0 * x - 3.0 * y;
        let cubic = |x: f64, y: f64| x * x * y - y * y + 0.5 * x;
        for level in 1..=5 {
            for (rule, g) in [
                (QuadratureRule::mid3(), &linear as &dyn Fn(f64, f64) -> f64),
                (QuadratureRule::gauss7(), &cubic as &dyn Fn(f64, f64) -> f64),
            ] {
                let f = load_vector(level, g, &rule);
                for v in GridIndex::all(level).step_by(7) {
                    let h = hat(v);
                    let oracle: f64 = crate::mesh::support_triangles(v)
                        .iter()
                        .map(|t| subdivided(t, &|x, y| g(x, y) * h(x, y), 2))
                        .sum();
                    assert!((f[v.linear_index()] - oracle).abs() < 1e-10, "level {level}");
                }
            }
        }
    }

    #[test]
    fn sine_load_converges_to_oracle() {
        let g = |x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        let at_level = |level: u32, rule: &QuadratureRule| {
            let v = GridIndex::new(level, 1 << (level - 2), 1 << (level - 2)).unwrap();
            let f = load_vector(level, g, rule);
            let h = hat(v);
            let oracle: f64 = crate::mesh::support_triangles(v)
                .iter()
                .map(|t| subdivided(t, &|x, y| g(x, y) * h(x, y), 4))
                .sum();
            (f[v.linear_index()], oracle)
        };
        let (value, oracle) = at_level(2, &QuadratureRule::gauss7());
        assert!(value > 0.0 && oracle > 0.0);
        // Degree-5 rule: the relative error falls by roughly 2^4 or more per level.
        let rel = |l: u32| {
            let (v, o) = at_level(l, &QuadratureRule::gauss7());
            ((v - o) / o).abs()
        };
        let (e2, e3, e4) = (rel(2), rel(3), rel(4));
        assert!(e3 < e2 / 12.0 && e4 < e3 / 12.0, "{e2} {e3} {e4}");
        let rel_mid = |l: u32| {
            let (v, o) = at_level(l, &QuadratureRule::mid3());
            ((v - o) / o).abs()
        };
        let (m3, m4, m5) = (rel_mid(3), rel_mid(4), rel_mid(5));
        assert!(m4 < m3 / 3.0 && m5 < m4 / 3.0, "{m3} {m4} {m5}");
    }

    #[test]
    fn wavelet_load_examples() {
        let c = SparseMatrix::from_rows(49, vec![vec![(5, 2.0), (12, 1.0)]]);
        assert_eq!(wavelet_load(&c, &[0.0; 49]).unwrap(), vec![0.0]);
        // Edge stencil 2φ_{1,2} + φ_{1,3} on level 2.
        let g12 = GridIndex::new(2, 1, 2).unwrap();
        let g13 = GridIndex::new(2, 1, 3).unwrap();
        let c = SparseMatrix::from_rows(9, vec![vec![(g12.linear_index(), 2.0), (g13.linear_index(), 1.0)]]);
        let mut indicator = vec![0.0; 9];
        indicator[g12.linear_index()] = 1.0;
        assert_eq!(wavelet_load(&c, &indicator).unwrap(), vec![2.0]);
        let ones = load_vector(2, |_, _| 1.0, &QuadratureRule::mid3());
        assert_eq!(wavelet_load(&c, &ones).unwrap(), vec![3.0 / 16.0]);
        assert!(wavelet_load(&c, &[0.0; 4]).is_err());
    }

    #[test]
    fn tabulated_reproduces_linear_interpolant() {
        let f = |x: f64, y: f64| 3.0 * x - y + 0.25;
        let t = NodalTable::sample(3, f);
        for (x, y) in [(0.1, 0.7), (0.5, 0.5), (0.99, 0.01), (0.0, 1.0), (1.0, 1.0)] {
            assert!((t.eval(x, y) - f(x, y)).abs() < 1e-14);
        }
        let q = NodalTable::sample(2, |x, y| x * y);
        // Exact at nodes, linear along the cell diagonal split.
        assert_eq!(q.eval(0.25, 0.5), 0.125);
        assert!(NodalTable::new(2, vec![0.0; 3]).is_err());
    }
}
