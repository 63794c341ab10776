//! Reduction of inhomogeneous Dirichlet data to a zero-boundary problem.
//!
//! With traces `f1` (bottom, `y = 0`), `f2` (top), `f3` (left, `x = 0`) and
//! `f4` (right), the lift `L` matches all four edges, `w = u − L` vanishes on
//! the boundary and solves `−Δw = g + ΔL`.

use std::fmt;
use std::sync::Arc;

pub type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Step of the central-difference fallback for trace curvature.
pub const FD_STEP: f64 = 1e-5;

/// Corners must agree to this tolerance, relative to the largest corner value.
pub const CORNER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HomogenizeError {
    #[error("boundary traces disagree at corner {corner:?}: {first} vs {second}")]
    CornerMismatch {
        corner: (f64, f64),
        first: f64,
        second: f64,
    },
}

#[derive(Clone)]
pub enum Curvature {
    Exact(Curve),
    FiniteDifference,
}

/// One edge trace and, optionally, its second derivative.
#[derive(Clone)]
pub struct Trace {
    pub value: Curve,
    pub curvature: Curvature,
}

impl Trace {
    pub fn new(value: Curve, second: Curve) -> Self {
        Self {
            value,
            curvature: Curvature::Exact(second),
        }
    }

    /// Second derivative taken by central differences with step [`FD_STEP`].
    pub fn approximate(value: Curve) -> Self {
        Self {
            value,
            curvature: Curvature::FiniteDifference,
        }
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(|_| 0.0), Arc::new(|_| 0.0))
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        match &self.curvature {
            Curvature::Exact(f) => f(t),
            Curvature::FiniteDifference => {
                let h = FD_STEP;
                (self.eval(t + h) - 2.0 * self.eval(t) + self.eval(t - h)) / (h * h)
            }
        }
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.curvature {
            Curvature::Exact(_) => "exact",
            Curvature::FiniteDifference => "finite-difference",
        };
        write!(f, "Trace {{ curvature: {kind} }}")
    }
}

#[derive(Clone)]
pub struct DirichletProblem {
    pub rhs: Field,
    pub bottom: Trace,
    pub top: Trace,
    pub left: Trace,
    pub right: Trace,
}

impl DirichletProblem {
    pub fn homogeneous(rhs: Field) -> Self {
        Self {
            rhs,
            bottom: Trace::zero(),
            top: Trace::zero(),
            left: Trace::zero(),
            right: Trace::zero(),
        }
    }
}

impl fmt::Debug for DirichletProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletProblem")
            .field("bottom", &self.bottom)
            .field("top", &self.top)
            .field("left", &self.left)
            .field("right", &self.right)
            .finish_non_exhaustive()
    }
}

/// Bilinear interpolant of the corner values
/// `a1 = (0,0)`, `a2 = (0,1)`, `a3 = (1,1)`, `a4 = (1,0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearLift {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl BilinearLift {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let Self { a1, a2, a3, a4 } = *self;
        a1 + (a4 - a1) * x + (a2 - a1) * y + (a3 + a1 - a4 - a2) * x * y
    }
}

pub fn bilinear_lift(a1: f64, a2: f64, a3: f64, a4: f64) -> BilinearLift {
    BilinearLift { a1, a2, a3, a4 }
}

/// Transfinite lift of the four traces.
#[derive(Debug, Clone)]
pub struct Lift {
    pub corners: BilinearLift,
    bottom: Trace,
    top: Trace,
    left: Trace,
    right: Trace,
}

impl Lift {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let h = |x, y| self.corners.eval(x, y);
        h(x, y)
            + x * (self.right.eval(y) - h(1.0, y))
            + (1.0 - x) * (self.left.eval(y) - h(0.0, y))
            + y * (self.top.eval(x) - h(x, 1.0))
            + (1.0 - y) * (self.bottom.eval(x) - h(x, 0.0))
    }

    /// `ΔL`; the bilinear part is harmonic.
    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        x * self.right.second_derivative(y)
            + (1.0 - x) * self.left.second_derivative(y)
            + y * self.top.second_derivative(x)
            + (1.0 - y) * self.bottom.second_derivative(x)
    }
}

#[derive(Clone)]
pub struct Homogenized {
    pub lift: Lift,
    original: Field,
}

impl Homogenized {
    /// `g₁ = g + ΔL`, the right-hand side for `w = u − L`.
    pub fn rhs(&self, x: f64, y: f64) -> f64 {
        (self.original)(x, y) + self.lift.laplacian(x, y)
    }

    pub fn rhs_field(&self) -> Field {
        let this = self.clone();
        Arc::new(move |x, y| this.rhs(x, y))
    }

    pub fn reconstruct(&self, w: f64, x: f64, y: f64) -> f64 {
        w + self.lift.eval(x, y)
    }
}

fn check_corner(corner: (f64, f64), first: f64, second: f64, scale: f64) -> Result<f64, HomogenizeError> {
    if (first - second).abs() <= CORNER_TOLERANCE * scale.max(1.0) {
        Ok(first)
    } else {
        Err(HomogenizeError::CornerMismatch { corner, first, second })
    }
}

pub fn homogenize(problem: &DirichletProblem) -> Result<Homogenized, HomogenizeError> {
    let DirichletProblem {
        bottom,
        top,
        left,
        right,
        ..
    } = problem;
    let pairs = [
        ((0.0, 0.0), bottom.eval(0.0), left.eval(0.0)),
        ((0.0, 1.0), left.eval(1.0), top.eval(0.0)),
        ((1.0, 1.0), top.eval(1.0), right.eval(1.0)),
        ((1.0, 0.0), right.eval(0.0), bottom.eval(1.0)),
    ];
    let scale = pairs.iter().flat_map(|p| [p.1.abs(), p.2.abs()]).fold(0.0, f64::max);
    let mut a = [0.0; 4];
    for (slot, (corner, first, second)) in a.iter_mut().zip(pairs) {
        *slot = check_corner(corner, first, second, scale)?;
    }
    Ok(Homogenized {
        lift: Lift {
            corners: bilinear_lift(a[0], a[1], a[2], a[3]),
            bottom: bottom.clone(),
            top: top.clone(),
            left: left.clone(),
            right: right.clone(),
        },
        original: problem.rhs.clone(),
    })
}

/// `u = w + L` at each point.
pub fn reconstruct(w: &[f64], points: &[(f64, f64)], lift: &Lift) -> Vec<f64> {
    w.iter().zip(points).map(|(w, &(x, y))| w + lift.eval(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_problem() -> DirichletProblem {
        // u = x² + xy − y²/2 + 1, −Δu = −1.
        DirichletProblem {
            rhs: Arc::new(|_, _| -1.0),
            bottom: Trace::new(Arc::new(|x| x * x + 1.0), Arc::new(|_| 2.0)),
            top: Trace::new(Arc::new(|x| x * x + x + 0.5), Arc::new(|_| 2.0)),
            left: Trace::new(Arc::new(|y| 1.0 - y * y / 2.0), Arc::new(|_| -1.0)),
            right: Trace::new(Arc::new(|y| 2.0 + y - y * y / 2.0), Arc::new(|_| -1.0)),
        }
    }

    #[test]
    fn bilinear_corners() {
        let h = bilinear_lift(1.0, 2.0, 3.0, 4.0);
        assert_eq!(h.eval(0.0, 0.0), 1.0);
        assert_eq!(h.eval(0.0, 1.0), 2.0);
        assert_eq!(h.eval(1.0, 1.0), 3.0);
        assert_eq!(h.eval(1.0, 0.0), 4.0);
    }

    #[test]
    fn bilinear_special_cases() {
        assert_eq!(bilinear_lift(0.0, 0.0, 0.0, 0.0).eval(0.3, 0.7), 0.0);
        assert_eq!(bilinear_lift(1.0, 1.0, 1.0, 1.0).eval(0.3, 0.7), 1.0);
        let h = bilinear_lift(0.0, 0.0, 1.0, 1.0);
        for (x, y) in [(0.3, 0.7), (0.9, 0.1)] {
            assert!((h.eval(x, y) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn single_nonzero_trace() {
        use std::f64::consts::PI;
        let p = DirichletProblem {
            bottom: Trace::new(
                Arc::new(|x: f64| (PI * x).sin()),
                Arc::new(|x: f64| -PI * PI * (PI * x).sin()),
            ),
            ..DirichletProblem::homogeneous(Arc::new(|_, _| 0.0))
        };
        let hom = homogenize(&p).unwrap();
        for (x, y) in [(0.25, 0.5), (0.6, 0.1)] {
            let s = (PI * x).sin();
            assert!((hom.lift.eval(x, y) - (1.0 - y) * s).abs() < 1e-15);
            // −Δw = g + ΔL with ΔL = −π²(1−y)sin(πx).
            assert!((hom.rhs(x, y) + (1.0 - y) * PI * PI * s).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_matches_traces() {
        let p = quadratic_problem();
        let hom = homogenize(&p).unwrap();
        for t in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert!((hom.lift.eval(t, 0.0) - p.bottom.eval(t)).abs() < 1e-14);
            assert!((hom.lift.eval(t, 1.0) - p.top.eval(t)).abs() < 1e-14);
            assert!((hom.lift.eval(0.0, t) - p.left.eval(t)).abs() < 1e-14);
            assert!((hom.lift.eval(1.0, t) - p.right.eval(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_lift_is_exact() {
        // The transfinite lift reproduces this u exactly, so w ≡ 0, g₁ ≡ 0.
        let p = quadratic_problem();
        let hom = homogenize(&p).unwrap();
        let u = |x: f64, y: f64| x * x + x * y - y * y / 2.0 + 1.0;
        let points: Vec<_> = (0..=4)
            .flat_map(|k| (0..=4).map(move |i| (i as f64 / 4.0, k as f64 / 4.0)))
            .collect();
        let recon = reconstruct(&vec![0.0; points.len()], &points, &hom.lift);
        for ((x, y), v) in points.iter().zip(recon) {
            assert!((v - u(*x, *y)).abs() < 1e-14);
            assert!(hom.rhs(*x, *y).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_laplacian_matches_finite_differences() {
        // Traces of u = sin(x)cos(y) + xy².
        let (s1, c1) = (1f64.sin(), 1f64.cos());
        let p = DirichletProblem {
            rhs: Arc::new(|_, _| 0.0),
            bottom: Trace::new(Arc::new(|x: f64| x.sin()), Arc::new(|x: f64| -x.sin())),
            top: Trace::new(
                Arc::new(move |x: f64| x.sin() * c1 + x),
                Arc::new(move |x: f64| -x.sin() * c1),
            ),
            left: Trace::zero(),
            right: Trace::new(
                Arc::new(move |y: f64| s1 * y.cos() + y * y),
                Arc::new(move |y: f64| 2.0 - s1 * y.cos()),
            ),
        };
        let hom = homogenize(&p).unwrap();
        let h = 1e-4;
        let l = |x, y| hom.lift.eval(x, y);
        for (x, y) in [(0.3, 0.4), (0.7, 0.2), (0.5, 0.9)] {
            let fd = (l(x + h, y) + l(x - h, y) + l(x, y + h) + l(x, y - h) - 4.0 * l(x, y)) / (h * h);
            assert!((fd - hom.lift.laplacian(x, y)).abs() < 1e-5, "{fd}");
            assert!((hom.rhs(x, y) - fd).abs() < 1e-5);
        }
    }

    #[test]
    fn finite_difference_fallback() {
        let t = Trace::approximate(Arc::new(|s: f64| (3.0 * s).sin()));
        for s in [0.1, 0.5, 0.8] {
            assert!((t.second_derivative(s) + 9.0 * (3.0 * s).sin()).abs() < 1e-4);
        }
    }

    #[test]
    fn corner_mismatch() {
        let mut p = quadratic_problem();
        p.top = Trace::approximate(Arc::new(|x| x * x + x + 0.6));
        match homogenize(&p) {
            Err(HomogenizeError::CornerMismatch { corner, .. }) => assert_eq!(corner, (0.0, 1.0)),
            Ok(_) => panic!("expected mismatch"),
        }
    }

    #[test]
    fn homogeneous_problem_is_unchanged() {
        let p = DirichletProblem::homogeneous(Arc::new(|x, y| x + y));
        let hom = homogenize(&p).unwrap();
        assert_eq!(hom.rhs(0.3, 0.2), 0.5);
        assert_eq!(hom.lift.eval(0.3, 0.2), 0.0);
    }
}
