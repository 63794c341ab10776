//! Problem selection: a builtin name or a small JSON problem file.
//!
//! ```json
//! {
//!   "name": "ramp",
//!   "corners": [0.0, 1.0, 2.0, 1.0],
//!   "rhs": { "builtin": "sine" }
//! }
//! ```
//!
//! `corners` are `u` at `(0,0)`, `(0,1)`, `(1,1)`, `(1,0)`; the edge traces
//! are linear between them. `rhs` is one of `{"builtin": name}`,
//! `{"constant": c}` or `{"tabulated": {"level": L, "values": [...]}}` with
//! `(2^L+1)²` samples row-major from `(0,0)`.

use std::path::Path;
use std::sync::Arc;

use prewavelet_core::bench::{builtin_names, find_problem, BuiltinProblem};
use prewavelet_core::homogenize::{bilinear_lift, BilinearLift, DirichletProblem, Field, Trace};
use prewavelet_core::quadrature::NodalTable;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhsSpec {
    Builtin(String),
    Constant(f64),
    Tabulated { level: u32, values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    #[serde(default)]
    pub corners: [f64; 4],
    pub rhs: RhsSpec,
}

type Exact = (Arc<dyn Fn(f64, f64) -> f64>, Arc<dyn Fn(f64, f64) -> (f64, f64)>);

/// A resolved problem, ready to homogenize.
pub struct Problem {
    pub name: String,
    pub dirichlet: DirichletProblem,
    /// `u` and `∇u`, when known.
    pub exact: Option<Exact>,
}

fn unknown(selector: &str) -> String {
    format!(
        "unknown problem '{selector}': expected a builtin ({}) or a path to a problem file",
        builtin_names().join(", ")
    )
}

fn linear(a: f64, b: f64) -> Trace {
    Trace::new(Arc::new(move |t| a + (b - a) * t), Arc::new(|_| 0.0))
}

/// `u_builtin + h`: `h` is harmonic, so the right-hand side is unchanged.
fn shifted_exact(p: BuiltinProblem, h: BilinearLift) -> Exact {
    let BilinearLift { a1, a2, a3, a4 } = h;
    let c = a3 + a1 - a4 - a2;
    (
        Arc::new(move |x, y| (p.u)(x, y) + h.eval(x, y)),
        Arc::new(move |x, y| {
            let (ux, uy) = (p.grad)(x, y);
            (ux + (a4 - a1) + c * y, uy + (a2 - a1) + c * x)
        }),
    )
}

impl Problem {
    pub fn builtin(p: BuiltinProblem) -> Self {
        Self::from_parts(p.name.to_string(), [0.0; 4], Arc::new(p.rhs), Some(p))
    }

    fn from_parts(name: String, corners: [f64; 4], rhs: Field, builtin: Option<BuiltinProblem>) -> Self {
        let [a1, a2, a3, a4] = corners;
        let dirichlet = DirichletProblem {
            rhs,
            bottom: linear(a1, a4),
            top: linear(a2, a3),
            left: linear(a1, a2),
            right: linear(a4, a3),
        };
        let exact = builtin.map(|p| shifted_exact(p, bilinear_lift(a1, a2, a3, a4)));
        Self { name, dirichlet, exact }
    }

    pub fn from_file(file: ProblemFile) -> Result<Self, String> {
        let ProblemFile { name, corners, rhs } = file;
        match rhs {
            RhsSpec::Builtin(b) => {
                let p = find_problem(&b).ok_or_else(|| unknown(&b))?;
                Ok(Self::from_parts(name, corners, Arc::new(p.rhs), Some(p)))
            }
            RhsSpec::Constant(c) => Ok(Self::from_parts(name, corners, Arc::new(move |_, _| c), None)),
            RhsSpec::Tabulated { level, values } => {
                let table = NodalTable::new(level, values)?;
                Ok(Self::from_parts(
                    name,
                    corners,
                    Arc::new(move |x, y| table.eval(x, y)),
                    None,
                ))
            }
        }
    }

    /// Builtin name first, then a file path.
    pub fn resolve(selector: &str) -> Result<Self, String> {
        if let Some(p) = find_problem(selector) {
            return Ok(Self::builtin(p));
        }
        let path = Path::new(selector);
        if !path.is_file() {
            return Err(unknown(selector));
        }
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {selector}: {e}"))?;
        let file: ProblemFile =
            serde_json::from_str(&text).map_err(|e| format!("invalid problem file {selector}: {e}"))?;
        Self::from_file(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_rhs_forms() {
        let f: ProblemFile = serde_json::from_str(r#"{"name": "a", "rhs": {"builtin": "poly"}}"#).unwrap();
        assert_eq!(f.corners, [0.0; 4]);
        assert!(Problem::from_file(f).unwrap().exact.is_some());

        let f: ProblemFile =
            serde_json::from_str(r#"{"name": "b", "corners": [1, 1, 1, 1], "rhs": {"constant": 2.5}}"#).unwrap();
        let p = Problem::from_file(f).unwrap();
        assert!(p.exact.is_none());
        assert_eq!((p.dirichlet.rhs)(0.3, 0.3), 2.5);

        let f: ProblemFile = serde_json::from_str(
            r#"{"name": "c", "rhs": {"tabulated": {"level": 1, "values": [0,0,0, 0,4,0, 0,0,0]}}}"#,
        )
        .unwrap();
        let p = Problem::from_file(f).unwrap();
        assert_eq!((p.dirichlet.rhs)(0.5, 0.5), 4.0);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(serde_json::from_str::<ProblemFile>(r#"{"name": "x", "rhs": {"nope": 1}}"#).is_err());
        let f: ProblemFile =
            serde_json::from_str(r#"{"name": "x", "rhs": {"tabulated": {"level": 2, "values": [1, 2]}}}"#).unwrap();
        assert!(Problem::from_file(f).is_err());
        let err = Problem::resolve("nosuch").err().unwrap();
        assert!(err.contains("sine, poly, exp"));
    }

    #[test]
    fn shifted_exact_solution() {
        let f: ProblemFile =
            serde_json::from_str(r#"{"name": "s", "corners": [0, 1, 3, 2], "rhs": {"builtin": "sine"}}"#).unwrap();
        let p = Problem::from_file(f).unwrap();
        let (u, grad) = p.exact.unwrap();
        assert_eq!(u(0.0, 0.0), 0.0);
        assert!((u(1.0, 1.0) - 3.0).abs() < 1e-12);
        let h = 1e-6;
        let (gx, gy) = grad(0.3, 0.7);
        assert!((gx - (u(0.3 + h, 0.7) - u(0.3 - h, 0.7)) / (2.0 * h)).abs() < 1e-6);
        assert!((gy - (u(0.3, 0.7 + h) - u(0.3, 0.7 - h)) / (2.0 * h)).abs() < 1e-6);
    }
}
