//! Exact incremental row echelon form over sparse rational vectors.
//!
//! Used to decide linear dependence without tolerances: every stiffness-type
//! entry on this mesh is a dyadic rational.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = Ratio<i128>;

/// Sparse rational vector, sorted by index, no stored zeros.
pub type SparseQ = Vec<(usize, Q)>;

/// Exact conversion of a dyadic `f64` (a multiple of `2^{-40}` or coarser).
pub fn dyadic(v: f64) -> Option<Q> {
    let mut scale: i128 = 1;
    let mut x = v;
    for _ in 0..=40 {
        if x.fract() == 0.0 && x.abs() < 1e30 {
            return Some(Q::new(x as i128, scale));
        }
        x *= 2.0;
        scale *= 2;
    }
    None
}

pub fn to_f64(q: &Q) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn from_f64_entries(entries: impl IntoIterator<Item = (usize, f64)>) -> SparseQ {
    let mut v: SparseQ = entries
        .into_iter()
        .filter(|e| e.1 != 0.0)
        .map(|(i, x)| (i, dyadic(x).expect("entry is not a dyadic rational")))
        .collect();
    v.sort_by_key(|e| e.0);
    v
}

/// `a − s·b` on sorted sparse vectors.
pub fn axpy_sub(a: &SparseQ, s: &Q, b: &SparseQ) -> SparseQ {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (0, 0);
    while ia < a.len() || ib < b.len() {
        let next_a = a.get(ia).map(|e| e.0);
        let next_b = b.get(ib).map(|e| e.0);
        match (next_a, next_b) {
            (Some(x), Some(y)) if x == y => {
                let v = a[ia].1 - *s * b[ib].1;
                if !v.is_zero() {
                    out.push((x, v));
                }
                ia += 1;
                ib += 1;
            }
            (Some(x), Some(y)) if x < y => {
                out.push(a[ia]);
                ia += 1;
            }
            (Some(_), None) => {
                out.push(a[ia]);
                ia += 1;
            }
            _ => {
                let (y, v) = b[ib];
                out.push((y, -(*s * v)));
                ib += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub enum Insertion {
    /// The vector was linearly independent and is now part of the basis.
    Independent,
    /// The vector reduced to zero; the tracked combination (if enabled)
    /// witnesses the dependence.
    Dependent(SparseQ),
}

/// Echelon basis keyed by leading index. Optionally tracks, for each stored
/// row, the combination of inserted vectors that produced it.
#[derive(Debug, Default, Clone)]
pub struct Echelon {
    rows: BTreeMap<usize, (SparseQ, SparseQ)>,
    track: bool,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tracking() -> Self {
        Self {
            rows: BTreeMap::new(),
            track: true,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis. `combo` is the label of `v` in terms of
    /// the caller's generators (ignored unless tracking).
    pub fn insert(&mut self, mut v: SparseQ, mut combo: SparseQ) -> Insertion {
        while let Some(&(lead, coeff)) = v.first() {
            match self.rows.get(&lead) {
                Some((row, row_combo)) => {
                    // Stored rows have leading coefficient 1.
                    v = axpy_sub(&v, &coeff, row);
                    if self.track {
                        combo = axpy_sub(&combo, &coeff, row_combo);
                    }
                }
                None => {
                    let inv = coeff.recip();
                    let scale = |x: &mut SparseQ| x.iter_mut().for_each(|e| e.1 *= inv);
                    scale(&mut v);
                    if self.track {
                        scale(&mut combo);
                    } else {
                        combo.clear();
                    }
                    self.rows.insert(lead, (v, combo));
                    return Insertion::Independent;
                }
            }
        }
        Insertion::Dependent(if self.track { combo } else { Vec::new() })
    }

    /// Convenience for rank-only use.
    pub fn push(&mut self, v: SparseQ) -> bool {
        matches!(self.insert(v, Vec::new()), Insertion::Independent)
    }
}

/// Exact rank of a list of sparse rational rows.
pub fn rank_of(rows: impl IntoIterator<Item = SparseQ>) -> usize {
    let mut e = Echelon::new();
    for r in rows {
        e.push(r);
    }
    e.rank()
}

/// Largest absolute value, as `f64`.
pub fn max_abs(v: &SparseQ) -> f64 {
    v.iter().map(|e| to_f64(&e.1.abs())).fold(0.0, f64::max)
}

pub fn unit(index: usize) -> SparseQ {
    vec![(index, Q::one())]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn dyadic_conversion() {
        assert_eq!(dyadic(0.5), Some(q(1, 2)));
        assert_eq!(dyadic(-3.0), Some(q(-3, 1)));
        assert_eq!(dyadic(0.1), None);
    }

    #[test]
    fn dependence_witness() {
        let mut e = Echelon::tracking();
        let a = vec![(0, q(1, 1)), (1, q(2, 1))];
        let b = vec![(1, q(1, 1)), (2, q(1, 1))];
        let c = vec![(0, q(1, 1)), (1, q(3, 1)), (2, q(1, 1))];
        assert!(matches!(e.insert(a, unit(0)), Insertion::Independent));
        assert!(matches!(e.insert(b, unit(1)), Insertion::Independent));
        match e.insert(c, unit(2)) {
            Insertion::Dependent(w) => {
                assert_eq!(w, vec![(0, q(-1, 1)), (1, q(-1, 1)), (2, q(1, 1))]);
            }
            Insertion::Independent => panic!("c = a + b"),
        }
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn rank_counts() {
        let rows = vec![
            from_f64_entries([(0, 1.0), (1, 0.5)]),
            from_f64_entries([(0, 2.0), (1, 1.0)]),
            from_f64_entries([(2, -1.0)]),
        ];
        assert_eq!(rank_of(rows), 2);
    }
}
