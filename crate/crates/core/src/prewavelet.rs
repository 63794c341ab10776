//! H¹-orthogonal prewavelets: a basis of the complement `W_j` of `V_j` in
//! `V_{j+1}` under `⟨u, v⟩_s = ∫ ∇u·∇v`.
//!
//! Five closed-form families cover everything away from the top and right
//! boundary strips. The remaining `2^{j+3} − 8` functions are computed: band
//! columns of the orthogonality constraint `B_j D_{j+1}` are scanned in
//! descending `(k, i)` order, each dependent column yields a relation (the
//! smallest local one if one exists within [`MAX_LOCAL_RADIUS`], otherwise the
//! exact echelon relation), and relations are kept greedily while they enlarge
//! the span. Local relations are offered first, so only one function ends up
//! with support along the whole top boundary; it is tagged
//! [`WaveletFamily::Global`].

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::assembly::{cross_level_gram, refinement_matrix, stiffness_matrix};
use crate::echelon::{self, Echelon, Insertion, SparseQ};
use crate::mesh::{num_interior, GridIndex, MeshError};
use crate::sparse::{SparseError, SparseMatrix};

/// Largest Chebyshev radius searched for a local strip relation.
pub const MAX_LOCAL_RADIUS: i64 = 3;

#[derive(Debug, Error)]
pub enum PrewaveletError {
    #[error("{family} wavelet position ({i}, {k}) is not admissible at level {level}")]
    InadmissiblePosition {
        family: WaveletFamily,
        level: u32,
        i: u32,
        k: u32,
    },
    #[error("{0} is not a closed-form family")]
    NotClosedForm(WaveletFamily),
    #[error("strip completion reached rank {found} of {expected} at level {level}")]
    RankDeficient { level: u32, found: usize, expected: usize },
    #[error("expected exactly one globally supported wavelet at level {level}, found {found}")]
    GlobalCount { level: u32, found: usize },
    #[error("n = {n} outside 1..={max}")]
    InvalidSubspace { n: u32, max: u32 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveletFamily {
    /// Next to the left edge, `2φ_{1,2k} + φ_{1,2k+1}`.
    VerticalEdge,
    /// Next to the bottom edge, `2φ_{2k,1} + φ_{2k+1,1}`.
    HorizontalEdge,
    Interior1,
    Interior2,
    Interior3,
    Strip,
    Global,
}

impl WaveletFamily {
    pub const CLOSED_FORM: [WaveletFamily; 5] = [
        WaveletFamily::VerticalEdge,
        WaveletFamily::HorizontalEdge,
        WaveletFamily::Interior1,
        WaveletFamily::Interior2,
        WaveletFamily::Interior3,
    ];

    /// Families are numbered 1–5 in the order of [`Self::CLOSED_FORM`].
    pub fn from_number(n: u8) -> Option<Self> {
        Self::CLOSED_FORM.get((n as usize).checked_sub(1)?).copied()
    }

    pub fn is_closed_form(self) -> bool {
        !matches!(self, WaveletFamily::Strip | WaveletFamily::Global)
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WaveletFamily::VerticalEdge => "vertical-edge",
            WaveletFamily::HorizontalEdge => "horizontal-edge",
            WaveletFamily::Interior1 => "interior-1",
            WaveletFamily::Interior2 => "interior-2",
            WaveletFamily::Interior3 => "interior-3",
            WaveletFamily::Strip => "strip",
            WaveletFamily::Global => "global",
        };
        f.write_str(s)
    }
}

/// One prewavelet as a combination of level-`j+1` hats.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    /// Coarse level `j`; the stencil lives on level `j + 1`.
    pub level: u32,
    /// Family position. Strip wavelets use the fine index of their
    /// trailing column in scan order.
    pub position: (u32, u32),
    /// Sorted by fine ordinal.
    pub stencil: Vec<(GridIndex, f64)>,
}

impl WaveletSpec {
    pub fn coefficient(&self, g: GridIndex) -> f64 {
        self.stencil.iter().find(|e| e.0 == g).map_or(0.0, |e| e.1)
    }

    /// Ordinal/value pairs over the fine level.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.stencil.iter().map(|(g, v)| (g.linear_index(), *v))
    }
}

fn stencil_from(level: u32, terms: &[(i64, i64, f64)]) -> Result<Vec<(GridIndex, f64)>, MeshError> {
    let fine = level + 1;
    let mut s = terms
        .iter()
        .map(|&(i, k, v)| GridIndex::new(fine, i.try_into().unwrap_or(0), k.try_into().unwrap_or(0)).map(|g| (g, v)))
        .collect::<Result<Vec<_>, _>>()?;
    s.sort_by_key(|e| e.0.linear_index());
    Ok(s)
}

/// Closed-form wavelet of one of the five families at position `(i, k)`.
///
/// The edge families are addressed as in their names: the vertical-edge
/// wavelet sits at `(0, k)`, the horizontal-edge one at `(i, 0)`. Admissible
/// positions run from 1 to `2^j − 2`.
pub fn interior_wavelet(family: WaveletFamily, level: u32, i: u32, k: u32) -> Result<WaveletSpec, PrewaveletError> {
    if level == 0 {
        return Err(MeshError::InvalidLevel(level).into());
    }
    let max = (1u32 << level) - 2;
    let ok = |x: u32| (1..=max).contains(&x);
    let admissible = match family {
        WaveletFamily::VerticalEdge => i == 0 && ok(k),
        WaveletFamily::HorizontalEdge => k == 0 && ok(i),
        WaveletFamily::Interior1 | WaveletFamily::Interior2 | WaveletFamily::Interior3 => ok(i) && ok(k),
        other => return Err(PrewaveletError::NotClosedForm(other)),
    };
    if !admissible {
        return Err(PrewaveletError::InadmissiblePosition { family, level, i, k });
    }
    let (a, b) = (2 * i as i64, 2 * k as i64);
    let terms: Vec<(i64, i64, f64)> = match family {
        WaveletFamily::VerticalEdge => vec![(1, b, 2.0), (1, b + 1, 1.0)],
        WaveletFamily::HorizontalEdge => vec![(a, 1, 2.0), (a + 1, 1, 1.0)],
        WaveletFamily::Interior1 => vec![(a, b, -1.0), (a + 1, b, 1.0), (a, b + 1, 1.0), (a + 1, b + 1, 1.0)],
        WaveletFamily::Interior2 => vec![(a - 1, b - 1, 1.0), (a, b - 1, 1.0), (a - 1, b, 1.0), (a, b, -1.0)],
        WaveletFamily::Interior3 => vec![(a - 1, b, 1.0), (a, b + 1, 1.0), (a, b - 1, -1.0), (a + 1, b, -1.0)],
        _ => unreachable!(),
    };
    Ok(WaveletSpec {
        family,
        level,
        position: (i, k),
        stencil: stencil_from(level, &terms)?,
    })
}

/// All closed-form wavelets with positions `≤ limit` (use `2^j − 2` for the
/// full set), in basis order: vertical edge, horizontal edge, then each
/// interior family row-major by `(k, i)`.
pub fn closed_form_wavelets(level: u32, limit: u32) -> Vec<WaveletSpec> {
    let limit = limit.min((1u32 << level).saturating_sub(2));
    let mut out = Vec::new();
    for k in 1..=limit {
        out.push(interior_wavelet(WaveletFamily::VerticalEdge, level, 0, k));
    }
    for i in 1..=limit {
        out.push(interior_wavelet(WaveletFamily::HorizontalEdge, level, i, 0));
    }
    for family in &WaveletFamily::CLOSED_FORM[2..] {
        for k in 1..=limit {
            for i in 1..=limit {
                out.push(interior_wavelet(*family, level, i, k));
            }
        }
    }
    out.into_iter()
        .map(|w| w.expect("positions are admissible by construction"))
        .collect()
}

/// Number of wavelets outside the closed-form families, `2^{j+3} − 8`.
pub fn strip_count(level: u32) -> usize {
    (1usize << (level + 3)) - 8
}

struct Band {
    level: u32,
    top: i64,
    /// Fine positions in scan order (descending `(k, i)`).
    positions: Vec<(i64, i64)>,
    lookup: HashMap<(i64, i64), usize>,
    /// Constraint column (coarse space) for each band position.
    columns: Vec<SparseQ>,
}

impl Band {
    fn new(level: u32) -> Self {
        let m = 1i64 << level;
        let top = 2 * m - 1;
        let lo = (2 * m - 4).max(1);
        let positions: Vec<(i64, i64)> = (1..=top)
            .rev()
            .flat_map(|k| (1..=top).rev().map(move |i| (i, k)))
            .filter(|&(i, k)| i >= lo || k >= lo)
            .collect();
        let lookup = positions.iter().enumerate().map(|(n, &p)| (p, n)).collect();
        let constraint_t = cross_level_gram(level).transpose();
        let columns = positions
            .iter()
            .map(|&(i, k)| {
                let g = GridIndex::checked(level + 1, i, k).expect("band position is interior");
                echelon::from_f64_entries(constraint_t.row_entries(g.linear_index()))
            })
            .collect();
        Self {
            level,
            top,
            positions,
            lookup,
            columns,
        }
    }

    /// Smallest-radius relation expressing column `n` through earlier band
    /// columns near it.
    fn local_relation(&self, n: usize) -> Option<SparseQ> {
        let (ci, ck) = self.positions[n];
        for r in 1..=MAX_LOCAL_RADIUS {
            let mut near: Vec<usize> = (ck - r..=ck + r)
                .flat_map(|k| (ci - r..=ci + r).map(move |i| (i, k)))
                .filter_map(|p| self.lookup.get(&p).copied())
                .filter(|&q| q < n)
                .collect();
            near.sort_unstable();
            let mut local = Echelon::tracking();
            for q in near {
                local.insert(self.columns[q].clone(), echelon::unit(q));
            }
            if let Insertion::Dependent(rel) = local.insert(self.columns[n].clone(), echelon::unit(n)) {
                return Some(rel);
            }
        }
        None
    }

    fn in_strip(&self, (i, k): (i64, i64)) -> bool {
        i >= self.top - 1 || k >= self.top - 1
    }

    fn to_spec(&self, lead: usize, relation: &SparseQ) -> WaveletSpec {
        let fine = self.level + 1;
        let mut stencil: Vec<(GridIndex, f64)> = relation
            .iter()
            .map(|(q, v)| {
                let (i, k) = self.positions[*q];
                (
                    GridIndex::checked(fine, i, k).expect("band position is interior"),
                    echelon::to_f64(v),
                )
            })
            .collect();
        stencil.sort_by_key(|e| e.0.linear_index());
        let top = self.top;
        let along_top = relation.iter().all(|(q, _)| self.positions[*q].1 == top);
        let touches = |p: (i64, i64)| relation.iter().any(|(q, _)| self.positions[*q] == p);
        let global = along_top && touches((2.min(top), top)) && touches((top, top));
        let (i, k) = self.positions[lead];
        WaveletSpec {
            family: if global {
                WaveletFamily::Global
            } else {
                WaveletFamily::Strip
            },
            level: self.level,
            position: (i as u32, k as u32),
            stencil,
        }
    }
}

/// Completes the closed-form families to a basis of `W_j`.
pub fn strip_wavelets(level: u32) -> Result<Vec<WaveletSpec>, PrewaveletError> {
    if level == 0 {
        return Err(MeshError::InvalidLevel(level).into());
    }
    let band = Band::new(level);

    // Dependent band columns, each with its exact echelon relation.
    let mut scan = Echelon::tracking();
    let mut free = Vec::new();
    for n in 0..band.positions.len() {
        if let Insertion::Dependent(rel) = scan.insert(band.columns[n].clone(), echelon::unit(n)) {
            free.push((n, rel));
        }
    }

    let mut local = Vec::new();
    let mut fallback = Vec::new();
    for (n, rel) in free {
        match band.local_relation(n) {
            Some(l) => local.push((n, l)),
            None => fallback.push((n, rel)),
        }
    }

    // The closed-form span is exactly the part of W_j that vanishes on the
    // strip, so a candidate adds to the basis iff its strip restriction is
    // new.
    let strip_slot: HashMap<usize, usize> = band
        .positions
        .iter()
        .enumerate()
        .filter(|(_, p)| band.in_strip(**p))
        .enumerate()
        .map(|(slot, (n, _))| (n, slot))
        .collect();
    let expected = strip_count(level);
    let mut span = Echelon::new();
    let mut picked = Vec::with_capacity(expected);
    for (n, rel) in local.iter().chain(fallback.iter()) {
        if picked.len() == expected {
            break;
        }
        let mut restricted: SparseQ = rel
            .iter()
            .filter_map(|(q, v)| strip_slot.get(q).map(|s| (*s, *v)))
            .collect();
        restricted.sort_by_key(|e| e.0);
        if span.push(restricted) {
            picked.push(band.to_spec(*n, rel));
        }
    }
    if picked.len() != expected {
        return Err(PrewaveletError::RankDeficient {
            level,
            found: picked.len(),
            expected,
        });
    }
    let globals = picked.iter().filter(|w| w.family == WaveletFamily::Global).count();
    if globals != 1 {
        return Err(PrewaveletError::GlobalCount { level, found: globals });
    }
    Ok(picked)
}

/// The ordered prewavelet basis of `W_j`.
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    pub level: u32,
    pub wavelets: Vec<WaveletSpec>,
}

impl WaveletBasis {
    pub fn build(level: u32) -> Result<Self, PrewaveletError> {
        let mut wavelets = closed_form_wavelets(level, u32::MAX);
        wavelets.extend(strip_wavelets(level)?);
        Ok(Self { level, wavelets })
    }

    pub fn len(&self) -> usize {
        self.wavelets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelets.is_empty()
    }

    /// `C_j`: one row per wavelet, columns over level-`j+1` hats.
    pub fn matrix(&self) -> SparseMatrix {
        SparseMatrix::from_rows(
            num_interior(self.level + 1),
            self.wavelets.iter().map(|w| w.entries().collect()).collect(),
        )
    }
}

/// `C_j`, shape `(N_{j+1} − N_j) × N_{j+1}`.
pub fn wavelet_matrix(level: u32) -> Result<SparseMatrix, PrewaveletError> {
    Ok(WaveletBasis::build(level)?.matrix())
}

/// `E_j = C_j D_{j+1} C_jᵀ` for a given wavelet matrix.
pub fn gram_of(c: &SparseMatrix, level: u32) -> Result<SparseMatrix, PrewaveletError> {
    Ok(c.congruence(&stiffness_matrix(level + 1))?)
}

pub fn wavelet_gram(level: u32) -> Result<SparseMatrix, PrewaveletError> {
    gram_of(&wavelet_matrix(level)?, level)
}

/// `max |B_j D_{j+1} Cᵀ|` for an arbitrary candidate `C`.
pub fn orthogonality_residual(c: &SparseMatrix, level: u32) -> Result<f64, PrewaveletError> {
    let bd = refinement_matrix(level).matmul(&stiffness_matrix(level + 1))?;
    Ok(bd.matmul(&c.transpose())?.max_abs())
}

pub fn verify_orthogonality(level: u32) -> Result<f64, PrewaveletError> {
    orthogonality_residual(&wavelet_matrix(level)?, level)
}

/// Expected and constructed dimension of `W_j ∩ V^n_{j+1}`, where `V^n_{j+1}`
/// is spanned by fine hats with `i, k ≤ 2n − 1`.
pub fn dimension_check(level: u32, n: u32) -> Result<(usize, usize), PrewaveletError> {
    let max = (1u32 << level) - 1;
    if n == 0 || n > max {
        return Err(PrewaveletError::InvalidSubspace { n, max });
    }
    let n_us = n as usize;
    let expected = 3 * n_us * n_us + 1 - 4 * n_us;
    let rows = closed_form_wavelets(level, n - 1)
        .iter()
        .map(|w| echelon::from_f64_entries(w.entries()))
        .collect::<Vec<_>>();
    Ok((expected, echelon::rank_of(rows)))
}
