//! Entanglement parameters `E^(s,t,u,v) = |det Q^(s,t,u,v)|²` and their sum.
//!
//! `E^total` vanishes exactly on product states and, for normalized states,
//! never exceeds `(N-1)/(2N)` with `N = min(n, m)`. The bound is attained iff
//! the `N` rows of the (suitably oriented) coefficient matrix are mutually
//! orthogonal with equal squared norm `1/N`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::criteria::{submatrix_q, QuadSelector};
use crate::error::{Error, Result};
use crate::linalg::{gaussian_complex, orthonormalize_rows, CMatrix};
use crate::state::StateMatrix;

/// `|det Q^sel|²`, computed on the block as it sits in `C` (no renormalization).
pub fn e_param(c: &StateMatrix, sel: QuadSelector) -> Result<f64> {
    Ok(submatrix_q(c, sel)?.det().norm_sqr())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementReport {
    /// One entry per selector, in lexicographic selector order.
    pub params: BTreeMap<QuadSelector, f64>,
    pub total: f64,
    /// `(N-1)/(2N)` with `N = min(n, m)`.
    pub upper_bound: f64,
    /// Distance of the row Gram matrix from `I/N`, see [`maxent_check`].
    pub maxent_residual: f64,
}

impl EntanglementReport {
    /// Parameters sorted by decreasing value, ties in selector order.
    pub fn ranked(&self) -> Vec<(QuadSelector, f64)> {
        let mut v: Vec<(QuadSelector, f64)> = self.params.iter().map(|(&q, &e)| (q, e)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }
}

/// Every `E^(s,t,u,v)`, their sum, and the dimension bound.
pub fn e_total(c: &StateMatrix) -> EntanglementReport {
    let params: BTreeMap<QuadSelector, f64> = QuadSelector::all(c.rows(), c.cols())
        .map(|q| (q, e_param(c, q).expect("enumerated selectors fit")))
        .collect();
    // Folding from +0.0: an empty `sum()` gives -0.0 for 1xm states.
    let total = params.values().fold(0.0, |acc, e| acc + e);
    EntanglementReport {
        params,
        total,
        upper_bound: e_upper_bound(c.rows(), c.cols()),
        maxent_residual: gram_residual(&oriented(c)),
    }
}

/// `(N-1)/(2N)` with `N = min(n, m)`; zero for `N = 1`.
pub fn e_upper_bound(rows: usize, cols: usize) -> f64 {
    let n = rows.min(cols).max(1) as f64;
    (n - 1.0) / (2.0 * n)
}

/// Row norms `L_i = Σ_J |C_iJ|²` and row overlaps `Σ_K C*_iK C_jK` for `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowGram {
    pub row_norms: Vec<f64>,
    pub overlaps: BTreeMap<(usize, usize), Complex64>,
}

impl RowGram {
    pub fn of(c: &StateMatrix) -> Self {
        let row_norms = (0..c.rows())
            .map(|i| c.row(i).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let mut overlaps = BTreeMap::new();
        for i in 0..c.rows() {
            for j in i + 1..c.rows() {
                let o: Complex64 = c
                    .row(i)
                    .iter()
                    .zip(c.row(j))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                overlaps.insert((i, j), o);
            }
        }
        Self {
            row_norms,
            overlaps,
        }
    }

    /// `max_{i≤j} |Σ_K C*_iK C_jK - δ_ij / n|`.
    pub fn residual(&self) -> f64 {
        let target = 1.0 / self.row_norms.len() as f64;
        let diag = self.row_norms.iter().map(|l| (l - target).abs());
        let off = self.overlaps.values().map(|o| o.norm());
        diag.chain(off).fold(0.0, f64::max)
    }
}

/// The state with the shorter side as rows.
fn oriented(c: &StateMatrix) -> StateMatrix {
    if c.rows() > c.cols() {
        c.transpose()
    } else {
        c.clone()
    }
}

fn gram_residual(c: &StateMatrix) -> f64 {
    RowGram::of(c).residual()
}

/// Result of [`maxent_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxentCheck {
    pub is_max: bool,
    pub residual: f64,
}

/// Tests whether a normalized state is maximally entangled, i.e. whether the
/// `N = min(n, m)` rows of the shorter side satisfy
/// `Σ_K C*_iK C_jK = δ_ij / N`. States with `n > m` are checked through their
/// transpose.
pub fn maxent_check(c: &StateMatrix, tol: f64) -> Result<MaxentCheck> {
    if !c.is_normalized() {
        return Err(Error::NotNormalized { norm2: c.norm2() });
    }
    let residual = gram_residual(&oriented(c));
    Ok(MaxentCheck {
        is_max: residual <= tol,
        residual,
    })
}

/// A maximally entangled `n × m` state: `N` random orthonormal vectors scaled
/// by `1/√N` on the shorter side.
pub fn generate_maxent(rows: usize, cols: usize, seed: u64) -> Result<StateMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch(format!(
            "cannot build a {rows}x{cols} state"
        )));
    }
    if rows > cols {
        return generate_maxent(cols, rows, seed).map(|s| s.transpose());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CMatrix::from_fn(rows, cols, |_, _| gaussian_complex(&mut rng));
    orthonormalize_rows(&mut m)?;
    let scale = Complex64::new(1.0 / (rows as f64).sqrt(), 0.0);
    StateMatrix::from_cmatrix(&m.scale(scale))
}

/// Both sides of the 2×m identity
/// `(Σ|C_i|² + Σ|D_i|²)² - 4E = [Σ(|C_i|² - |D_i|²)]² + 4|Σ C*_i D_i|²`,
/// where `C` and `D` are the two rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoRowIdentity {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn verify_2xm_identity(c: &StateMatrix) -> Result<TwoRowIdentity> {
    if c.rows() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "identity needs 2 rows, got {}",
            c.rows()
        )));
    }
    let gram = RowGram::of(c);
    let (top, bottom) = (gram.row_norms[0], gram.row_norms[1]);
    let overlap = gram.overlaps[&(0, 1)];
    let lhs = (top + bottom).powi(2) - 4.0 * e_total(c).total;
    let rhs = (top - bottom).powi(2) + 4.0 * overlap.norm_sqr();
    Ok(TwoRowIdentity { lhs, rhs })
}
