//! Separability through 2×2 minors.
//!
//! A pure state is a product state exactly when its coefficient matrix has
//! rank one, i.e. when every 2×2 minor vanishes. This module evaluates that
//! condition at three levels of generality:
//!
//! * [`s_sum`]: adjacent blocks `S^(a,b)` only, which decides separability for
//!   matrices without zero entries; combined with [`reduce`] and
//!   [`zero_flag`] it becomes [`reduced_criterion`].
//! * [`chi`]: the stretched blocks that complete `S` to the family `G`.
//! * [`q_sum`]: every row-pair/column-pair block `Q^(s,t,u,v)`, which decides
//!   separability for any matrix and is what [`is_separable`] uses.
//!
//! Each block selects a qubit-qubit subsystem of the full state.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::state::{reduce, zero_flag, StateMatrix};

/// A 2×2 complex block `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block2(pub [[Complex64; 2]; 2]);

impl Block2 {
    pub fn det(&self) -> Complex64 {
        let [[a, b], [c, d]] = self.0;
        a * d - b * c
    }

    /// `Tr(BB†)`, the squared norm of the block read as a two-qubit state.
    pub fn norm2(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }
}

/// Row pair `s < t` and column pair `u < v` picking out a 2×2 block.
///
/// Indices are 0-based; `Display` and `FromStr` use the 1-based `"s,t,u,v"`
/// form found in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuadSelector {
    pub s: usize,
    pub t: usize,
    pub u: usize,
    pub v: usize,
}

impl QuadSelector {
    pub fn new(s: usize, t: usize, u: usize, v: usize) -> Result<Self> {
        if s >= t || u >= v {
            return Err(Error::IndexOutOfRange(format!(
                "selector needs s < t and u < v, got ({s},{t},{u},{v}) 0-based"
            )));
        }
        Ok(Self { s, t, u, v })
    }

    /// Checks that the selector fits an `rows × cols` matrix.
    pub fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if self.s >= self.t || self.u >= self.v || self.t >= rows || self.v >= cols {
            return Err(Error::IndexOutOfRange(format!(
                "selector {self} does not fit a {rows}x{cols} matrix"
            )));
        }
        Ok(())
    }

    /// All `C(n,2)·C(m,2)` selectors in lexicographic `(s,t,u,v)` order.
    pub fn all(rows: usize, cols: usize) -> impl Iterator<Item = QuadSelector> {
        (0..rows).flat_map(move |s| {
            (s + 1..rows).flat_map(move |t| {
                (0..cols).flat_map(move |u| (u + 1..cols).map(move |v| QuadSelector { s, t, u, v }))
            })
        })
    }

    pub fn count(rows: usize, cols: usize) -> usize {
        rows * rows.saturating_sub(1) / 2 * (cols * cols.saturating_sub(1) / 2)
    }
}

impl fmt::Display for QuadSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.s + 1,
            self.t + 1,
            self.u + 1,
            self.v + 1
        )
    }
}

impl FromStr for QuadSelector {
    type Err = Error;

    /// Parses the 1-based `"s,t,u,v"` form.
    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<usize> = text
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                Error::Parse(format!(
                    "selector '{text}' is not four comma-separated integers"
                ))
            })?;
        match parts.as_slice() {
            &[s, t, u, v] if s >= 1 && t >= 1 && u >= 1 && v >= 1 => {
                Self::new(s - 1, t - 1, u - 1, v - 1)
            }
            _ => Err(Error::Parse(format!(
                "selector '{text}' needs four 1-based indices"
            ))),
        }
    }
}

impl Serialize for QuadSelector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn block(c: &StateMatrix, s: usize, t: usize, u: usize, v: usize) -> Block2 {
    Block2([[c.get(s, u), c.get(s, v)], [c.get(t, u), c.get(t, v)]])
}

/// Adjacent block `S^(a,b)` with top-left corner `(a, b)` (0-based).
pub fn submatrix_s(c: &StateMatrix, a: usize, b: usize) -> Result<Block2> {
    if a + 1 >= c.rows() || b + 1 >= c.cols() {
        return Err(Error::IndexOutOfRange(format!(
            "adjacent block at ({a},{b}) does not fit a {}x{} matrix",
            c.rows(),
            c.cols()
        )));
    }
    Ok(block(c, a, a + 1, b, b + 1))
}

/// Stretched block `G^(a,b,α,β)` with rows `a, a+α` and columns `b, b+β` (0-based).
pub fn submatrix_g(
    c: &StateMatrix,
    a: usize,
    b: usize,
    alpha: usize,
    beta: usize,
) -> Result<Block2> {
    if alpha == 0 || beta == 0 {
        return Err(Error::IndexOutOfRange(
            "stretch offsets must be positive".into(),
        ));
    }
    submatrix_q(
        c,
        QuadSelector {
            s: a,
            t: a + alpha,
            u: b,
            v: b + beta,
        },
    )
}

/// Arbitrary block `Q^(s,t,u,v)`.
pub fn submatrix_q(c: &StateMatrix, sel: QuadSelector) -> Result<Block2> {
    sel.check(c.rows(), c.cols())?;
    Ok(block(c, sel.s, sel.t, sel.u, sel.v))
}

/// `Σ_{a,b} |det S^(a,b)|` over all `(n-1)(m-1)` adjacent blocks.
pub fn s_sum(c: &StateMatrix) -> f64 {
    let mut sum = 0.0;
    for a in 0..c.rows().saturating_sub(1) {
        for b in 0..c.cols().saturating_sub(1) {
            sum += block(c, a, a + 1, b, b + 1).det().norm();
        }
    }
    sum
}

/// Stretched blocks that `G` adds on top of `S`: adjacent rows with column
/// stride `β ≥ 2`, and adjacent columns with row stride `α ≥ 2`. Only
/// blocks lying inside the matrix are visited.
fn chi_selectors(rows: usize, cols: usize) -> impl Iterator<Item = QuadSelector> {
    let column_stretched = (0..rows.saturating_sub(1)).flat_map(move |a| {
        (0..cols.saturating_sub(2)).flat_map(move |b| {
            (2..cols.saturating_sub(b)).map(move |beta| QuadSelector {
                s: a,
                t: a + 1,
                u: b,
                v: b + beta,
            })
        })
    });
    let row_stretched = (0..cols.saturating_sub(1)).flat_map(move |b| {
        (0..rows.saturating_sub(2)).flat_map(move |a| {
            (2..rows.saturating_sub(a)).map(move |alpha| QuadSelector {
                s: a,
                t: a + alpha,
                u: b,
                v: b + 1,
            })
        })
    });
    column_stretched.chain(row_stretched)
}

/// `χ(C)`: sum of `|det G|` over the stretched blocks.
pub fn chi(c: &StateMatrix) -> f64 {
    chi_selectors(c.rows(), c.cols())
        .map(|q| block(c, q.s, q.t, q.u, q.v).det().norm())
        .fold(0.0, |acc, d| acc + d)
}

/// Value and verdict of the reduced-matrix criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedCriterion {
    /// `Σ|det S(R)| + Δ(R)`.
    pub value: f64,
    pub separable: bool,
}

/// `Σ_{a,b} |det S^(a,b)(R)| + Δ(R)` on the reduced matrix `R`; separable iff `≤ tol`.
pub fn reduced_criterion(c: &StateMatrix, tol: f64) -> Result<ReducedCriterion> {
    let r = reduce(c, tol)?;
    let value = s_sum(&r.matrix) + f64::from(zero_flag(&r.matrix, tol));
    Ok(ReducedCriterion {
        value,
        separable: value <= tol,
    })
}

/// `Σ_{s<t, u<v} |det Q^(s,t,u,v)|`.
pub fn q_sum(c: &StateMatrix) -> f64 {
    QuadSelector::all(c.rows(), c.cols())
        .map(|q| block(c, q.s, q.t, q.u, q.v).det().norm())
        .fold(0.0, |acc, d| acc + d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparabilityVerdict {
    pub separable: bool,
    pub q_sum: f64,
    /// Block with the largest `|det Q|` when entangled.
    pub witness: Option<QuadSelector>,
    pub tol: f64,
}

/// Final criterion: separable iff `q_sum(C) ≤ tol`.
///
/// When entangled the witness is the selector of largest `|det Q|`, ties
/// going to the lexicographically first selector.
pub fn is_separable(c: &StateMatrix, tol: f64) -> SeparabilityVerdict {
    let mut sum = 0.0;
    let mut best: Option<(f64, QuadSelector)> = None;
    for q in QuadSelector::all(c.rows(), c.cols()) {
        let d = block(c, q.s, q.t, q.u, q.v).det().norm();
        sum += d;
        if best.is_none_or(|(b, _)| d > b) {
            best = Some((d, q));
        }
    }
    let separable = sum <= tol;
    SeparabilityVerdict {
        separable,
        q_sum: sum,
        witness: if separable {
            None
        } else {
            best.map(|(_, q)| q)
        },
        tol,
    }
}

/// Product decomposition `C_iJ ≈ a_i b_J` of a separable state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factorization {
    #[serde(serialize_with = "serialize_complex_vec")]
    pub a: Vec<Complex64>,
    #[serde(serialize_with = "serialize_complex_vec")]
    pub b: Vec<Complex64>,
    /// `max |C_iJ - a_i b_J|`.
    pub residual: f64,
}

pub(crate) fn serialize_complex_vec<S: Serializer>(
    v: &[Complex64],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = serializer.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Recovers `a` and `b` with `C = a ⊗ b` from the reduced matrix `R`:
/// `a` is the first column of `R`, `b` its first row divided by `R_11`.
/// Entries for eliminated rows and columns are exactly zero.
pub fn factorize(c: &StateMatrix, tol: f64) -> Result<Factorization> {
    let verdict = is_separable(c, tol);
    if let Some(witness) = verdict.witness {
        return Err(Error::Entangled { witness });
    }
    let r = reduce(c, tol)?;
    let pivot = r.matrix.get(0, 0);
    if pivot.norm() <= tol {
        return Err(Error::Numerical(format!(
            "reduced matrix has a vanishing corner entry {pivot}"
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; c.rows()];
    let mut b = vec![zero; c.cols()];
    for (k, &i) in r.kept_rows.iter().enumerate() {
        a[i] = r.matrix.get(k, 0);
    }
    for (k, &j) in r.kept_cols.iter().enumerate() {
        b[j] = r.matrix.get(0, k) / pivot;
    }
    let mut residual: f64 = 0.0;
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            residual = residual.max((c.get(i, j) - a[i] * b[j]).norm());
        }
    }
    Ok(Factorization { a, b, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{normalize, outer, random_product_state, random_state, DEFAULT_ZERO_TOL};
    use proptest::prelude::*;

    const TOL: f64 = DEFAULT_ZERO_TOL;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(rows: &[&[f64]]) -> StateMatrix {
        StateMatrix::from_real_rows(rows).unwrap()
    }

    fn bell() -> StateMatrix {
        normalize(&real(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap()
    }

    #[test]
    fn selector_display_parse_and_bounds() {
        let q = QuadSelector::new(0, 1, 0, 2).unwrap();
        assert_eq!(q.to_string(), "1,2,1,3");
        assert_eq!("1,2,1,3".parse::<QuadSelector>().unwrap(), q);
        assert!("0,1,1,2".parse::<QuadSelector>().is_err());
        assert!("2,1,1,2".parse::<QuadSelector>().is_err());
        assert!("1,2,3".parse::<QuadSelector>().is_err());
        assert!(q.check(2, 3).is_ok());
        assert!(q.check(2, 2).is_err());
        assert_eq!(QuadSelector::all(3, 4).count(), QuadSelector::count(3, 4));
        assert_eq!(QuadSelector::count(3, 4), 18);
        assert_eq!(QuadSelector::all(1, 5).count(), 0);
    }

    #[test]
    fn adjacent_blocks() {
        let m = real(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let s = submatrix_s(&m, 0, 0).unwrap();
        assert_eq!(
            s.0,
            [[c(1.0, 0.0), c(2.0, 0.0)], [c(4.0, 0.0), c(5.0, 0.0)]]
        );
        assert!(submatrix_s(&m, 2, 0).is_err());

        let two = random_state(2, 2, 3).unwrap();
        let only = submatrix_s(&two, 0, 0).unwrap();
        assert_eq!(
            only.0,
            [
                [two.get(0, 0), two.get(0, 1)],
                [two.get(1, 0), two.get(1, 1)]
            ]
        );

        let id3 = normalize(&real(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ]))
        .unwrap();
        let s = submatrix_s(&id3, 1, 1).unwrap();
        assert!((s.det() - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.0[0][1], c(0.0, 0.0));
    }

    #[test]
    fn arbitrary_blocks() {
        let m = random_state(3, 4, 8).unwrap();
        let q = submatrix_q(&m, QuadSelector::new(0, 1, 0, 1).unwrap()).unwrap();
        assert_eq!(q, submatrix_s(&m, 0, 0).unwrap());
        assert_eq!(
            submatrix_g(&m, 1, 0, 1, 1).unwrap(),
            submatrix_s(&m, 1, 0).unwrap()
        );

        let half = normalize(&real(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])).unwrap();
        let d = submatrix_q(&half, QuadSelector::new(0, 1, 0, 1).unwrap())
            .unwrap()
            .det();
        assert!((d - c(0.5, 0.0)).norm() < 1e-15);

        assert!(submatrix_q(
            &half,
            QuadSelector {
                s: 0,
                t: 2,
                u: 0,
                v: 1
            }
        )
        .is_err());
        assert!(submatrix_q(
            &half,
            QuadSelector {
                s: 1,
                t: 0,
                u: 0,
                v: 1
            }
        )
        .is_err());
    }

    #[test]
    fn separable_blocks_have_zero_determinant() {
        let a = [c(0.3, 0.1), c(-1.2, 0.4), c(0.7, -0.9)];
        let b = [c(1.0, 1.0), c(0.2, -0.5), c(-0.4, 0.0), c(2.0, 0.3)];
        let m = outer(&a, &b).unwrap();
        for sel in QuadSelector::all(3, 4) {
            assert!(submatrix_q(&m, sel).unwrap().det().norm() < 1e-15);
        }
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(&random_state(2, 2, 1).unwrap()), 0.0);
        let m = normalize(&real(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap();
        assert!((chi(&m) - 0.5).abs() < 1e-15);
        assert!(chi(&random_product_state(3, 4, 2).unwrap()) < 1e-15);
    }

    #[test]
    fn chi_selectors_cover_exactly_the_stretched_blocks() {
        // S ∪ stretched blocks = every block with one adjacent index pair.
        for (n, m) in [(2, 2), (2, 5), (4, 2), (3, 3), (4, 6)] {
            let stretched: Vec<QuadSelector> = chi_selectors(n, m).collect();
            let expected: Vec<QuadSelector> = QuadSelector::all(n, m)
                .filter(|q| (q.t == q.s + 1) != (q.v == q.u + 1))
                .collect();
            let mut got = stretched.clone();
            got.sort();
            assert_eq!(got, expected, "{n}x{m}");
        }
    }

    #[test]
    fn s_sum_examples() {
        let flat = normalize(&real(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(s_sum(&flat) < 1e-16);
        assert!((s_sum(&bell()) - 0.5).abs() < 1e-15);
        let prop = normalize(&real(&[
            &[1.0, 2.0, 4.0],
            &[1.0, 2.0, 4.0],
            &[3.0, 6.0, 12.0],
        ]))
        .unwrap();
        assert!(s_sum(&prop) < 1e-15);
    }

    #[test]
    fn reduced_criterion_examples() {
        // Proportional rows around a zero column.
        let prop = normalize(&real(&[
            &[1.0, 0.0, 2.0],
            &[2.0, 0.0, 4.0],
            &[-3.0, 0.0, -6.0],
        ]))
        .unwrap();
        let r = reduced_criterion(&prop, TOL).unwrap();
        assert!(r.separable && r.value < 1e-15);

        let r = reduced_criterion(&bell(), TOL).unwrap();
        assert!(!r.separable && r.value >= 1.0);

        let r = reduced_criterion(&random_product_state(4, 3, 1).unwrap(), TOL).unwrap();
        assert!(r.separable);

        let zero = real(&[&[0.0]]);
        assert!(reduced_criterion(&zero, TOL).is_err());
    }

    #[test]
    fn q_sum_examples() {
        let row = random_state(1, 5, 4).unwrap();
        assert_eq!(q_sum(&row), 0.0);
        assert!((q_sum(&bell()) - 0.5).abs() < 1e-15);
        let id3 = normalize(&real(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ]))
        .unwrap();
        assert!((q_sum(&id3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn verdicts() {
        let v = is_separable(&random_product_state(4, 4, 9).unwrap(), TOL);
        assert!(v.separable && v.witness.is_none());

        let v = is_separable(&bell(), TOL);
        assert!(!v.separable);
        assert_eq!(v.witness, Some(QuadSelector::new(0, 1, 0, 1).unwrap()));
        assert_eq!(
            v.separable,
            reduced_criterion(&bell(), TOL).unwrap().separable
        );
    }

    #[test]
    fn witness_tie_break_is_lexicographic() {
        // Identity/√3: three selectors tie at |det| = 1/3.
        let id3 = normalize(&real(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ]))
        .unwrap();
        let v = is_separable(&id3, TOL);
        assert_eq!(v.witness.unwrap().to_string(), "1,2,1,2");
    }

    #[test]
    fn factorize_product_state() {
        let m = random_product_state(3, 4, 17).unwrap();
        let f = factorize(&m, TOL).unwrap();
        assert!(f.residual <= 1e-10);
        let rebuilt = outer(&f.a, &f.b).unwrap();
        assert!(rebuilt.max_abs_diff(&m) <= 1e-10);
        assert_eq!(f.b[0], c(1.0, 0.0));
    }

    #[test]
    fn factorize_zero_column_sets_exact_zero() {
        let m = normalize(&real(&[
            &[1.0, 0.0, 2.0],
            &[2.0, 0.0, 4.0],
            &[-3.0, 0.0, -6.0],
        ]))
        .unwrap();
        let f = factorize(&m, TOL).unwrap();
        assert_eq!(f.b[1], c(0.0, 0.0));
        assert!(f.residual < 1e-15);

        let with_zero_row = normalize(&real(&[&[0.0, 0.0], &[1.0, 2.0]])).unwrap();
        let f = factorize(&with_zero_row, TOL).unwrap();
        assert_eq!(f.a[0], c(0.0, 0.0));
        assert!(f.residual < 1e-15);
    }

    #[test]
    fn factorize_entangled_reports_witness() {
        match factorize(&bell(), TOL) {
            Err(Error::Entangled { witness }) => assert_eq!(witness.to_string(), "1,2,1,2"),
            other => panic!("expected witness error, got {other:?}"),
        }
    }

    fn permuted(m: &StateMatrix, rows: &[usize], cols: &[usize]) -> StateMatrix {
        StateMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(rows[i], cols[j])).unwrap()
    }

    proptest! {
        #[test]
        fn q_sum_is_permutation_invariant(
            n in 2usize..6, m in 2usize..6, seed: u64,
            row_perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
            col_perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let s = random_state(n, m, seed).unwrap();
            let rows: Vec<usize> = row_perm.into_iter().filter(|&k| k < n).collect();
            let cols: Vec<usize> = col_perm.into_iter().filter(|&k| k < m).collect();
            let p = permuted(&s, &rows, &cols);
            prop_assert!((q_sum(&p) - q_sum(&s)).abs() <= 1e-12 * q_sum(&s).max(1.0));
        }

        #[test]
        fn q_sum_dominates_s_sum_plus_chi(n in 1usize..6, m in 1usize..6, seed: u64) {
            let s = random_state(n, m, seed).unwrap();
            prop_assert!(q_sum(&s) + 1e-14 >= s_sum(&s) + chi(&s));
        }

        #[test]
        fn adjacent_criterion_matches_final_on_nonzero_matrices(n in 1usize..6, m in 1usize..6, seed: u64, product: bool) {
            let s = if product { random_product_state(n, m, seed) } else { random_state(n, m, seed) }.unwrap();
            prop_assume!(zero_flag(&s, TOL) == 0);
            // Rows proportional chain-wise <=> every adjacent block singular.
            let chain = (1..n).all(|i| {
                (0..m).all(|j| (s.get(0, 0) * s.get(i, j) - s.get(0, j) * s.get(i, 0)).norm() <= 1e-12)
            });
            let by_s = s_sum(&s) <= TOL;
            prop_assert_eq!(by_s, chain);
            prop_assert_eq!(by_s, is_separable(&s, TOL).separable);
            prop_assert_eq!(by_s, product || n == 1 || m == 1);
        }

        #[test]
        fn separable_states_factor(n in 1usize..6, m in 1usize..6, seed: u64) {
            let s = random_product_state(n, m, seed).unwrap();
            prop_assert!(q_sum(&s) < 1e-12);
            let f = factorize(&s, TOL).unwrap();
            prop_assert!(f.residual <= 1e-8);
        }
    }
}
