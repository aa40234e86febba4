//! Partial transpose of pure-state density matrices.
//!
//! Composite basis index: `iJ = i·m + J` (row-major over the coefficient
//! matrix, 0-based). With `ρ_{iJ,kL} = C_iJ C*_kL` the partial transpose on
//! the first subsystem is `σ_{iJ,kL} = ρ_{kJ,iL}` and on the second
//! `σ_{iJ,kL} = ρ_{iL,kJ}`.
//!
//! For a pure state the spectrum of `σ` is determined by the Schmidt
//! coefficients, and `Σλ = Σλ² = 1`. A non-negative spectrum therefore forces
//! `{1, 0, …, 0}`, which happens exactly for product states.

use num_complex::Complex64;
use serde::Serialize;

use crate::cubic;
use crate::entanglement::e_total;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
pub use crate::linalg::{hermitian_eigen, hermitian_spectrum, HermitianEigen};
use crate::state::StateMatrix;

/// Default tolerance on the minimum eigenvalue for the PPT verdict.
pub const DEFAULT_PPT_TOL: f64 = 1e-9;

/// `ρ = |ψ⟩⟨ψ|` for a normalized state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rows: usize,
    cols: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    /// Subsystem dimensions `(n, m)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

pub fn density_matrix(c: &StateMatrix) -> Result<DensityMatrix> {
    if !c.is_normalized() {
        return Err(Error::NotNormalized { norm2: c.norm2() });
    }
    let psi = c.data();
    let dim = psi.len();
    let entries = CMatrix::from_fn(dim, dim, |x, y| psi[x] * psi[y].conj());
    Ok(DensityMatrix {
        rows: c.rows(),
        cols: c.cols(),
        entries,
    })
}

/// Which subsystem gets transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    A,
    B,
}

/// `σ = ρ^{T_A}` or `ρ^{T_B}`, with its subsystem shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTranspose {
    pub rows: usize,
    pub cols: usize,
    pub side: Side,
    pub sigma: CMatrix,
}

/// Applies the index swap on the requested side.
pub fn partial_transpose(rho: &DensityMatrix, side: Side) -> PartialTranspose {
    let (n, m) = (rho.rows, rho.cols);
    let dim = n * m;
    let mut sigma = CMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..m {
            for k in 0..n {
                for l in 0..m {
                    let (src_row, src_col) = match side {
                        Side::A => (k * m + j, i * m + l),
                        Side::B => (i * m + l, k * m + j),
                    };
                    sigma[(i * m + j, k * m + l)] = rho.entries[(src_row, src_col)];
                }
            }
        }
    }
    PartialTranspose {
        rows: n,
        cols: m,
        side,
        sigma,
    }
}

/// `σ` together with its spectrum and PPT verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTransposeSpectrum {
    pub transpose: PartialTranspose,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub ppt_positive: bool,
    pub tol: f64,
}

impl PartialTransposeSpectrum {
    pub fn compute(transpose: PartialTranspose, tol: f64) -> Result<Self> {
        let eigenvalues = hermitian_spectrum(&transpose.sigma)?;
        let min_eigenvalue = eigenvalues.last().copied().unwrap_or(0.0);
        Ok(Self {
            ppt_positive: ppt_verdict(&eigenvalues, tol),
            transpose,
            eigenvalues,
            min_eigenvalue,
            tol,
        })
    }
}

/// Density matrix, partial transpose and spectrum in one call.
pub fn ppt_spectrum(c: &StateMatrix, side: Side, tol: f64) -> Result<PartialTransposeSpectrum> {
    let rho = density_matrix(c)?;
    PartialTransposeSpectrum::compute(partial_transpose(&rho, side), tol)
}

/// Positive partial transpose: no eigenvalue below `-tol`.
pub fn ppt_verdict(eigenvalues: &[f64], tol: f64) -> bool {
    eigenvalues.iter().all(|&l| l >= -tol)
}

/// Predicted spectrum of `σ` for a `2 × m` state:
/// `2m - 4` zeros, `±√E`, and `(1 ± √(1 - 4E))/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormSpectrum {
    /// Descending.
    pub values: Vec<f64>,
    pub e_total: f64,
    /// True for `m > 5`.
    pub extrapolated: bool,
}

pub fn closed_form_spectrum_2xm(c: &StateMatrix, tol: f64) -> Result<ClosedFormSpectrum> {
    if c.rows() != 2 || c.cols() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "closed form needs a 2 x m state with m >= 2, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    if !c.is_normalized() {
        return Err(Error::NotNormalized { norm2: c.norm2() });
    }
    let e = e_total(c).total;
    if e > 0.25 + tol {
        return Err(Error::Numerical(format!(
            "E_total = {e} exceeds 1/4, closed form would be complex"
        )));
    }
    let root_e = e.sqrt();
    // 1 - 4E rewritten through the row Gram matrix, free of cancellation near E = 1/4.
    let g11: f64 = c.row(0).iter().map(|z| z.norm_sqr()).sum();
    let g22: f64 = c.row(1).iter().map(|z| z.norm_sqr()).sum();
    let g12: Complex64 = c
        .row(0)
        .iter()
        .zip(c.row(1))
        .map(|(a, b)| a * b.conj())
        .sum();
    let root_gap = ((g11 - g22).powi(2) + 4.0 * g12.norm_sqr()).sqrt();
    let mut values = vec![0.0; 2 * c.cols() - 4];
    values.extend([
        root_e,
        -root_e,
        0.5 * (1.0 + root_gap),
        0.5 * (1.0 - root_gap),
    ]);
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(ClosedFormSpectrum {
        values,
        e_total: e,
        extrapolated: c.cols() > 5,
    })
}

/// Predicted spectrum of `σ` for a `3 × 3` state from two cubics:
/// three eigenvalues are the roots of `x³ - x² + E x - |det C|² = 0`, the other
/// six are `±√y` over the roots of `y³ - E y² + |det C|² y - |det C|⁴ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicSpectrum {
    /// All nine values, descending.
    pub values: Vec<f64>,
    /// Roots of the `x` cubic, descending.
    pub direct_roots: [f64; 3],
    /// Roots of the `y` cubic, descending, before clamping at zero.
    pub squared_roots: [f64; 3],
    pub e_total: f64,
    pub det_sq: f64,
}

const NEGATIVE_ROOT_TOL: f64 = 1e-9;

pub fn cubic_spectrum_3x3(c: &StateMatrix) -> Result<CubicSpectrum> {
    if c.rows() != 3 || c.cols() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "cubic spectrum needs a 3x3 state, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    if !c.is_normalized() {
        return Err(Error::NotNormalized { norm2: c.norm2() });
    }
    let e = e_total(c).total;
    let det_sq = det3(c).norm_sqr();

    let direct = cubic::solve_monic(-1.0, e, -det_sq);
    let mut squared = cubic::solve_monic(-e, det_sq, -det_sq * det_sq);
    // Rank-deficient states put a double root at zero, where ±√y would turn
    // the solver's √ε error into ε^¼; recover the two smaller roots from the largest.
    if squared.all_real() && squared.roots[0] > 0.0 {
        if let Some([y2, y3]) = cubic::remaining_roots(det_sq, -det_sq * det_sq, squared.roots[0]) {
            squared.roots[1] = y2;
            squared.roots[2] = y3;
        }
    }
    if let Some(y) = squared.roots.iter().find(|&&y| y < -NEGATIVE_ROOT_TOL) {
        return Err(Error::Numerical(format!(
            "squared-eigenvalue cubic has negative root {y:e}"
        )));
    }
    let mut values: Vec<f64> = direct.roots.to_vec();
    for y in squared.roots {
        let r = y.max(0.0).sqrt();
        values.extend([r, -r]);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(CubicSpectrum {
        values,
        direct_roots: direct.roots,
        squared_roots: squared.roots,
        e_total: e,
        det_sq,
    })
}

fn det3(c: &StateMatrix) -> Complex64 {
    let m = |i, j| c.get(i, j);
    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
}

/// `(Tr σ, Tr σ²)`; both equal 1 for a normalized pure state.
pub fn trace_checks(sigma: &CMatrix) -> (f64, f64) {
    let trace = sigma.trace().re;
    // Tr σ² = Σ_ij σ_ij σ_ji = Σ_ij |σ_ij|² for Hermitian σ.
    let trace_sq = sigma.as_slice().iter().map(|z| z.norm_sqr()).sum();
    (trace, trace_sq)
}

/// Largest per-eigenvalue deviation between two descending spectra.
pub fn spectrum_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spectra must have equal length");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{normalize, random_product_state, random_state};

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
    fn density_matrix_examples() {
        let rho = density_matrix(&real(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        let mut want = CMatrix::zeros(4, 4);
        want[(0, 0)] = c(1.0, 0.0);
        assert_eq!(rho.entries(), &want);

        let rho = density_matrix(&bell()).unwrap();
        let h = 0.5;
        for (x, y) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((rho.entries()[(x, y)] - c(h, 0.0)).norm() < 1e-15);
        }
        assert!((rho.entries().trace().re - 1.0).abs() < 1e-15);

        assert!(matches!(
            density_matrix(&real(&[&[1.0, 1.0]])),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn density_matrix_invariants() {
        let s = random_state(3, 4, 3).unwrap();
        let rho = density_matrix(&s).unwrap();
        assert!(rho.entries().hermitian_deviation() <= 1e-14);
        assert!((rho.entries().trace().re - 1.0).abs() <= 1e-12);
        let sq = rho.entries() * rho.entries();
        assert!(sq.max_abs_diff(rho.entries()) <= 1e-10);
    }

    #[test]
    fn general_2x2_partial_transpose_layout() {
        // C = [[a, b], [c, d]] gives σ with rows
        // [aa*, ab*, ca*, cb*], [ba*, bb*, da*, db*], [ac*, ad*, cc*, cd*], [bc*, bd*, dc*, dd*]
        let s = normalize(
            &StateMatrix::from_rows(&[[c(0.3, 0.1), c(-0.2, 0.5)], [c(0.7, 0.0), c(0.1, -0.4)]])
                .unwrap(),
        )
        .unwrap();
        let (a, b, cc, d) = (s.get(0, 0), s.get(0, 1), s.get(1, 0), s.get(1, 1));
        let sigma = partial_transpose(&density_matrix(&s).unwrap(), Side::A).sigma;
        let want = [
            [a * a.conj(), a * b.conj(), cc * a.conj(), cc * b.conj()],
            [b * a.conj(), b * b.conj(), d * a.conj(), d * b.conj()],
            [a * cc.conj(), a * d.conj(), cc * cc.conj(), cc * d.conj()],
            [b * cc.conj(), b * d.conj(), d * cc.conj(), d * d.conj()],
        ];
        for (x, row) in want.iter().enumerate() {
            for (y, w) in row.iter().enumerate() {
                assert!((sigma[(x, y)] - w).norm() < 1e-15, "({x},{y})");
            }
        }
    }

    #[test]
    fn bell_partial_transpose_swaps_corners() {
        let sigma = partial_transpose(&density_matrix(&bell()).unwrap(), Side::A).sigma;
        let mut want = CMatrix::zeros(4, 4);
        want[(0, 0)] = c(0.5, 0.0);
        want[(3, 3)] = c(0.5, 0.0);
        want[(1, 2)] = c(0.5, 0.0);
        want[(2, 1)] = c(0.5, 0.0);
        assert!(sigma.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn bell_spectrum() {
        let spec = ppt_spectrum(&bell(), Side::A, DEFAULT_PPT_TOL).unwrap();
        for (got, want) in spec.eigenvalues.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(!spec.ppt_positive);
        assert!((spec.min_eigenvalue + 0.5).abs() < 1e-10);
        let (t, t2) = trace_checks(&spec.transpose.sigma);
        assert!((t - 1.0).abs() < 1e-15 && (t2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_state_spectrum_is_unchanged() {
        let s = random_product_state(3, 2, 5).unwrap();
        let spec = ppt_spectrum(&s, Side::A, DEFAULT_PPT_TOL).unwrap();
        assert!(spec.ppt_positive);
        assert!((spec.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!(spec.eigenvalues[1..].iter().all(|l| l.abs() < 1e-10));
    }

    #[test]
    fn both_sides_compose_to_full_transpose() {
        let s = random_state(2, 3, 8).unwrap();
        let rho = density_matrix(&s).unwrap();
        let a = partial_transpose(&rho, Side::A);
        let rho_a = DensityMatrix {
            rows: 2,
            cols: 3,
            entries: a.sigma.clone(),
        };
        let ab = partial_transpose(&rho_a, Side::B);
        assert!(ab.sigma.max_abs_diff(&rho.entries().transpose()) < 1e-16);
        let full = hermitian_spectrum(&ab.sigma).unwrap();
        assert!((full[0] - 1.0).abs() < 1e-12);

        let spec_a = ppt_spectrum(&s, Side::A, DEFAULT_PPT_TOL).unwrap();
        let spec_b = ppt_spectrum(&s, Side::B, DEFAULT_PPT_TOL).unwrap();
        assert!(spectrum_deviation(&spec_a.eigenvalues, &spec_b.eigenvalues) < 1e-12);
    }

    #[test]
    fn closed_form_2xm_examples() {
        let cf = closed_form_spectrum_2xm(&bell(), 1e-12).unwrap();
        for (got, want) in cf.values.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((got - want).abs() < 1e-14, "{:?}", cf.values);
        }

        let cf = closed_form_spectrum_2xm(&random_product_state(2, 3, 1).unwrap(), 1e-12).unwrap();
        assert_eq!(cf.values.len(), 6);
        assert!((cf.values[0] - 1.0).abs() < 1e-15);
        assert!(cf.values[1..].iter().all(|v| v.abs() < 1e-15));
        assert!(!cf.extrapolated);

        let s = random_state(2, 4, 2).unwrap();
        let cf = closed_form_spectrum_2xm(&s, 1e-12).unwrap();
        let num = ppt_spectrum(&s, Side::A, DEFAULT_PPT_TOL).unwrap();
        assert!(spectrum_deviation(&cf.values, &num.eigenvalues) < 1e-8);

        assert!(closed_form_spectrum_2xm(&random_state(3, 3, 1).unwrap(), 1e-12).is_err());
        assert!(
            closed_form_spectrum_2xm(&random_state(2, 7, 1).unwrap(), 1e-12)
                .unwrap()
                .extrapolated
        );
    }

    #[test]
    fn cubic_spectrum_examples() {
        let cs = cubic_spectrum_3x3(&random_product_state(3, 3, 4).unwrap()).unwrap();
        assert!((cs.values[0] - 1.0).abs() < 1e-12);
        assert!(cs.values[1..].iter().all(|v| v.abs() < 1e-12));

        let id3 = normalize(&real(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ]))
        .unwrap();
        let cs = cubic_spectrum_3x3(&id3).unwrap();
        let third = 1.0 / 3.0;
        let want = [
            third, third, third, third, third, third, -third, -third, -third,
        ];
        assert!(spectrum_deviation(&cs.values, &want) < 1e-8);
        let num = ppt_spectrum(&id3, Side::A, DEFAULT_PPT_TOL).unwrap();
        assert!(spectrum_deviation(&cs.values, &num.eigenvalues) < 1e-8);

        let s = random_state(3, 3, 21).unwrap();
        let cs = cubic_spectrum_3x3(&s).unwrap();
        let num = ppt_spectrum(&s, Side::A, DEFAULT_PPT_TOL).unwrap();
        assert!(spectrum_deviation(&cs.values, &num.eigenvalues) < 1e-8);
        assert!(cs.direct_roots.iter().all(|&x| x >= -1e-12));

        assert!(cubic_spectrum_3x3(&random_state(2, 3, 1).unwrap()).is_err());
    }

    #[test]
    fn cubic_spectrum_of_rank_two_states() {
        let zero_col = normalize(&real(&[
            &[1.0, 0.0, 2.0],
            &[3.0, 0.0, 4.0],
            &[5.0, 0.0, 6.0],
        ]))
        .unwrap();
        let cs = cubic_spectrum_3x3(&zero_col).unwrap();
        let num = ppt_spectrum(&zero_col, Side::A, DEFAULT_PPT_TOL).unwrap();
        assert!(spectrum_deviation(&cs.values, &num.eigenvalues) < 1e-8);

        for seed in 0..50 {
            let a = random_product_state(3, 3, seed).unwrap();
            let b = random_product_state(3, 3, seed + 1000).unwrap();
            let sum = StateMatrix::from_fn(3, 3, |i, j| a.get(i, j) + b.get(i, j)).unwrap();
            let s = normalize(&sum).unwrap();
            let cs = cubic_spectrum_3x3(&s).unwrap();
            let num = ppt_spectrum(&s, Side::A, DEFAULT_PPT_TOL).unwrap();
            assert!(
                spectrum_deviation(&cs.values, &num.eigenvalues) < 1e-8,
                "seed {seed}"
            );
        }
    }
}
