//! Slow, independent reference computations.
//!
//! Nothing here shares code with the fast paths it is used to check: the
//! Schmidt rank comes from a one-sided Jacobi SVD, `E^total` from traces of
//! `CC†`, and the CHSH maximum from an exhaustive grid.

use num_complex::Complex64;
use serde::Serialize;

use crate::chsh::{bloch, Bloch, MeasurementSetting};
use crate::error::{Error, Result};
use crate::state::StateMatrix;

const SVD_MAX_SWEEPS: usize = 80;

/// Singular values in descending order and the count above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularProfile {
    pub values: Vec<f64>,
    pub rank: usize,
}

/// Singular values of `C` by one-sided (Hestenes) Jacobi.
pub fn singular_values(c: &StateMatrix) -> Vec<f64> {
    // Orthogonalize the shorter side so the sweep is over the fewer vectors.
    let (vecs, len) = if c.cols() <= c.rows() {
        (c.cols(), c.rows())
    } else {
        (c.rows(), c.cols())
    };
    let mut cols: Vec<Vec<Complex64>> = (0..vecs)
        .map(|k| {
            (0..len)
                .map(|i| {
                    if c.cols() <= c.rows() {
                        c.get(i, k)
                    } else {
                        c.get(k, i).conj()
                    }
                })
                .collect()
        })
        .collect();

    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..vecs {
            for q in p + 1..vecs {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..len {
                    let a = cols[p][i];
                    let b = cols[q][i] * phase.conj();
                    cols[p][i] = a * cs - b * sn;
                    cols[q][i] = a * sn + b * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<f64> = cols
        .iter()
        .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Schmidt rank: singular values above `tol · σ_max`.
pub fn schmidt_rank(c: &StateMatrix, tol: f64) -> SingularProfile {
    let values = singular_values(c);
    let cutoff = tol * values.first().copied().unwrap_or(0.0);
    let rank = values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    SingularProfile { values, rank }
}

/// `((Tr G)² - Tr G²) / 2` with `G = CC†`: the second elementary symmetric
/// polynomial of the squared singular values.
pub fn e_total_gram(c: &StateMatrix) -> f64 {
    let n = c.rows();
    let mut trace = 0.0;
    let mut trace_sq = 0.0;
    for i in 0..n {
        for k in 0..n {
            let g: Complex64 = c
                .row(i)
                .iter()
                .zip(c.row(k))
                .map(|(a, b)| a * b.conj())
                .sum();
            if i == k {
                trace += g.re;
            }
            trace_sq += g.norm_sqr();
        }
    }
    (trace * trace - trace_sq) / 2.0
}

/// Largest grid resolution accepted by [`grid_chsh`].
pub const MAX_GRID_RESOLUTION: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridChsh {
    pub value: f64,
    pub settings: MeasurementSetting,
    pub resolution: usize,
    /// Inner products evaluated.
    pub evaluations: u64,
}

/// Exhaustive CHSH maximum over a `θ × φ` grid of directions.
///
/// Uses the correlation matrix `M_ab = ⟨ψ|σ_a ⊗ σ_b|ψ⟩`, so the objective is
/// `qᵀM(s + t) + rᵀM(s - t)` and `q`, `r` can be maximized separately for
/// each `(s, t)` pair. The result is a lower bound on the true maximum.
pub fn grid_chsh(c: &StateMatrix, resolution: usize) -> Result<GridChsh> {
    if c.rows() != 2 || c.cols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "CHSH needs a 2x2 state, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    if !(2..=MAX_GRID_RESOLUTION).contains(&resolution) {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be in 2..={MAX_GRID_RESOLUTION}, got {resolution}"
        )));
    }
    let m = correlation_matrix(c);
    let mut grid = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let theta = std::f64::consts::PI * i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            grid.push(bloch(
                theta,
                2.0 * std::f64::consts::PI * j as f64 / resolution as f64,
            ));
        }
    }
    let best_along = |u: &Bloch| -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, d) in grid.iter().enumerate() {
            let v = dot(d, u);
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    };

    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    let mut evaluations = 0u64;
    for (is, s) in grid.iter().enumerate() {
        for (it, t) in grid.iter().enumerate() {
            let u = apply(&m, &std::array::from_fn(|k| s[k] + t[k]));
            let w = apply(&m, &std::array::from_fn(|k| s[k] - t[k]));
            let (fq, iq) = best_along(&u);
            let (fr, ir) = best_along(&w);
            evaluations += 2 * grid.len() as u64;
            if fq + fr > best.0 {
                best = (fq + fr, [iq, ir, is, it]);
            }
        }
    }
    let [iq, ir, is, it] = best.1;
    Ok(GridChsh {
        value: best.0,
        settings: MeasurementSetting {
            q: grid[iq],
            r: grid[ir],
            s: grid[is],
            t: grid[it],
        },
        resolution,
        evaluations,
    })
}

fn dot(a: &Bloch, b: &Bloch) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn apply(m: &[[f64; 3]; 3], v: &Bloch) -> Bloch {
    std::array::from_fn(|a| dot(&m[a], v))
}

/// `M_ab = ⟨ψ|σ_a ⊗ σ_b|ψ⟩` for `a, b ∈ {x, y, z}`, built from explicit Pauli matrices.
fn correlation_matrix(c: &StateMatrix) -> [[f64; 3]; 3] {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let paulis = [
        [[zero, one], [one, zero]],
        [[zero, -i], [i, zero]],
        [[one, zero], [zero, -one]],
    ];
    let psi = |a: usize, b: usize| c.get(a, b);
    let mut m = [[0.0; 3]; 3];
    for (a, pa) in paulis.iter().enumerate() {
        for (b, pb) in paulis.iter().enumerate() {
            let mut acc = zero;
            for x1 in 0..2 {
                for x2 in 0..2 {
                    for y1 in 0..2 {
                        for y2 in 0..2 {
                            acc += psi(x1, x2).conj() * pa[x1][y1] * pb[x2][y2] * psi(y1, y2);
                        }
                    }
                }
            }
            m[a][b] = acc.re;
        }
    }
    m
}
