//! CHSH operator on qubit-qubit states and its maximal expectation.
//!
//! With Bloch directions `q, r` on the first qubit and `s, t` on the second,
//! `CHSH = (Q + R) ⊗ S + (Q - R) ⊗ T` where `Q = q·σ` and so on. For a 2×2
//! coefficient matrix `C` the maximum of `⟨ψ|CHSH|ψ⟩` over all settings is
//! `2√(⟨ψ|ψ⟩² + 4|det C|²)`. [`chsh_optimize`] searches the settings
//! numerically so the closed form can be checked independently.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::criteria::{submatrix_q, QuadSelector};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::state::StateMatrix;

const UNIT_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-12;

/// A Bloch direction: real 3-vector of unit length.
pub type Bloch = [f64; 3];

/// Four measurement directions: `q`, `r` for the first qubit, `s`, `t` for the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementSetting {
    pub q: Bloch,
    pub r: Bloch,
    pub s: Bloch,
    pub t: Bloch,
}

impl MeasurementSetting {
    pub fn new(q: Bloch, r: Bloch, s: Bloch, t: Bloch) -> Result<Self> {
        for (name, v) in [("q", q), ("r", r), ("s", s), ("t", t)] {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "direction {name} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { q, r, s, t })
    }

    /// Builds the setting from `(θ, φ)` pairs for `q, r, s, t` in that order.
    pub fn from_angles(angles: &[f64; 8]) -> Self {
        let dir = |k: usize| bloch(angles[2 * k], angles[2 * k + 1]);
        Self {
            q: dir(0),
            r: dir(1),
            s: dir(2),
            t: dir(3),
        }
    }
}

/// Unit vector at polar angle `theta` and azimuth `phi`.
pub fn bloch(theta: f64, phi: f64) -> Bloch {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// `n·σ = [[z, x - iy], [x + iy, -z]]`.
pub fn pauli_dot(n: &Bloch) -> CMatrix {
    let [x, y, z] = *n;
    CMatrix::from_vec(
        2,
        2,
        vec![
            Complex64::new(z, 0.0),
            Complex64::new(x, -y),
            Complex64::new(x, y),
            Complex64::new(-z, 0.0),
        ],
    )
}

/// `(Q + R) ⊗ S + (Q - R) ⊗ T` in the basis `|i⟩⊗|J⟩ ↦ 2i + J`.
pub fn chsh_operator(settings: &MeasurementSetting) -> CMatrix {
    let plus: Bloch = std::array::from_fn(|k| settings.q[k] + settings.r[k]);
    let minus: Bloch = std::array::from_fn(|k| settings.q[k] - settings.r[k]);
    let a = pauli_dot(&plus).kron(&pauli_dot(&settings.s));
    let b = pauli_dot(&minus).kron(&pauli_dot(&settings.t));
    CMatrix::from_fn(4, 4, |i, j| a[(i, j)] + b[(i, j)])
}

fn require_two_qubits(c: &StateMatrix) -> Result<()> {
    if c.rows() != 2 || c.cols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "CHSH needs a 2x2 state, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    Ok(())
}

/// `⟨ψ|CHSH|ψ⟩` with `ψ` the row-major flattening of `C` (no normalization).
pub fn chsh_expectation(c: &StateMatrix, settings: &MeasurementSetting) -> Result<f64> {
    require_two_qubits(c)?;
    let op = chsh_operator(settings);
    let psi = c.data();
    let mut value = Complex64::new(0.0, 0.0);
    for x in 0..4 {
        for y in 0..4 {
            value += psi[x].conj() * op[(x, y)] * psi[y];
        }
    }
    if value.im.abs() > IMAG_TOL * c.norm2().max(1.0) {
        return Err(Error::Numerical(format!(
            "expectation has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// `2√(⟨ψ|ψ⟩² + 4|det C|²)`.
pub fn chsh_max_closed(c: &StateMatrix) -> Result<f64> {
    require_two_qubits(c)?;
    let det = c.get(0, 0) * c.get(1, 1) - c.get(0, 1) * c.get(1, 0);
    Ok(2.0 * (c.norm2().powi(2) + 4.0 * det.norm_sqr()).sqrt())
}

/// Search effort for [`chsh_optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Independent random starting points.
    pub restarts: usize,
    /// Maximum coordinate sweeps per start.
    pub passes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            restarts: 20,
            passes: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshResult {
    pub settings: MeasurementSetting,
    pub achieved: f64,
    pub closed_form_max: f64,
    /// `closed_form_max - achieved`.
    pub gap: f64,
    /// Number of expectation evaluations spent.
    pub evaluations: u64,
}

/// Samples per coordinate used to bracket the maximum before golden-section.
const SCAN_POINTS: usize = 12;
const GOLDEN_ITERS: usize = 48;
const POLE_GUARD: f64 = 1e-6;

struct Objective<'a> {
    psi: &'a [Complex64],
    evaluations: u64,
}

impl Objective<'_> {
    fn eval(&mut self, angles: &[f64; 8]) -> f64 {
        self.evaluations += 1;
        let op = chsh_operator(&MeasurementSetting::from_angles(angles));
        let mut value = 0.0;
        for x in 0..4 {
            let mut row = Complex64::new(0.0, 0.0);
            for y in 0..4 {
                row += op[(x, y)] * self.psi[y];
            }
            value += (self.psi[x].conj() * row).re;
        }
        value
    }

    /// Maximizes along coordinate `k`: a coarse periodic scan brackets the
    /// best sample, golden-section refines inside the bracket.
    fn line_search(&mut self, angles: &mut [f64; 8], current: f64, k: usize) -> f64 {
        // Both angles are scanned over a full turn; θ past π is still a valid direction.
        let step = 2.0 * std::f64::consts::PI / SCAN_POINTS as f64;
        let origin = angles[k];
        let mut best = (current, 0.0);
        let mut probe = *angles;
        for j in 1..SCAN_POINTS {
            probe[k] = origin + j as f64 * step;
            let f = self.eval(&probe);
            if f > best.0 {
                best = (f, j as f64 * step);
            }
        }
        let (mut lo, mut hi) = (best.1 - step, best.1 + step);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        probe[k] = origin + x1;
        let mut f1 = self.eval(&probe);
        probe[k] = origin + x2;
        let mut f2 = self.eval(&probe);
        for _ in 0..GOLDEN_ITERS {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                probe[k] = origin + x1;
                f1 = self.eval(&probe);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                probe[k] = origin + x2;
                f2 = self.eval(&probe);
            }
        }
        let (f_refined, x_refined) = if f1 >= f2 { (f1, x1) } else { (f2, x2) };
        let (f_new, offset) = if f_refined > best.0 {
            (f_refined, x_refined)
        } else {
            best
        };
        if f_new > current {
            angles[k] = origin + offset;
            f_new
        } else {
            current
        }
    }
}

/// Multi-start coordinate-wise search over the eight spherical angles.
///
/// Restart `k` draws its starting point from a generator seeded with
/// `(seed, k)`, so a larger budget with the same seed explores a superset of
/// the trajectories of a smaller one. The best restart wins, ties going to
/// the lowest restart index.
pub fn chsh_optimize(c: &StateMatrix, budget: Budget, seed: u64) -> Result<ChshResult> {
    require_two_qubits(c)?;
    if budget.restarts == 0 || budget.passes == 0 {
        return Err(Error::InvalidArgument(
            "budget needs at least one restart and one pass".into(),
        ));
    }
    let closed_form_max = chsh_max_closed(c)?;
    let mut objective = Objective {
        psi: c.data(),
        evaluations: 0,
    };
    let mut best: Option<(f64, [f64; 8])> = None;

    for restart in 0..budget.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let mut angles = [0.0; 8];
        for k in 0..4 {
            angles[2 * k] = rng.random_range(0.0..std::f64::consts::PI);
            angles[2 * k + 1] = rng.random_range(0.0..2.0 * std::f64::consts::PI);
        }
        let mut value = objective.eval(&angles);
        for _ in 0..budget.passes {
            let before = value;
            for k in 0..8 {
                if k % 2 == 1 && angles[k - 1].sin().abs() < POLE_GUARD {
                    // Azimuth is meaningless at a pole; move it somewhere useful.
                    let mut trial = angles;
                    trial[k] = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                    let f = objective.eval(&trial);
                    if f >= value {
                        angles = trial;
                        value = f;
                    }
                }
                value = objective.line_search(&mut angles, value, k);
            }
            if value - before <= 0.0 {
                break;
            }
        }
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, angles));
        }
    }

    let (achieved, angles) = best.expect("at least one restart");
    Ok(ChshResult {
        settings: MeasurementSetting::from_angles(&angles),
        achieved,
        closed_form_max,
        gap: closed_form_max - achieved,
        evaluations: objective.evaluations,
    })
}

/// CHSH search on one 2×2 block of a larger state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmatrixChsh {
    pub selector: QuadSelector,
    /// `⟨ψ|ψ⟩` of the block, i.e. `Tr(QQ†)`.
    pub block_norm2: f64,
    /// `E^sel = |det Q|²`.
    pub e_param: f64,
    pub result: ChshResult,
}

impl SubmatrixChsh {
    /// Recovers `|det Q|²` from the measured maximum and the block norm.
    pub fn e_from_maximum(&self) -> f64 {
        ((self.result.achieved / 2.0).powi(2) - self.block_norm2.powi(2)) / 4.0
    }
}

/// Runs [`chsh_optimize`] on the unnormalized block `Q^sel` of `C`.
pub fn submatrix_chsh(
    c: &StateMatrix,
    sel: QuadSelector,
    budget: Budget,
    seed: u64,
) -> Result<SubmatrixChsh> {
    let block = submatrix_q(c, sel)?;
    let sub = StateMatrix::from_rows(&block.0)?;
    let result = chsh_optimize(&sub, budget, seed)?;
    Ok(SubmatrixChsh {
        selector: sel,
        block_norm2: sub.norm2(),
        e_param: block.det().norm_sqr(),
        result,
    })
}
