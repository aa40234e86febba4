//! Pure bipartite states as coefficient matrices.
//!
//! A state `|ψ⟩ = Σ C_iJ |i⟩⊗|J⟩` on an `n × m` system is stored as the
//! `n × m` complex matrix `C`, row-major. Rows index the first subsystem and
//! columns the second.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{gaussian_complex, CMatrix};

/// Default modulus below which an entry counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// `|norm2 - 1|` allowed for a matrix to count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-10;

const UNDERFLOW_GUARD: f64 = f64::MIN_POSITIVE;

pub type ComplexScalar = Complex64;

/// The `n × m` coefficient matrix of a pure bipartite state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    norm2: f64,
}

impl StateMatrix {
    /// Validates shape and finiteness, and caches `Σ|C_iJ|²`.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "state must have at least one row and column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} state needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        let norm2 = data.iter().map(|z| z.norm_sqr()).sum();
        Ok(Self {
            rows,
            cols,
            data,
            norm2,
        })
    }

    /// Builds a state from nested rows.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} entries, expected {m}",
                bad + 1,
                rows[bad].as_ref().len()
            )));
        }
        Self::new(
            n,
            m,
            rows.iter()
                .flat_map(|r| r.as_ref().iter().copied())
                .collect(),
        )
    }

    /// Builds a state with real entries from nested rows.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `min(n, m)`, the Schmidt dimension of the system.
    pub fn min_dim(&self) -> usize {
        self.rows.min(self.cols)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Cached `Σ|C_iJ|² = Tr(CC†) = ⟨ψ|ψ⟩`.
    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm2 - 1.0).abs() <= NORMALIZED_TOL
    }

    /// Entry `C_ij` (0-based). Panics when out of range.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        assert!(
            i < self.rows && j < self.cols,
            "entry ({i},{j}) outside {}x{}",
            self.rows,
            self.cols
        );
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
            .expect("transpose keeps validity")
    }

    pub fn scale(&self, factor: Complex64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            self.data.iter().map(|z| z * factor).collect(),
        )
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_vec(self.rows, self.cols, self.data.clone())
    }

    pub fn from_cmatrix(m: &CMatrix) -> Result<Self> {
        Self::new(m.rows(), m.cols(), m.as_slice().to_vec())
    }

    /// Largest `|C_iJ - D_iJ|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Serializes to the JSON state format with 17 significant digits per
    /// component, which round-trips every `f64` exactly.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write!(
            out,
            "{{\"rows\": {}, \"cols\": {}, \"data\": [",
            self.rows, self.cols
        )
        .unwrap();
        for (k, z) in self.data.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            write!(out, "[{:.16e}, {:.16e}]", z.re, z.im).unwrap();
        }
        out.push_str("]}");
        out
    }

    /// Serializes to the plain text format, one row per line.
    pub fn to_plain(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| {
                    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                    format!("{:.16e}{sign}{:.16e}i", z.re, z.im.abs())
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Input formats accepted by [`parse_state`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFormat {
    /// `{"rows": n, "cols": m, "data": [[re, im], ...]}`, row-major.
    Json,
    /// Rows separated by `/` or newlines, entries `a+bi`, `a-bi`, `a` or `bi`.
    Plain,
}

impl StateFormat {
    /// JSON when the first non-blank character is `{`, plain otherwise.
    pub fn detect(text: &[u8]) -> Self {
        match text.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'{') => StateFormat::Json,
            _ => StateFormat::Plain,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonState {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

/// Parses a state. The result is never normalized implicitly.
pub fn parse_state(text: &[u8], format: StateFormat) -> Result<StateMatrix> {
    match format {
        StateFormat::Json => {
            let raw: JsonState =
                serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
            if raw.data.len() != raw.rows * raw.cols {
                return Err(Error::DimensionMismatch(format!(
                    "header says {}x{} but data has {} entries",
                    raw.rows,
                    raw.cols,
                    raw.data.len()
                )));
            }
            StateMatrix::new(
                raw.rows,
                raw.cols,
                raw.data
                    .iter()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect(),
            )
        }
        StateFormat::Plain => {
            let text = std::str::from_utf8(text).map_err(|e| Error::Parse(e.to_string()))?;
            let mut rows = Vec::new();
            for line in text.split(['/', '\n']) {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.is_empty() {
                    continue;
                }
                rows.push(
                    tokens
                        .into_iter()
                        .map(parse_complex_token)
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            if rows.is_empty() {
                return Err(Error::Parse("no entries found".into()));
            }
            StateMatrix::from_rows(&rows)
        }
    }
}

fn parse_real(s: &str, token: &str) -> Result<f64> {
    let value: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad number in entry '{token}'")))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parse(format!("non-finite entry '{token}'")))
    }
}

fn parse_complex_token(token: &str) -> Result<Complex64> {
    let Some(body) = token.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(parse_real(token, token)?, 0.0));
    };
    // The split point is the last sign that does not belong to an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => parse_real(s, token),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(
            parse_real(&body[..k], token)?,
            imag(&body[k..])?,
        )),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Scales `C` by `1/√(Tr CC†)`.
pub fn normalize(state: &StateMatrix) -> Result<StateMatrix> {
    if state.norm2 <= UNDERFLOW_GUARD {
        return Err(Error::InvalidState(
            "cannot normalize the zero state".into(),
        ));
    }
    let factor = 1.0 / state.norm2.sqrt();
    state.scale(Complex64::new(factor, 0.0))
}

/// A state with its all-zero rows and columns removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrix {
    pub matrix: StateMatrix,
    /// Parent row index of each row of `matrix`, ascending.
    pub kept_rows: Vec<usize>,
    /// Parent column index of each column of `matrix`, ascending.
    pub kept_cols: Vec<usize>,
}

/// Eliminates every row and column whose entries all have modulus `≤ tol`.
pub fn reduce(state: &StateMatrix, tol: f64) -> Result<ReducedMatrix> {
    let nonzero = |i: usize, j: usize| state.get(i, j).norm() > tol;
    let kept_rows: Vec<usize> = (0..state.rows)
        .filter(|&i| (0..state.cols).any(|j| nonzero(i, j)))
        .collect();
    let kept_cols: Vec<usize> = (0..state.cols)
        .filter(|&j| (0..state.rows).any(|i| nonzero(i, j)))
        .collect();
    if kept_rows.is_empty() {
        return Err(Error::InvalidState(format!(
            "every entry has modulus <= {tol:e}"
        )));
    }
    let matrix = StateMatrix::from_fn(kept_rows.len(), kept_cols.len(), |i, j| {
        state.get(kept_rows[i], kept_cols[j])
    })?;
    Ok(ReducedMatrix {
        matrix,
        kept_rows,
        kept_cols,
    })
}

/// 0 when every entry has modulus `> tol`, 1 otherwise.
pub fn zero_flag(state: &StateMatrix, tol: f64) -> u8 {
    u8::from(state.data.iter().any(|z| z.norm() <= tol))
}

/// Normalized state with i.i.d. complex Gaussian entries, reproducible per seed.
pub fn random_state(rows: usize, cols: usize, seed: u64) -> Result<StateMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = StateMatrix::from_fn(rows, cols, |_, _| gaussian_complex(&mut rng))?;
    normalize(&raw)
}

/// Normalized product state `a ⊗ b` with Gaussian factors, reproducible per seed.
pub fn random_product_state(rows: usize, cols: usize, seed: u64) -> Result<StateMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Complex64> = (0..rows).map(|_| gaussian_complex(&mut rng)).collect();
    let b: Vec<Complex64> = (0..cols).map(|_| gaussian_complex(&mut rng)).collect();
    normalize(&outer(&a, &b)?)
}

/// `C_iJ = a_i b_J`.
pub fn outer(a: &[Complex64], b: &[Complex64]) -> Result<StateMatrix> {
    StateMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
}
