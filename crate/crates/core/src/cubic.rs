//! Real roots of monic cubics `x³ + a x² + b x + c`.
//!
//! The depressed cubic `t³ + p t + q` (with `x = t - a/3`) is solved with the
//! trigonometric form when it has three real roots and with Cardano's formula
//! otherwise. Every root then gets one Newton step against the original
//! polynomial.

use std::f64::consts::PI;

/// Roots of a monic cubic, sorted descending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoots {
    /// All three roots. When the cubic has a complex pair, its two entries
    /// hold the shared real part.
    pub roots: [f64; 3],
    /// Imaginary part of the complex pair; zero when all roots are real.
    pub imag: f64,
}

impl CubicRoots {
    pub fn all_real(&self) -> bool {
        self.imag == 0.0
    }
}

/// Coefficient size below which `p` and `q` are treated as exact zeros,
/// relative to the natural scale of the cubic.
const DEGENERATE_REL: f64 = 1e-14;

pub fn solve_monic(a: f64, b: f64, c: f64) -> CubicRoots {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;

    // Scale of the roots, used to decide when p and q are only rounding noise.
    let scale = a.abs().max(b.abs().sqrt()).max(c.abs().cbrt());
    let (mut roots, imag) =
        if p.abs() <= DEGENERATE_REL * scale * scale && q.abs() <= DEGENERATE_REL * scale.powi(3) {
            ([-shift; 3], 0.0)
        } else {
            let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
            if disc <= 0.0 {
                // Three real roots (p < 0 here unless p = q = 0, handled above).
                let r = 2.0 * (-p / 3.0).sqrt();
                let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
                let phi = arg.acos() / 3.0;
                let t = [
                    r * phi.cos(),
                    r * (phi - 2.0 * PI / 3.0).cos(),
                    r * (phi - 4.0 * PI / 3.0).cos(),
                ];
                ([t[0] - shift, t[1] - shift, t[2] - shift], 0.0)
            } else {
                let sq = disc.sqrt();
                let u = (-q / 2.0 + sq).cbrt();
                let v = (-q / 2.0 - sq).cbrt();
                let real = u + v - shift;
                let pair = -(u + v) / 2.0 - shift;
                let imag = (u - v).abs() * 3f64.sqrt() / 2.0;
                ([real, pair, pair], imag)
            }
        };

    if imag == 0.0 {
        for x in &mut roots {
            *x = newton_step(a, b, c, *x);
        }
    } else {
        roots[0] = newton_step(a, b, c, roots[0]);
    }
    roots.sort_by(|x, y| y.total_cmp(x));
    CubicRoots { roots, imag }
}

fn newton_step(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let f = ((x + a) * x + b) * x + c;
    let df = (3.0 * x + 2.0 * a) * x + b;
    if df == 0.0 || !df.is_finite() {
        return x;
    }
    let next = x - f / df;
    // Only accept the step if it does not make the residual worse.
    let f_next = ((next + a) * next + b) * next + c;
    if f_next.abs() <= f.abs() {
        next
    } else {
        x
    }
}

/// Evaluates `x³ + a x² + b x + c`.
/// Given one root `r ≠ 0` of `x³ + ax² + bx + c`, the other two from
/// `x₂x₃ = -c/r` and `x₂ + x₃ = (b - x₂x₃)/r`. Neither relation cancels when
/// the remaining roots are small, unlike the closed-form solution near a
/// double root. `None` when the pair is complex or `r` is zero.
pub fn remaining_roots(b: f64, c: f64, r: f64) -> Option<[f64; 2]> {
    if r == 0.0 {
        return None;
    }
    let product = -c / r;
    let sum = (b - product) / r;
    let disc = sum * sum - 4.0 * product;
    if disc < -1e-12 * sum * sum.max(product.abs()) {
        return None;
    }
    let q = 0.5 * (sum + sum.signum() * disc.max(0.0).sqrt());
    let pair = if q == 0.0 {
        [0.0, 0.0]
    } else {
        [q, product / q]
    };
    Some(if pair[0] >= pair[1] {
        pair
    } else {
        [pair[1], pair[0]]
    })
}

pub fn eval_monic(a: f64, b: f64, c: f64, x: f64) -> f64 {
    ((x + a) * x + b) * x + c
}
