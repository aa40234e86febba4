//! Text projections of the JSON reports. Floats use the shortest
//! round-trip form so each printed number matches its JSON counterpart.

use num_complex::Complex64;

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn list(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")
}

pub fn complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", num(z.re), num(z.im.abs()))
}

pub fn complex_list(zs: &[Complex64]) -> String {
    zs.iter().map(|&z| complex(z)).collect::<Vec<_>>().join(" ")
}

pub fn bloch(v: &[f64; 3]) -> String {
    format!("({}, {}, {})", num(v[0]), num(v[1]), num(v[2]))
}
