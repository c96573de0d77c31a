#![allow(dead_code)]

pub mod oracle;

use mechpattern::{Field, Grid, ModelParams};
use std::f64::consts::PI;

pub fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

pub fn params(d: f64, kappa: f64) -> ModelParams {
    ModelParams::new(d, kappa).unwrap()
}

pub fn cosine(g: &Grid, k: usize, amp: f64, offset: f64) -> Field {
    Field::from_fn(g, |x| offset + amp * (2.0 * PI * k as f64 * x).cos()).unwrap()
}

pub fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / f64::max(a.abs(), b.abs()).max(1e-300)
}

/// Least-squares `c` in `y ≈ c x²`.
pub fn quadratic_coefficient(s: &[f64], y: &[f64]) -> f64 {
    let num: f64 = s.iter().zip(y).map(|(s, y)| s * s * y).sum();
    let den: f64 = s.iter().map(|s| s.powi(4)).sum();
    num / den
}

/// Least-squares `(c, q)` in `y ≈ c x² + q x⁴`, removing the next even term.
pub fn quadratic_quartic_fit(s: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&s, &y) in s.iter().zip(y) {
        let (p2, p4) = (s * s, s.powi(4));
        a11 += p2 * p2;
        a12 += p2 * p4;
        a22 += p4 * p4;
        b1 += p2 * y;
        b2 += p4 * y;
    }
    let det = a11 * a22 - a12 * a12;
    ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
}
