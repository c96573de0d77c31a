//! Independent evaluation of the branch map
//! `G(chi, alpha) = D chi'' - (kappa_n + alpha) - chi + (kappa_n + alpha) e^chi / ∫ e^chi`
//! and its derivatives at `(chi, alpha)`, by grid quadrature.
//!
//! Notation: `p = e^chi / ∫ e^chi`, `m_h = ∫ h p`, `cov`, `var` and `mu3`
//! are moments under `p`.

#![allow(dead_code)]

use mechpattern::grid::laplacian;
use mechpattern::{Field, Grid};
use std::f64::consts::{PI, SQRT_2};

pub struct Map {
    pub d: f64,
    pub kappa_n: f64,
}

fn weights(chi: &Field) -> Vec<f64> {
    let shift = chi.max();
    let w: Vec<f64> = chi.values().iter().map(|v| (v - shift).exp()).collect();
    let z: f64 = w.iter().sum::<f64>() / w.len() as f64;
    w.into_iter().map(|v| v / z).collect()
}

fn mean_p(p: &[f64], h: &Field) -> f64 {
    p.iter().zip(h.values()).map(|(p, h)| p * h).sum::<f64>() / p.len() as f64
}

fn field(g: &Grid, v: Vec<f64>) -> Field {
    Field::new(g, v).unwrap()
}

impl Map {
    pub fn g(&self, chi: &Field, alpha: f64) -> Field {
        let k = self.kappa_n + alpha;
        let p = weights(chi);
        let lap = laplacian(chi);
        let v = (0..chi.len())
            .map(|j| self.d * lap.values()[j] - k - chi.values()[j] + k * p[j])
            .collect();
        field(chi.grid(), v)
    }

    pub fn g_chi(&self, chi: &Field, alpha: f64, h: &Field) -> Field {
        let k = self.kappa_n + alpha;
        let p = weights(chi);
        let m = mean_p(&p, h);
        let lap = laplacian(h);
        let v = (0..h.len())
            .map(|j| self.d * lap.values()[j] - h.values()[j] + k * p[j] * (h.values()[j] - m))
            .collect();
        field(h.grid(), v)
    }

    pub fn g_chichi(&self, chi: &Field, alpha: f64, h1: &Field, h2: &Field) -> Field {
        let k = self.kappa_n + alpha;
        let p = weights(chi);
        let (m1, m2) = (mean_p(&p, h1), mean_p(&p, h2));
        let c1 = h1.map(|v| v - m1);
        let c2 = h2.map(|v| v - m2);
        let cov = mean_p(&p, &c1.zip_map(&c2, |a, b| a * b));
        let v = (0..h1.len())
            .map(|j| k * p[j] * (c1.values()[j] * c2.values()[j] - cov))
            .collect();
        field(h1.grid(), v)
    }

    /// Diagonal third derivative `G_chichichi(h, h, h)`.
    pub fn g_chichichi(&self, chi: &Field, alpha: f64, h: &Field) -> Field {
        let k = self.kappa_n + alpha;
        let p = weights(chi);
        let m = mean_p(&p, h);
        let c = h.map(|v| v - m);
        let var = mean_p(&p, &c.map(|v| v * v));
        let mu3 = mean_p(&p, &c.map(|v| v * v * v));
        let v = (0..h.len())
            .map(|j| {
                let cj = c.values()[j];
                k * p[j] * (cj * cj * cj - 3.0 * cj * var - mu3)
            })
            .collect();
        field(h.grid(), v)
    }

    /// `G_chialpha(0, 0) h = h - ∫ h`.
    pub fn g_chialpha_at_origin(&self, h: &Field) -> Field {
        let m = h.mean();
        h.map(|v| v - m)
    }
}

/// Second-order correction `z` solving `2 G_chi(0,0) z = -G_chichi(0,0)(phi, phi)`,
/// with the kernel direction `cos(2πnx)` removed.
pub fn second_order_correction(map: &Map, g: &Grid, n: usize) -> Field {
    let zero = Field::constant(g, 0.0);
    let phi = kernel(g, n);
    let rhs = map.g_chichi(&zero, 0.0, &phi, &phi).map(|v| -0.5 * v);
    let s = mechpattern::to_spectral(&rhs);
    let coeffs: Vec<_> = s
        .coefficients()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k == 0 {
                // G_chi on constants is multiplication by -1
                -c
            } else if k == n {
                c * 0.0
            } else {
                let denom = map.kappa_n - 1.0 - map.d * mechpattern::laplacian_eigenvalue(k);
                c / denom
            }
        })
        .collect();
    mechpattern::from_spectral(&mechpattern::Spectrum::new(g, coeffs).unwrap())
}

pub fn kernel(g: &Grid, n: usize) -> Field {
    Field::from_fn(g, |x| SQRT_2 * (2.0 * PI * n as f64 * x).cos()).unwrap()
}

/// Second derivative of `kappa(s)` at the bifurcation point, projecting the
/// third-order expansion onto the kernel direction. `third_order_factor` is
/// the coefficient multiplying `alpha''` in that expansion.
pub fn projected_alpha_pp(map: &Map, g: &Grid, n: usize, third_order_factor: f64) -> f64 {
    let zero = Field::constant(g, 0.0);
    let phi = kernel(g, n);
    let z = second_order_correction(map, g, n);
    let cubic = phi.dot(&map.g_chichichi(&zero, 0.0, &phi));
    let mixed = phi.dot(&map.g_chichi(&zero, 0.0, &phi, &z));
    let transversal = phi.dot(&map.g_chialpha_at_origin(&phi));
    -(cubic + 6.0 * mixed) / (third_order_factor * transversal)
}
