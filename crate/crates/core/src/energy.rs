//! Energy functional
//!
//! ```text
//! J(u) = D/2 ∫ u_x² + 1/2 ∫ u² - kappa log ∫ e^u
//! ```
//!
//! whose L² gradient flow is the evolution equation, together with its
//! variations and the variational bounds on the diffusivity.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

use crate::basis;
use crate::error::{Error, Result};
use crate::grid::{integrate, laplacian, laplacian_eigenvalue, to_spectral, Field};

/// Largest |u| accepted before evaluating `e^u`.
pub const EXP_LIMIT: f64 = 700.0;

/// Diffusivity `D` and production strength `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    d: f64,
    kappa: f64,
}

impl ModelParams {
    pub fn new(d: f64, kappa: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Config(format!("D must be positive and finite, got {d}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Config(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        Ok(ModelParams { d, kappa })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        ModelParams::new(self.d, kappa)
    }

    pub fn with_d(&self, d: f64) -> Result<Self> {
        ModelParams::new(d, self.kappa)
    }
}

pub(crate) fn check_overflow(u: &Field) -> Result<()> {
    let max_abs = u.norm_inf();
    if max_abs > EXP_LIMIT {
        return Err(Error::Overflow {
            max_abs,
            limit: EXP_LIMIT,
        });
    }
    Ok(())
}

/// `(log ∫ e^u, e^u / ∫ e^u)` evaluated with a max shift.
pub(crate) fn log_partition(u: &Field) -> Result<(f64, Field)> {
    check_overflow(u)?;
    let shift = u.max();
    let w = u.map(|v| libm::exp(v - shift));
    let z = integrate(&w);
    let density = w.map(|v| v / z);
    Ok((libm::log(z) + shift, density))
}

/// Probability density `e^u / ∫ e^u`.
pub fn density(u: &Field) -> Result<Field> {
    Ok(log_partition(u)?.1)
}

/// `∫ u_x²` from the spectrum (Nyquist term included, so this equals the
/// discrete `⟨u, -u_xx⟩`).
pub fn dirichlet_integral(u: &Field) -> f64 {
    let s = to_spectral(u);
    let c = s.coefficients();
    let last = c.len() - 1;
    c.iter()
        .enumerate()
        .map(|(k, ck)| {
            let w = if k == 0 || k == last { 1.0 } else { 2.0 };
            w * laplacian_eigenvalue(k) * ck.norm_sqr()
        })
        .sum()
}

pub fn energy(u: &Field, p: &ModelParams) -> Result<f64> {
    let (log_z, _) = log_partition(u)?;
    let l2 = u.dot(u);
    Ok(0.5 * p.d() * dirichlet_integral(u) + 0.5 * l2 - p.kappa() * log_z)
}

/// L² gradient of the energy, `-(D u_xx - u + kappa e^u / ∫ e^u)`.
pub fn first_variation(u: &Field, p: &ModelParams) -> Result<Field> {
    let (_, rho) = log_partition(u)?;
    let uxx = laplacian(u);
    let (d, kappa) = (p.d(), p.kappa());
    let values = u
        .values()
        .iter()
        .zip(uxx.values())
        .zip(rho.values())
        .map(|((&v, &vxx), &r)| -(d * vxx - v + kappa * r))
        .collect();
    Ok(Field::from_raw(u.grid(), values))
}

/// Second variation of the energy in the truncated eigenbasis (see
/// [`crate::basis`] for the layout), assembled by grid quadrature against the
/// density `p = e^u / ∫ e^u`:
///
/// `H_ij = (1 + D mu_i) δ_ij - kappa (⟨p e_i e_j⟩ - ⟨p e_i⟩⟨p e_j⟩)`.
pub fn hessian_matrix(u: &Field, p: &ModelParams, n_modes: usize) -> Result<DMatrix<f64>> {
    basis::check_modes(u.grid(), n_modes)?;
    let rho = density(u)?;
    let b = basis::sample(u.grid(), n_modes);
    let n = u.len() as f64;
    let size = basis::basis_len(n_modes);
    let mut weighted = b.clone();
    for (j, mut row) in weighted.row_iter_mut().enumerate() {
        row *= rho.values()[j];
    }
    let pee = b.transpose() * &weighted / n;
    let pe: Vec<f64> = (0..size).map(|i| weighted.column(i).sum() / n).collect();
    let mut h = DMatrix::from_fn(size, size, |i, j| {
        -p.kappa() * (pee[(i, j)] - pe[i] * pe[j])
    });
    for i in 0..size {
        h[(i, i)] += 1.0 + p.d() * basis::eigenvalue(i);
    }
    // the constant direction decouples exactly since ⟨p⟩ = 1
    for i in 1..size {
        h[(0, i)] = 0.0;
        h[(i, 0)] = 0.0;
    }
    h[(0, 0)] = 1.0;
    Ok(h)
}

/// Variational bounds on the diffusivity for a given `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsReport {
    pub kappa: f64,
    pub d1: f64,
    pub d2: Option<f64>,
    pub d_min: f64,
    pub d_max: f64,
    pub argmax_n: u64,
}

fn d1_term(kappa: f64, n: u64) -> f64 {
    let nf = n as f64;
    let log4n = libm::log(4.0 * nf);
    (kappa * nf * (SQRT_2 - 1.0) - log4n) / (laplacian_eigenvalue(n as usize) * log4n)
}

/// `d1 = max_N (kappa N (√2 - 1) - log 4N) / (mu_N log 4N)`,
/// `d2 = (kappa - 1) / mu_1` for `kappa > 1`, `d_max = 15 kappa / mu_1`.
pub fn bounds(kappa: f64) -> Result<BoundsReport> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Config(format!("kappa must be positive and finite, got {kappa}")));
    }
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 1;
    let mut prev = f64::NEG_INFINITY;
    let mut decreasing = 0;
    let mut n = 1u64;
    loop {
        let v = d1_term(kappa, n);
        if v > best {
            best = v;
            argmax = n;
        }
        decreasing = if v < prev { decreasing + 1 } else { 0 };
        prev = v;
        if best > 0.0 && n > argmax && decreasing >= 10 {
            break;
        }
        if n >= 100_000_000 {
            return Err(Error::Resolution(format!(
                "d1 scan did not terminate for kappa = {kappa}"
            )));
        }
        n += 1;
    }
    let mu1 = 4.0 * PI * PI;
    let d2 = (kappa > 1.0).then(|| (kappa - 1.0) / mu1);
    let d_min = match d2 {
        Some(d2) => f64::max(best, d2),
        None => best,
    };
    Ok(BoundsReport {
        kappa,
        d1: best,
        d2,
        d_min,
        d_max: 15.0 * kappa / mu1,
        argmax_n: argmax,
    })
}
