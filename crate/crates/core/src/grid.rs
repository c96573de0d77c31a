//! Uniform periodic grid on [0, 1), real fields sampled on it, and the
//! half-complex Fourier representation used for differentiation.
//!
//! Spectral convention: a field `f` with nodal values `f_j = f(j / n)` is
//! written `f(x) = sum_k c_k exp(2 pi i k x)` with
//! `c_k = (1/n) sum_j f_j exp(-2 pi i k j / n)`. Only `k = 0 ..= n/2` is
//! stored; negative wavenumbers follow from conjugate symmetry.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 256;

/// Uniform periodic grid with `n_points` nodes `x_j = j / n_points`.
///
/// Cloning is cheap: the FFT tables are shared behind an `Arc`.
#[derive(Clone)]
pub struct Grid {
    plan: Arc<Plan>,
}

struct Plan {
    n: usize,
    /// `exp(-2 pi i k / n)` for `k < n / 2`.
    twiddles: Vec<Complex64>,
    /// Bit reversal permutation for the half-length complex transform.
    bitrev: Vec<usize>,
}

impl Grid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 8, got {n_points}"
            )));
        }
        let twiddles = (0..n_points / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / n_points as f64;
                Complex64::new(libm::cos(theta), libm::sin(theta))
            })
            .collect();
        let half = n_points / 2;
        let bits = half.trailing_zeros();
        let bitrev = (0..half)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Ok(Grid {
            plan: Arc::new(Plan {
                n: n_points,
                twiddles,
                bitrev,
            }),
        })
    }

    pub fn n_points(&self) -> usize {
        self.plan.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.plan.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.plan.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.plan.n).map(|j| self.node(j)).collect()
    }

    /// Number of stored half-spectrum coefficients, `n_points / 2 + 1`.
    pub fn n_coefficients(&self) -> usize {
        self.plan.n / 2 + 1
    }

    /// In-place complex DFT of length `n / 2` (unnormalized).
    fn half_fft(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = &*self.plan;
        let m = buf.len();
        debug_assert_eq!(m, plan.n / 2);
        for i in 0..m {
            let j = plan.bitrev[i];
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= m {
            let half = len / 2;
            // twiddle for exp(-2 pi i k / len) lives at index k * n / len
            let stride = plan.n / len;
            for start in (0..m).step_by(len) {
                for k in 0..half {
                    let mut w = plan.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// Unnormalized real-input DFT, returning `X_k` for `k = 0 ..= n/2`.
    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.plan.n;
        let m = n / 2;
        let mut z: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(values[2 * j], values[2 * j + 1]))
            .collect();
        self.half_fft(&mut z, false);
        let mut out = vec![Complex64::new(0.0, 0.0); m + 1];
        for k in 0..=m {
            let zk = z[k % m];
            let zc = z[(m - k) % m].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * Complex64::new(0.0, -0.5);
            let w = if k < m {
                self.plan.twiddles[k]
            } else {
                Complex64::new(-1.0, 0.0)
            };
            out[k] = even + w * odd;
        }
        out
    }

    /// Inverse of [`Grid::forward_real`]: real values from `X_k`, `k = 0 ..= n/2`.
    pub(crate) fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.plan.n;
        let m = n / 2;
        let mut x: Vec<Complex64> = coeffs.to_vec();
        x[0].im = 0.0;
        x[m].im = 0.0;
        let mut z: Vec<Complex64> = (0..m)
            .map(|k| {
                let xk = x[k];
                let xc = x[m - k].conj();
                let even = (xk + xc) * 0.5;
                let odd = (xk - xc) * 0.5 * self.plan.twiddles[k].conj();
                even + Complex64::new(0.0, 1.0) * odd
            })
            .collect();
        self.half_fft(&mut z, true);
        let scale = 1.0 / m as f64;
        let mut out = vec![0.0; n];
        for j in 0..m {
            out[2 * j] = z[j].re * scale;
            out[2 * j + 1] = z[j].im * scale;
        }
        out
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.plan.n == other.plan.n
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n_points", &self.plan.n).finish()
    }
}

/// Real field sampled on a [`Grid`]. All values are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Config(format!(
                "field has {} values but the grid has {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite field value at node {j}")));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![c; grid.n_points()],
        }
    }

    /// Caller guarantees length and finiteness.
    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        integrate(self)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Max minus min.
    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Discrete L² norm on the unit interval, `sqrt(mean(f²))`.
    pub fn norm_l2(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64)
    }

    /// Discrete L² inner product, `mean(f g)`.
    pub fn dot(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        Field::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Projection onto fields symmetric under `x -> 1 - x`.
    pub fn symmetrized(&self) -> Field {
        let n = self.len();
        let values = (0..n)
            .map(|j| 0.5 * (self.values[j] + self.values[(n - j) % n]))
            .collect();
        Field::from_raw(&self.grid, values)
    }

    /// Largest deviation from `x -> 1 - x` symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| (self.values[j] - self.values[(n - j) % n]).abs())
            .fold(0.0, f64::max)
    }
}

/// Half-complex spectrum of a real field, coefficients `k = 0 ..= n/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: &Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.n_coefficients() {
            return Err(Error::Config(format!(
                "spectrum needs {} coefficients, got {}",
                grid.n_coefficients(),
                coefficients.len()
            )));
        }
        Ok(Spectrum {
            grid: grid.clone(),
            coefficients,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Mean square of the represented field, via Parseval.
    pub fn power(&self) -> f64 {
        let m = self.coefficients.len() - 1;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = if k == 0 || k == m { 1.0 } else { 2.0 };
                w * c.norm_sqr()
            })
            .sum()
    }

    fn scaled(&self, factor: impl Fn(usize) -> Complex64) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coefficients: self
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c * factor(k))
                .collect(),
        }
    }
}

/// Laplacian eigenvalue `mu_k = 4 pi^2 k^2` of the periodic unit interval.
pub fn laplacian_eigenvalue(k: usize) -> f64 {
    let w = 2.0 * PI * k as f64;
    w * w
}

pub fn to_spectral(f: &Field) -> Spectrum {
    let scale = 1.0 / f.len() as f64;
    let coefficients = f
        .grid
        .forward_real(&f.values)
        .into_iter()
        .map(|c| c * scale)
        .collect();
    Spectrum {
        grid: f.grid.clone(),
        coefficients,
    }
}

pub fn from_spectral(s: &Spectrum) -> Field {
    let n = s.grid.n_points() as f64;
    let scaled: Vec<Complex64> = s.coefficients.iter().map(|c| c * n).collect();
    Field::from_raw(&s.grid, s.grid.inverse_real(&scaled))
}

/// Multiplies coefficient `k` by `-(2 pi k)^2`.
pub fn second_derivative(s: &Spectrum) -> Spectrum {
    s.scaled(|k| Complex64::new(-laplacian_eigenvalue(k), 0.0))
}

/// Multiplies coefficient `k` by `2 pi i k`; the Nyquist coefficient is dropped.
pub fn first_derivative(s: &Spectrum) -> Spectrum {
    let nyquist = s.coefficients.len() - 1;
    s.scaled(|k| {
        if k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * k as f64)
        }
    })
}

/// Integral over the unit interval; the grid mean (periodic trapezoid rule).
pub fn integrate(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() / f.len() as f64
}

/// `u_xx` evaluated spectrally.
pub fn laplacian(u: &Field) -> Field {
    from_spectral(&second_derivative(&to_spectral(u)))
}

/// `u_x` evaluated spectrally.
pub fn gradient(u: &Field) -> Field {
    from_spectral(&first_derivative(&to_spectral(u)))
}
