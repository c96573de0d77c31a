//! Truncated trigonometric eigenbasis of the periodic Laplacian.
//!
//! Index 0 is the constant `1`; index `2k - 1` is `√2 cos(2πkx)` and index
//! `2k` is `√2 sin(2πkx)` for `k = 1..=n_modes`. The basis is L²-orthonormal
//! and `-∂xx` acts diagonally with eigenvalue `4π²k²`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{laplacian_eigenvalue, to_spectral, Field, Grid};

/// Default truncation: `n_points / 4` modes, the finest the grid supports.
pub fn default_modes(grid: &Grid) -> usize {
    grid.n_points() / 4
}

pub fn check_modes(grid: &Grid, n_modes: usize) -> Result<()> {
    if n_modes == 0 || n_modes > grid.n_points() / 4 {
        return Err(Error::Config(format!(
            "n_modes must be in 1..={} for a {}-point grid, got {n_modes}",
            grid.n_points() / 4,
            grid.n_points()
        )));
    }
    Ok(())
}

/// Number of basis functions, `2 n_modes + 1`.
pub fn basis_len(n_modes: usize) -> usize {
    2 * n_modes + 1
}

/// Wavenumber of basis function `i`.
pub fn wavenumber(i: usize) -> usize {
    (i + 1) / 2
}

pub fn is_sine(i: usize) -> bool {
    i > 0 && i % 2 == 0
}

/// Laplacian eigenvalue attached to basis function `i`.
pub fn eigenvalue(i: usize) -> f64 {
    laplacian_eigenvalue(wavenumber(i))
}

/// Basis function `i` evaluated at `x`.
pub fn eval(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let theta = 2.0 * PI * wavenumber(i) as f64 * x;
    if is_sine(i) {
        SQRT_2 * libm::sin(theta)
    } else {
        SQRT_2 * libm::cos(theta)
    }
}

/// Basis functions sampled on the grid, one column per function.
pub fn sample(grid: &Grid, n_modes: usize) -> DMatrix<f64> {
    let nodes = grid.nodes();
    DMatrix::from_fn(grid.n_points(), basis_len(n_modes), |j, i| eval(i, nodes[j]))
}

/// Basis function `i` as a field.
pub fn field(grid: &Grid, i: usize) -> Field {
    let values = grid.nodes().into_iter().map(|x| eval(i, x)).collect();
    Field::from_raw(grid, values)
}

/// Coordinates `⟨f, e_i⟩` of a field in the truncated basis.
pub fn project(f: &Field, n_modes: usize) -> Vec<f64> {
    let s = to_spectral(f);
    let c = s.coefficients();
    (0..basis_len(n_modes))
        .map(|i| {
            if i == 0 {
                c[0].re
            } else if is_sine(i) {
                -SQRT_2 * c[wavenumber(i)].im
            } else {
                SQRT_2 * c[wavenumber(i)].re
            }
        })
        .collect()
}

/// Field with the given basis coordinates.
pub fn synthesize(grid: &Grid, coords: &[f64]) -> Field {
    let nodes = grid.nodes();
    let values = nodes
        .iter()
        .map(|&x| coords.iter().enumerate().map(|(i, c)| c * eval(i, x)).sum())
        .collect();
    Field::from_raw(grid, values)
}

/// Galerkin matrix `⟨a e_i e_j⟩` of multiplication by `a`, assembled from
/// the Fourier coefficients of `a` with product-to-sum identities.
pub fn multiplication_matrix(a: &Field, n_modes: usize) -> DMatrix<f64> {
    let s = to_spectral(a);
    let c = s.coefficients();
    // mean(a cos 2πqx) and mean(a sin 2πqx), extended to negative q
    let cos_mean = |q: isize| c[q.unsigned_abs()].re;
    let sin_mean = |q: isize| {
        let v = -c[q.unsigned_abs()].im;
        if q < 0 {
            -v
        } else {
            v
        }
    };
    let size = basis_len(n_modes);
    DMatrix::from_fn(size, size, |i, j| {
        let k = wavenumber(i) as isize;
        let l = wavenumber(j) as isize;
        match (i, j) {
            (0, 0) => cos_mean(0),
            (0, _) if is_sine(j) => SQRT_2 * sin_mean(l),
            (0, _) => SQRT_2 * cos_mean(l),
            (_, 0) if is_sine(i) => SQRT_2 * sin_mean(k),
            (_, 0) => SQRT_2 * cos_mean(k),
            _ => match (is_sine(i), is_sine(j)) {
                (false, false) => cos_mean(k - l) + cos_mean(k + l),
                (true, true) => cos_mean(k - l) - cos_mean(k + l),
                (false, true) => sin_mean(k + l) - sin_mean(k - l),
                (true, false) => sin_mean(k + l) - sin_mean(l - k),
            },
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_on_grid() {
        let g = Grid::new(64).unwrap();
        let b = sample(&g, 16);
        let gram = b.transpose() * &b / 64.0;
        let err = (gram - DMatrix::identity(33, 33)).abs().max();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn multiplication_matches_quadrature() {
        let g = Grid::new(64).unwrap();
        let a = Field::from_fn(&g, |x| {
            libm::exp(0.7 * libm::cos(2.0 * PI * x) + 0.3 * libm::sin(6.0 * PI * x))
        })
        .unwrap();
        let b = sample(&g, 16);
        let mut weighted = b.clone();
        for (j, mut row) in weighted.row_iter_mut().enumerate() {
            row *= a.values()[j];
        }
        let direct = b.transpose() * weighted / 64.0;
        let fast = multiplication_matrix(&a, 16);
        let err = (direct - fast).abs().max();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn project_synthesize_roundtrip() {
        let g = Grid::new(32).unwrap();
        let coords: Vec<f64> = (0..17).map(|i| 0.1 * i as f64 - 0.4).collect();
        let f = synthesize(&g, &coords);
        let back = project(&f, 8);
        for (a, b) in coords.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn mode_limits() {
        let g = Grid::new(64).unwrap();
        assert!(check_modes(&g, 16).is_ok());
        assert!(check_modes(&g, 17).is_err());
        assert_eq!(default_modes(&g), 16);
        assert_eq!(default_modes(&Grid::new(1024).unwrap()), 256);
    }
}
