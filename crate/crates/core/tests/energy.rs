mod common;

use common::{grid, params, rel_err};
use mechpattern::basis;
use mechpattern::random::{random_smooth, rng};
use mechpattern::{bounds, energy, first_variation, hessian_matrix, Error, Field};
use nalgebra::DVector;
use std::f64::consts::{PI, SQRT_2};

#[test]
fn constant_energy_is_minus_half_kappa_squared() {
    let g = grid(64);
    for kappa in [0.5, 1.0, 1.5, 3.0] {
        let e = energy(&Field::constant(&g, kappa), &params(0.01, kappa)).unwrap();
        assert!((e + 0.5 * kappa * kappa).abs() < 1e-14, "{kappa}: {e}");
    }
    assert_eq!(energy(&Field::constant(&g, 0.0), &params(0.01, 1.0)).unwrap(), 0.0);
}

#[test]
fn cosine_energy_against_bessel_series() {
    let g = grid(128);
    let d = 0.01;
    let u = Field::from_fn(&g, |x| SQRT_2 * (2.0 * PI * x).cos()).unwrap();
    // I0(√2) = Σ (1/2)^m / (m!)²
    let mut term = 1.0;
    let mut i0 = 0.0;
    for m in 0..40 {
        if m > 0 {
            term *= 0.5 / (m * m) as f64;
        }
        i0 += term;
    }
    let expected = 0.5 * d * 4.0 * PI * PI + 0.5 - i0.ln();
    let e = energy(&u, &params(d, 1.0)).unwrap();
    assert!((e - expected).abs() < 1e-13, "{e} vs {expected}");
}

#[test]
fn overflow_is_reported() {
    let g = grid(16);
    let u = Field::constant(&g, 701.0);
    assert!(matches!(energy(&u, &params(0.01, 1.0)), Err(Error::Overflow { .. })));
    assert!(matches!(first_variation(&u, &params(0.01, 1.0)), Err(Error::Overflow { .. })));
}

#[test]
fn gradient_matches_central_differences() {
    let g = grid(128);
    let mut r = rng(11, 0);
    let eps = 1e-5;
    for i in 0..20 {
        let p = params(0.002 + 0.001 * i as f64, 0.5 + 0.15 * i as f64);
        let u = random_smooth(&g, &mut r, 2.0).map(|v| v + p.kappa());
        let psi = random_smooth(&g, &mut r, 1.0);
        let plus = energy(&u.zip_map(&psi, |a, b| a + eps * b), &p).unwrap();
        let minus = energy(&u.zip_map(&psi, |a, b| a - eps * b), &p).unwrap();
        let fd = (plus - minus) / (2.0 * eps);
        let exact = first_variation(&u, &p).unwrap().dot(&psi);
        assert!(rel_err(fd, exact) < 1e-6, "pair {i}: {fd} vs {exact}");
    }
}

#[test]
fn first_variation_vanishes_at_constant() {
    let g = grid(32);
    let v = first_variation(&Field::constant(&g, 1.7), &params(0.05, 1.7)).unwrap();
    assert!(v.norm_inf() < 1e-14);
}

#[test]
fn hessian_quadratic_form_matches_second_differences() {
    let g = grid(128);
    let n_modes = 16;
    let mut r = rng(12, 0);
    let eps = 1e-4;
    for i in 0..10 {
        let p = params(0.005 * (i + 1) as f64, 1.0 + 0.2 * i as f64);
        let u = random_smooth(&g, &mut r, 1.5).map(|v| v + p.kappa());
        let psi = random_smooth(&g, &mut r, 1.0).map(|v| v + 0.3);
        let h = hessian_matrix(&u, &p, n_modes).unwrap();
        let c = DVector::from_vec(basis::project(&psi, n_modes));
        let form = c.dot(&(&h * &c));
        let e0 = energy(&u, &p).unwrap();
        let ep = energy(&u.zip_map(&psi, |a, b| a + eps * b), &p).unwrap();
        let em = energy(&u.zip_map(&psi, |a, b| a - eps * b), &p).unwrap();
        let fd = (ep - 2.0 * e0 + em) / (eps * eps);
        assert!(rel_err(fd, form) < 1e-4, "case {i}: {fd} vs {form}");
    }
}

#[test]
fn hessian_at_constant_state() {
    let g = grid(64);
    let p = params(0.01, 1.3);
    let h = hessian_matrix(&Field::constant(&g, 1.3), &p, 16).unwrap();
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            let expected = match (i, j) {
                (0, 0) => 1.0,
                _ if i == j => 1.0 + 0.01 * basis::eigenvalue(i) - 1.3,
                _ => 0.0,
            };
            assert!((h[(i, j)] - expected).abs() < 1e-12, "({i},{j})");
        }
    }
}

#[test]
fn hessian_coefficient_bounds_and_symmetry() {
    let g = grid(64);
    let mut r = rng(13, 0);
    for _ in 0..10 {
        let p = params(0.01, 2.0);
        let u = random_smooth(&g, &mut r, 3.0);
        let h = hessian_matrix(&u, &p, 16).unwrap();
        assert!((&h - h.transpose()).abs().max() < 1e-12);
        let k = p.kappa();
        for i in 1..h.nrows() {
            let top = 1.0 + p.d() * basis::eigenvalue(i);
            assert!(h[(i, i)] <= top + 1e-12 && h[(i, i)] >= top - 2.0 * k - 1e-12);
            for j in 1..h.ncols() {
                if i != j {
                    assert!(h[(i, j)].abs() <= 4.0 * k);
                }
            }
        }
    }
}

#[test]
fn hessian_rejects_too_many_modes() {
    let g = grid(32);
    assert!(hessian_matrix(&Field::constant(&g, 1.0), &params(0.1, 1.0), 9).is_err());
}

#[test]
fn energy_is_convex_above_d_max() {
    let g = grid(64);
    let mut r = rng(14, 0);
    for kappa in [0.5, 1.5, 3.0] {
        let b = bounds(kappa).unwrap();
        let p = params(1.01 * b.d_max, kappa);
        for _ in 0..50 {
            let u = random_smooth(&g, &mut r, 4.0).map(|v| v + kappa);
            let h = hessian_matrix(&u, &p, 16).unwrap();
            let min = h.symmetric_eigenvalues().min();
            assert!(min >= -1e-8, "kappa {kappa}: {min}");
        }
    }
}

#[test]
fn bounds_examples() {
    let b = bounds(2.0).unwrap();
    assert!((b.d2.unwrap() - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    assert!((b.d2.unwrap() - 0.0253303).abs() < 1e-7);
    assert!((b.d_max - 0.759909).abs() < 1e-6);
    assert_eq!(b.d_min, f64::max(b.d1, b.d2.unwrap()));

    let b = bounds(0.5).unwrap();
    assert!(b.d1 > 0.0);
    assert!(b.d2.is_none());
    assert_eq!(b.d_min, b.d1);

    for kappa in [0.1, 0.5, 1.0, 1.5, 3.0, 10.0] {
        let b = bounds(kappa).unwrap();
        assert!(b.d_min < b.d_max, "{kappa}");
    }
    assert!(bounds(0.0).is_err());
    assert!(bounds(-1.0).is_err());
}
