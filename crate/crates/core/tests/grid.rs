mod common;

use common::{cosine, grid};
use mechpattern::grid::{laplacian, laplacian_eigenvalue};
use mechpattern::{from_spectral, integrate, to_spectral, Error, Field, Grid};
use proptest::prelude::*;
use std::f64::consts::{PI, SQRT_2};

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

proptest! {
    #[test]
    fn roundtrip_is_exact(values in field_strategy(64)) {
        let g = grid(64);
        let f = Field::new(&g, values).unwrap();
        let back = from_spectral(&to_spectral(&f));
        let err = common::max_abs_diff(&f, &back);
        prop_assert!(err <= 1e-12 * f.norm_inf().max(1.0), "{}", err);
    }

    #[test]
    fn parseval(values in field_strategy(128)) {
        let g = grid(128);
        let f = Field::new(&g, values).unwrap();
        let ms = f.dot(&f);
        let p = to_spectral(&f).power();
        prop_assert!((ms - p).abs() <= 1e-12 * ms.max(1e-300), "{} vs {}", ms, p);
    }

    #[test]
    fn second_derivative_has_zero_mean(values in field_strategy(64)) {
        let g = grid(64);
        let f = Field::new(&g, values).unwrap();
        let m = integrate(&laplacian(&f));
        // the Laplacian scales by up to (πN)², so compare against that size
        let scale = f.norm_inf() * (PI * 64.0).powi(2);
        prop_assert!(m.abs() < 1e-10 * scale.max(1.0), "{}", m);
    }

    #[test]
    fn dc_coefficient_is_real(values in field_strategy(32)) {
        let g = grid(32);
        let f = Field::new(&g, values).unwrap();
        let s = to_spectral(&f);
        let norm = s.power().sqrt();
        prop_assert!(s.coefficients()[0].im.abs() <= 1e-12 * norm.max(1e-300));
    }
}

#[test]
fn grid_examples() {
    let g = grid(8);
    let nodes = g.nodes();
    assert_eq!(nodes.len(), 8);
    for (j, x) in nodes.iter().enumerate() {
        assert_eq!(*x, j as f64 * 0.125);
    }
    assert_eq!(grid(256).spacing(), 1.0 / 256.0);
    assert!(matches!(Grid::new(100), Err(Error::Config(_))));
    assert!(matches!(Grid::new(4), Err(Error::Config(_))));
}

#[test]
fn pure_modes() {
    let g = grid(32);
    let c = to_spectral(&Field::constant(&g, 2.5));
    assert!((c.coefficients()[0].re - 2.5).abs() < 1e-15);
    assert!(c.coefficients()[1..].iter().all(|z| z.norm() < 1e-15));

    let s = to_spectral(&cosine(&g, 1, 1.0, 0.0));
    for (k, z) in s.coefficients().iter().enumerate() {
        let expected = if k == 1 { 0.5 } else { 0.0 };
        assert!((z.re - expected).abs() < 1e-15 && z.im.abs() < 1e-15, "k={k}");
    }
}

#[test]
fn derivative_examples() {
    let g = grid(64);
    let c = cosine(&g, 1, 1.0, 0.0);
    let d2 = laplacian(&c);
    for (a, b) in d2.values().iter().zip(c.values()) {
        assert!((a + 4.0 * PI * PI * b).abs() < 1e-10);
    }
    assert!(laplacian(&Field::constant(&g, 3.0)).norm_inf() < 1e-12);
    let s = Field::from_fn(&g, |x| (4.0 * PI * x).sin()).unwrap();
    let d2 = laplacian(&s);
    for (a, b) in d2.values().iter().zip(s.values()) {
        assert!((a + 16.0 * PI * PI * b).abs() < 1e-9);
    }
}

#[test]
fn differentiation_matches_eigenvalues_up_to_quarter_grid() {
    let g = grid(128);
    for k in 1..=32 {
        let f = Field::from_fn(&g, |x| SQRT_2 * (2.0 * PI * k as f64 * x).cos()).unwrap();
        let mu = laplacian_eigenvalue(k);
        let err = laplacian(&f).zip_map(&f, |a, b| a + mu * b).norm_inf();
        assert!(err <= 1e-10 * mu * SQRT_2, "k={k} err={err}");
    }
}

#[test]
fn quadrature_examples() {
    let g = grid(64);
    assert!((integrate(&Field::constant(&g, 0.7)) - 0.7).abs() < 1e-15);
    for k in 1..10 {
        assert!(integrate(&cosine(&g, k, 1.0, 0.0)).abs() < 1e-15);
    }
    // I0(1) = Σ 1 / (4^m (m!)²)
    let mut term = 1.0;
    let mut series = 0.0;
    for m in 0..30 {
        if m > 0 {
            term /= 4.0 * (m * m) as f64;
        }
        series += term;
    }
    let f = Field::from_fn(&g, |x| (2.0 * PI * x).cos().exp()).unwrap();
    assert!((integrate(&f) - series).abs() < 1e-14);
}
