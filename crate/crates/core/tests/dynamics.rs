mod common;

use common::{cosine, grid, max_abs_diff, params};
use mechpattern::dynamics::{simulate, step_imex, strain_field, SimulateOptions};
use mechpattern::random::{random_smooth, rng};
use mechpattern::steady::count_modes;
use mechpattern::{bounds, energy, integrate, Field};

fn run(u0: &Field, d: f64, kappa: f64, t_end: f64, dt: f64) -> mechpattern::dynamics::TrajectorySummary {
    let opts = SimulateOptions {
        t_end,
        dt,
        record_every: 1,
        steady_tol: 0.0,
        record_states: false,
    };
    simulate(u0, &params(d, kappa), &opts).unwrap()
}

#[test]
fn energy_never_increases() {
    let g = grid(128);
    let mut r = rng(21, 0);
    for (i, dt) in [1e-3, 5e-3, 1e-2].into_iter().enumerate() {
        let kappa = 1.0 + i as f64;
        let u0 = random_smooth(&g, &mut r, 2.0).map(|v| v + 0.5);
        let tr = run(&u0, 0.005, kappa, 2.0, dt);
        assert!(tr.max_energy_increase <= 1e-10, "{}", tr.max_energy_increase);
        for w in tr.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }
}

#[test]
fn mass_follows_relaxation_law() {
    let g = grid(64);
    let mut r = rng(22, 0);
    let kappa = 1.5;
    let u0 = random_smooth(&g, &mut r, 1.0).map(|v| v - 0.4);
    let m0 = integrate(&u0);
    for dt in [1e-2, 5e-3, 2.5e-3, 1e-3] {
        let tr = run(&u0, 0.01, kappa, 3.0, dt);
        let err = tr
            .times
            .iter()
            .zip(&tr.masses)
            .map(|(t, m)| (m - (kappa + (m0 - kappa) * (-t).exp())).abs())
            .fold(0.0, f64::max);
        // the exponential integrator reproduces the mass law exactly
        assert!(err < 1e-12, "dt {dt}: {err}");
    }
}

#[test]
fn first_order_self_convergence() {
    let g = grid(64);
    let mut r = rng(23, 0);
    let u0 = random_smooth(&g, &mut r, 1.0).map(|v| v + 2.0);
    let at = |dt: f64| run(&u0, 0.01, 2.0, 1.0, dt).final_state;
    let (a, b, c) = (at(4e-3), at(2e-3), at(1e-3));
    let e1 = max_abs_diff(&a, &b);
    let e2 = max_abs_diff(&b, &c);
    let ratio = e1 / e2;
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn constant_state_is_preserved() {
    let g = grid(64);
    let u = Field::constant(&g, 1.25);
    let p = params(0.01, 1.25);
    let mut v = u.clone();
    for _ in 0..100 {
        let next = step_imex(&v, 1e-2, &p).unwrap();
        assert!(max_abs_diff(&next, &v) < 1e-12);
        v = next;
    }
}

#[test]
fn pattern_emerges_at_small_diffusion() {
    let g = grid(256);
    let (d, kappa) = (0.01, 1.5);
    let u0 = cosine(&g, 1, 0.01, kappa);
    let opts = SimulateOptions {
        t_end: 300.0,
        ..Default::default()
    };
    let tr = simulate(&u0, &params(d, kappa), &opts).unwrap();
    assert!(tr.converged);
    assert_eq!(count_modes(&tr.final_state), 1);
    let e = energy(&tr.final_state, &params(d, kappa)).unwrap();
    assert!(e < -0.5 * kappa * kappa);
}

#[test]
fn constant_state_attracts_above_d_max() {
    let g = grid(64);
    let mut r = rng(24, 0);
    let kappa = 1.5;
    let d = 1.1 * bounds(kappa).unwrap().d_max;
    let u0 = random_smooth(&g, &mut r, 3.0).map(|v| v + 0.2);
    let opts = SimulateOptions {
        t_end: 100.0,
        dt: 1e-2,
        ..Default::default()
    };
    let tr = simulate(&u0, &params(d, kappa), &opts).unwrap();
    assert!(tr.converged);
    assert!(tr.final_state.range() < 1e-8);
    assert!((tr.final_state.mean() - kappa).abs() < 1e-6);
}

#[test]
fn divergence_carries_last_state() {
    let g = grid(16);
    let u0 = Field::constant(&g, 699.999);
    let opts = SimulateOptions {
        t_end: 1.0,
        dt: 1e-3,
        ..Default::default()
    };
    // mass relaxes towards kappa, so a field at the overflow limit with a
    // large kappa pushes past it
    match simulate(&u0, &params(0.01, 5000.0), &opts) {
        Err(mechpattern::Error::Divergence { last_state, .. }) => {
            assert!(last_state.values().iter().all(|v| v.is_finite()));
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn strain_integrates_to_one() {
    let g = grid(128);
    let mut r = rng(25, 0);
    for _ in 0..10 {
        let u = random_smooth(&g, &mut r, 5.0);
        let s = strain_field(&u, &params(0.01, 1.0)).unwrap();
        assert!((integrate(&s) - 1.0).abs() < 1e-13);
        assert!(s.min() > 0.0);
    }
}

#[test]
fn recorded_times_are_increasing() {
    let g = grid(32);
    let opts = SimulateOptions {
        t_end: 1.0,
        dt: 1e-2,
        record_every: 7,
        steady_tol: 0.0,
        record_states: false,
    };
    let tr = simulate(&cosine(&g, 2, 0.3, 1.0), &params(0.02, 1.0), &opts).unwrap();
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    assert!((tr.final_time - 1.0).abs() < 1e-12);
    assert_eq!(tr.step_count, 100);
    assert_eq!(tr.times.len(), tr.masses.len());
}
