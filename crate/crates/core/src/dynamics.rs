//! Time integration of the evolution equation.
//!
//! Each Fourier mode `k` of the linear part `D u_xx - u` is integrated
//! exactly with rate `a_k = 1 + D mu_k`; the nonlocal source
//! `kappa e^u / ∫ e^u` is frozen over the step (first-order exponential
//! time differencing). The scheme preserves the constant state, decreases
//! the energy for every `dt`, and reproduces the mass law
//! `m' = kappa - m` exactly because `∫ e^u / ∫ e^u = 1`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::energy::{energy, log_partition, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{integrate, laplacian_eigenvalue, Field};

/// Largest accepted time step.
pub const MAX_DT: f64 = 0.5;

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::Config(format!("dt must be in (0, {MAX_DT}], got {dt}")));
    }
    Ok(())
}

/// One step with a non-negative source strength (`kappa = 0` is the pure
/// linear equation).
pub(crate) fn step_with(u: &Field, dt: f64, d: f64, kappa: f64) -> Result<Field> {
    let grid = u.grid();
    let uh = grid.forward_real(u.values());
    let nh = if kappa > 0.0 {
        let (_, rho) = log_partition(u)?;
        grid.forward_real(rho.map(|r| kappa * r).values())
    } else {
        alloc::vec![Complex64::new(0.0, 0.0); uh.len()]
    };
    let next: Vec<Complex64> = uh
        .iter()
        .zip(&nh)
        .enumerate()
        .map(|(k, (&c, &n))| {
            let a = 1.0 + d * laplacian_eigenvalue(k);
            let decay = libm::exp(-a * dt);
            let gain = -libm::expm1(-a * dt) / a;
            c * decay + n * gain
        })
        .collect();
    let values = grid.inverse_real(&next);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            time: dt,
            last_state: Box::new(u.clone()),
        });
    }
    Ok(Field::from_raw(grid, values))
}

/// One time step of length `dt`.
pub fn step_imex(u: &Field, dt: f64, p: &ModelParams) -> Result<Field> {
    check_dt(dt)?;
    step_with(u, dt, p.d(), p.kappa())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Record diagnostics every this many steps (the first and last step
    /// are always recorded).
    pub record_every: usize,
    /// Stop once `‖u_{n+1} - u_n‖_∞ / dt` falls below this.
    pub steady_tol: f64,
    /// Keep full states at the recorded times.
    pub record_states: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            t_end: 100.0,
            dt: 1e-3,
            record_every: 100,
            steady_tol: 1e-9,
            record_states: false,
        }
    }
}

impl SimulateOptions {
    pub fn validate(&self) -> Result<()> {
        check_dt(self.dt)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if !(self.steady_tol >= 0.0) {
            return Err(Error::Config("steady_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySummary {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    pub energies: Vec<f64>,
    pub max_u: Vec<f64>,
    pub min_u: Vec<f64>,
    /// States at the recorded times when requested, otherwise empty.
    pub states: Vec<Field>,
    pub final_state: Field,
    pub final_time: f64,
    pub step_count: usize,
    /// Whether the run stopped on the steadiness criterion.
    pub converged: bool,
    /// Last value of `‖u_{n+1} - u_n‖_∞ / dt`.
    pub final_rate: f64,
    /// Largest single-step energy increase (non-positive for a clean run).
    pub max_energy_increase: f64,
}

/// Integrates from `u0` until `t_end` or until the state is steady.
///
/// Any failure is reported as [`Error::Divergence`] carrying the last finite
/// state.
pub fn simulate(u0: &Field, p: &ModelParams, opts: &SimulateOptions) -> Result<TrajectorySummary> {
    opts.validate()?;
    let dt = opts.dt;
    let n_steps = libm::ceil(opts.t_end / dt - 1e-9) as usize;
    let diverged = |t: f64, u: &Field| Error::Divergence {
        time: t,
        last_state: Box::new(u.clone()),
    };

    let mut u = u0.clone();
    let mut e = energy(&u, p).map_err(|_| diverged(0.0, &u))?;
    let mut out = TrajectorySummary {
        times: Vec::new(),
        masses: Vec::new(),
        energies: Vec::new(),
        max_u: Vec::new(),
        min_u: Vec::new(),
        states: Vec::new(),
        final_state: u.clone(),
        final_time: 0.0,
        step_count: 0,
        converged: false,
        final_rate: f64::INFINITY,
        max_energy_increase: f64::NEG_INFINITY,
    };
    let record = |out: &mut TrajectorySummary, t: f64, u: &Field, e: f64| {
        out.times.push(t);
        out.masses.push(integrate(u));
        out.energies.push(e);
        out.max_u.push(u.max());
        out.min_u.push(u.min());
        if opts.record_states {
            out.states.push(u.clone());
        }
    };
    record(&mut out, 0.0, &u, e);

    for n in 1..=n_steps {
        let t = n as f64 * dt;
        let next = step_with(&u, dt, p.d(), p.kappa()).map_err(|_| diverged(t - dt, &u))?;
        let e_next = energy(&next, p).map_err(|_| diverged(t - dt, &u))?;
        out.max_energy_increase = f64::max(out.max_energy_increase, e_next - e);
        let rate = next
            .values()
            .iter()
            .zip(u.values())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
            / dt;
        u = next;
        e = e_next;
        out.step_count = n;
        out.final_rate = rate;
        let converged = rate < opts.steady_tol;
        if converged || n == n_steps || n % opts.record_every == 0 {
            record(&mut out, t, &u, e);
        }
        if converged {
            out.converged = true;
            break;
        }
    }
    out.final_time = *out.times.last().unwrap_or(&0.0);
    out.final_state = u;
    Ok(out)
}

/// Normalized production profile `e^u / ∫ e^u`, the strain up to the
/// constant absorbed into `kappa`.
pub fn strain_field(u: &Field, _p: &ModelParams) -> Result<Field> {
    crate::energy::density(u)
}
