//! Stationary solutions of `0 = D U_xx - U + kappa e^U / ∫ e^U`.
//!
//! Newton's method works in the even subspace `U(x) = U(1 - x)`, which on the
//! grid is spanned exactly by `w_k cos(2πkx)`, `k = 0..=N/2`, with
//! `w_k = √2` except `w_0 = w_{N/2} = 1`. This removes the translation
//! symmetry and keeps the Jacobian nonsingular away from folds and
//! bifurcation points.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::{simulate, SimulateOptions};
use crate::energy::{energy, first_variation, log_partition, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{laplacian_eigenvalue, to_spectral, Field, Grid};
use crate::linalg::solve_with_pivot_ratio;

/// Maximum number of Newton iterations.
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Maximum number of step halvings per Newton iteration.
pub const MAX_HALVINGS: usize = 20;
/// Pivot ratio below which the Newton matrix is declared singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;
/// Default Newton tolerance on the L² residual.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Residual bound required of every certified steady state.
pub const STEADY_RESIDUAL: f64 = 1e-8;
/// Residual bound re-verified after modal rescaling.
pub const RESCALE_RESIDUAL: f64 = 1e-7;

/// A field certified as a stationary solution.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub field: Field,
    pub params: ModelParams,
    /// L² norm of the stationary residual.
    pub residual_norm: f64,
    /// Number of peaks per period, 0 for the constant state.
    pub modality: usize,
    pub energy: f64,
}

impl SteadyState {
    /// Evaluates residual, modality and energy of `field`. Does not check
    /// the residual against any tolerance.
    pub fn evaluate(field: Field, params: &ModelParams) -> Result<Self> {
        let residual_norm = residual_norm(&field, params)?;
        let energy = energy(&field, params)?;
        Ok(SteadyState {
            modality: count_modes(&field),
            field,
            params: *params,
            residual_norm,
            energy,
        })
    }

    pub fn mass(&self) -> f64 {
        self.field.mean()
    }
}

/// `D U_xx - U + kappa e^U / ∫ e^U`.
pub fn stationary_residual(u: &Field, p: &ModelParams) -> Result<Field> {
    Ok(first_variation(u, p)?.map(|v| -v))
}

pub fn residual_norm(u: &Field, p: &ModelParams) -> Result<f64> {
    Ok(first_variation(u, p)?.norm_l2())
}

pub fn constant_state(grid: &Grid, p: &ModelParams) -> SteadyState {
    let kappa = p.kappa();
    SteadyState {
        field: Field::constant(grid, kappa),
        params: *p,
        residual_norm: 0.0,
        modality: 0,
        energy: -0.5 * kappa * kappa,
    }
}

/// Coordinates and Galerkin operators of the even subspace.
pub(crate) struct EvenSpace {
    grid: Grid,
    weights: Vec<f64>,
}

impl EvenSpace {
    pub(crate) fn new(grid: &Grid) -> Self {
        let m = grid.n_points() / 2;
        let weights = (0..=m)
            .map(|k| if k == 0 || k == m { 1.0 } else { SQRT_2 })
            .collect();
        EvenSpace {
            grid: grid.clone(),
            weights,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `⟨f, e_k⟩` for every basis function; exact coordinates when `f` is even.
    pub(crate) fn coords(&self, f: &Field) -> DVector<f64> {
        let s = to_spectral(f);
        DVector::from_iterator(
            self.dim(),
            s.coefficients()
                .iter()
                .zip(&self.weights)
                .map(|(c, w)| w * c.re),
        )
    }

    pub(crate) fn field(&self, coords: &DVector<f64>) -> Field {
        let n = self.grid.n_points() as f64;
        let spec: Vec<Complex64> = coords
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| Complex64::new(n * c / w, 0.0))
            .collect();
        Field::from_raw(&self.grid, self.grid.inverse_real(&spec))
    }

    /// Jacobian of the stationary map in even coordinates, plus the
    /// coordinates of `e^U / ∫ e^U` (the derivative with respect to kappa).
    fn jacobian(&self, u: &Field, p: &ModelParams) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let (_, rho) = log_partition(u)?;
        let kappa = p.kappa();
        let a = to_spectral(&rho.map(|r| kappa * r - 1.0));
        let a = a.coefficients();
        let n = self.grid.n_points();
        let m = n / 2;
        // grid cosine moments are periodic in q with period n and even
        let moment = |q: usize| {
            let q = q % n;
            a[if q > m { n - q } else { q }].re
        };
        let rho_c = self.coords(&rho);
        let dim = self.dim();
        let w = &self.weights;
        let mut jac = DMatrix::from_fn(dim, dim, |k, l| {
            let diff = k.abs_diff(l);
            0.5 * w[k] * w[l] * (moment(diff) + moment(k + l)) - kappa * rho_c[k] * rho_c[l]
        });
        for k in 0..dim {
            jac[(k, k)] -= p.d() * laplacian_eigenvalue(k);
        }
        Ok((jac, rho_c))
    }
}

/// Linear side condition `a · coords + b kappa = rhs` for the extended system.
#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    pub a: DVector<f64>,
    pub b: f64,
    pub rhs: f64,
}

impl Constraint {
    fn residual(&self, c: &DVector<f64>, kappa: f64) -> f64 {
        self.a.dot(c) + self.b * kappa - self.rhs
    }
}

/// Result of a Newton solve in the even subspace.
#[derive(Clone, Debug)]
pub(crate) struct NewtonOutcome {
    pub field: Field,
    pub kappa: f64,
    pub history: Vec<f64>,
}

/// Damped Newton on the stationary equation in the even subspace. With a
/// constraint, `kappa` becomes an unknown.
pub(crate) fn newton_even(
    guess: &Field,
    p: &ModelParams,
    tol: f64,
    constraint: Option<&Constraint>,
) -> Result<NewtonOutcome> {
    let space = EvenSpace::new(guess.grid());
    let dim = space.dim();
    let mut c = space.coords(&guess.symmetrized());
    let mut params = *p;

    let eval = |c: &DVector<f64>, params: &ModelParams| -> Result<(Field, DVector<f64>, f64)> {
        let u = space.field(c);
        let r = space.coords(&stationary_residual(&u, params)?);
        let mut norm2 = r.norm_squared();
        if let Some(con) = constraint {
            norm2 += con.residual(c, params.kappa()).powi(2);
        }
        Ok((u, r, libm::sqrt(norm2)))
    };

    let (mut u, mut r, mut norm) = eval(&c, &params)?;
    let mut history = alloc::vec![norm];
    for iteration in 0..MAX_NEWTON_ITERATIONS {
        if norm < tol {
            return Ok(NewtonOutcome {
                field: u,
                kappa: params.kappa(),
                history,
            });
        }
        let (jac, dkappa) = space.jacobian(&u, &params)?;
        let (step, ratio) = match constraint {
            None => solve_with_pivot_ratio(jac, &(-&r)),
            Some(con) => {
                let mut ext = DMatrix::zeros(dim + 1, dim + 1);
                ext.view_mut((0, 0), (dim, dim)).copy_from(&jac);
                ext.view_mut((0, dim), (dim, 1)).copy_from(&dkappa);
                ext.view_mut((dim, 0), (1, dim)).copy_from(&con.a.transpose());
                ext[(dim, dim)] = con.b;
                let mut rhs = DVector::zeros(dim + 1);
                rhs.rows_mut(0, dim).copy_from(&(-&r));
                rhs[dim] = -con.residual(&c, params.kappa());
                solve_with_pivot_ratio(ext, &rhs)
            }
        };
        let step = match step {
            Some(s) if ratio >= SINGULAR_PIVOT_RATIO && s.iter().all(|v| v.is_finite()) => s,
            _ => {
                return Err(Error::SingularJacobian {
                    iteration,
                    pivot_ratio: ratio,
                })
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let c_try = &c + step.rows(0, dim) * t;
            let kappa_try = match constraint {
                Some(_) => params.kappa() + t * step[dim],
                None => params.kappa(),
            };
            if let Ok(p_try) = params.with_kappa(kappa_try) {
                if let Ok((u_try, r_try, norm_try)) = eval(&c_try, &p_try) {
                    if norm_try < norm {
                        c = c_try;
                        params = p_try;
                        u = u_try;
                        r = r_try;
                        norm = norm_try;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        history.push(norm);
        if !accepted {
            return Err(Error::NonConvergence {
                iterations: iteration + 1,
                residual: norm,
            });
        }
    }
    if norm < tol {
        return Ok(NewtonOutcome {
            field: u,
            kappa: params.kappa(),
            history,
        });
    }
    Err(Error::NonConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual: norm,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 1e-12 && tol.is_finite()) {
        return Err(Error::Config(format!("newton tolerance must be >= 1e-12, got {tol}")));
    }
    Ok(())
}

/// Damped Newton iteration from `guess` (projected onto even fields).
pub fn newton_steady(guess: &Field, p: &ModelParams, tol: f64) -> Result<SteadyState> {
    Ok(newton_steady_traced(guess, p, tol)?.0)
}

/// Like [`newton_steady`], also returning the residual norm after each
/// iteration.
pub fn newton_steady_traced(
    guess: &Field,
    p: &ModelParams,
    tol: f64,
) -> Result<(SteadyState, Vec<f64>)> {
    check_tol(tol)?;
    let out = newton_even(guess, p, tol, None)?;
    Ok((SteadyState::evaluate(out.field, p)?, out.history))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Hand over to Newton once `‖Δu‖_∞ / dt` drops below this.
    pub relax_tol: f64,
    /// If the time limit is reached, still try Newton when the rate is
    /// below this.
    pub stalled_tol: f64,
    pub newton_tol: f64,
    /// Largest accepted sup-norm change made by the Newton polish.
    pub max_jump: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            dt: 0.05,
            t_max: 2000.0,
            relax_tol: 1e-6,
            stalled_tol: 1e-3,
            newton_tol: DEFAULT_TOL,
            max_jump: 1e-3,
        }
    }
}

/// Translates `u` so that it becomes even, using the phase of its dominant
/// Fourier mode. Fields that are already even are returned unchanged.
pub fn center(u: &Field) -> Field {
    if u.symmetry_defect() <= 1e-10 * f64::max(1.0, u.norm_inf()) {
        return u.clone();
    }
    let s = to_spectral(u);
    let c = s.coefficients();
    let m = c.len() - 1;
    let Some(k) = (1..m).max_by(|&a, &b| c[a].norm().total_cmp(&c[b].norm())) else {
        return u.clone();
    };
    if c[k].norm() == 0.0 {
        return u.clone();
    }
    // u(x - x0) multiplies c_q by exp(-2πi q x0); choose x0 so that c_k
    // becomes real and positive
    let x0 = c[k].arg() / (2.0 * core::f64::consts::PI * k as f64);
    let shifted: Vec<Complex64> = c
        .iter()
        .enumerate()
        .map(|(q, cq)| {
            let phase = -2.0 * core::f64::consts::PI * q as f64 * x0;
            cq * Complex64::new(libm::cos(phase), libm::sin(phase))
        })
        .collect();
    let n = u.len() as f64;
    let spec: Vec<Complex64> = shifted.iter().map(|v| v * n).collect();
    Field::from_raw(u.grid(), u.grid().inverse_real(&spec)).symmetrized()
}

/// Size of the residual that rounding alone produces for `u`; the
/// second derivative amplifies errors by up to `D (πN)²`.
fn roundoff_floor(u: &Field, p: &ModelParams) -> f64 {
    let n = u.len() as f64;
    let stiffness = 1.0 + p.d() * core::f64::consts::PI * core::f64::consts::PI * n * n;
    4.0 * f64::EPSILON * stiffness * f64::max(u.norm_inf(), p.kappa())
}

/// Gradient-flow relaxation followed by a Newton polish. Patterns reached
/// from non-even data are translated so that they are even (peak at a node).
pub fn relax_to_steady(u0: &Field, p: &ModelParams) -> Result<SteadyState> {
    relax_to_steady_with(u0, p, &RelaxOptions::default())
}

pub fn relax_to_steady_with(u0: &Field, p: &ModelParams, opts: &RelaxOptions) -> Result<SteadyState> {
    let sim = SimulateOptions {
        t_end: opts.t_max,
        dt: opts.dt,
        record_every: usize::MAX,
        steady_tol: opts.relax_tol,
        record_states: false,
    };
    let tr = simulate(u0, p, &sim)?;
    if !tr.converged && tr.final_rate > opts.stalled_tol {
        return Err(Error::RelaxationStalled {
            time: tr.final_time,
            rate: tr.final_rate,
        });
    }
    let relaxed = center(&tr.final_state);
    let tol = f64::max(opts.newton_tol, roundoff_floor(&relaxed, p));
    let polished = match newton_steady(&relaxed, p, tol) {
        Ok(s) => s,
        Err(_) if !tr.converged => {
            return Err(Error::RelaxationStalled {
                time: tr.final_time,
                rate: tr.final_rate,
            });
        }
        Err(e) => return Err(e),
    };
    let jump = polished
        .field
        .zip_map(&relaxed, |a, b| a - b)
        .norm_inf();
    if jump > opts.max_jump {
        return Err(Error::Resolution(format!(
            "newton polish moved the relaxed state by {jump:e}"
        )));
    }
    Ok(polished)
}

/// Maps a 1-modal state at diffusivity `D` to the `m`-modal state
/// `U(m x mod 1)` at diffusivity `D / m²`.
pub fn rescale_modal(u: &SteadyState, m: usize) -> Result<SteadyState> {
    if m == 0 {
        return Err(Error::Config("modal multiplicity must be at least 1".into()));
    }
    if u.modality != 1 {
        return Err(Error::Config(format!(
            "rescaling needs a 1-modal state, got modality {}",
            u.modality
        )));
    }
    if m == 1 {
        return Ok(u.clone());
    }
    let n = u.field.len();
    let values = (0..n).map(|j| u.field.values()[(m * j) % n]).collect();
    let field = Field::from_raw(u.field.grid(), values);
    let params = u.params.with_d(u.params.d() / (m * m) as f64)?;
    let out = SteadyState::evaluate(field, &params)?;
    if !(out.residual_norm < RESCALE_RESIDUAL) {
        return Err(Error::ResidualCheck {
            residual: out.residual_norm,
            tolerance: RESCALE_RESIDUAL,
        });
    }
    Ok(out)
}

/// Peaks per period, ignoring wiggles smaller than `1e-7 (max - min)`.
pub fn count_modes(u: &Field) -> usize {
    let v = u.values();
    let range = u.range();
    if range < 1e-7 {
        return 0;
    }
    let h = 1e-7 * range;
    let n = v.len();
    let start = (0..n).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
    let mut rising = true;
    let mut extreme = v[start];
    let mut peaks = 0;
    for i in 1..=n {
        let x = v[(start + i) % n];
        if rising {
            if x > extreme {
                extreme = x;
            } else if x < extreme - h {
                peaks += 1;
                rising = false;
                extreme = x;
            }
        } else if x < extreme {
            extreme = x;
        } else if x > extreme + h {
            rising = true;
            extreme = x;
        }
    }
    peaks
}
