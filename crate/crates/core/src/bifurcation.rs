//! Bifurcations from the constant state.
//!
//! The constant state `U = kappa` loses stability to `cos(2πnx)` at
//! `kappa_n = 1 + 4π²n²D`. Near that point the even branch is
//!
//! ```text
//! U(s) = kappa(s) + s √2 cos(2πnx) + s² A cos(4πnx) + O(s³),
//! kappa(s) = kappa_n + c s² + O(s⁴),   A = kappa_n / (24π²n²D),
//! ```
//!
//! where `s` is the amplitude of `√2 cos(2πnx)` and `c = kappa_n (1/4 - A/2)`.
//! Branches are followed by pseudo-arclength continuation in the even
//! subspace with `kappa` as an unknown.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::DVector;

use crate::energy::{bounds, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::random::{random_even, rng};
use crate::stability::{nonlocal_spectrum, Verdict};
use crate::steady::{
    newton_even, relax_to_steady_with, Constraint, EvenSpace, RelaxOptions, SteadyState,
    DEFAULT_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PitchforkKind {
    Subcritical,
    Supercritical,
    Degenerate,
}

impl PitchforkKind {
    pub fn from_coefficient(c: f64) -> Self {
        if c < -1e-12 {
            PitchforkKind::Subcritical
        } else if c > 1e-12 {
            PitchforkKind::Supercritical
        } else {
            PitchforkKind::Degenerate
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PitchforkKind::Subcritical => "subcritical",
            PitchforkKind::Supercritical => "supercritical",
            PitchforkKind::Degenerate => "degenerate",
        }
    }
}

/// Bifurcation point `(kappa_n, U = kappa_n)` with its normal-form data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BifPoint {
    pub n: usize,
    pub d: f64,
    pub kappa_n: f64,
    /// `1/4 - 1/(16 D n² π²) + 2 D n² π²`, the published second-order
    /// coefficient. It is three times the curvature of `kappa(s)`.
    pub alpha_pp: f64,
    /// Coefficient `A` of `cos(4πnx)` in the second-order correction.
    pub z_amp: f64,
    /// `kappa(s) ≈ kappa_n + kappa_curvature s²` with `s` the amplitude of
    /// `√2 cos(2πnx)`.
    pub kappa_curvature: f64,
    pub kind: PitchforkKind,
}

impl BifPoint {
    pub fn new(d: f64, n: usize) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) || n == 0 {
            return Err(Error::Config(alloc::format!(
                "bifurcation point needs D > 0 and n >= 1, got D = {d}, n = {n}"
            )));
        }
        let x = 4.0 * PI * PI * (n * n) as f64 * d;
        let kappa_n = 1.0 + x;
        let alpha_pp = 0.25 - 1.0 / (4.0 * x) + 0.5 * x;
        let z_amp = kappa_n / (6.0 * x);
        let kappa_curvature = kappa_n * (0.25 - 0.5 * z_amp);
        Ok(BifPoint {
            n,
            d,
            kappa_n,
            alpha_pp,
            z_amp,
            kappa_curvature,
            kind: PitchforkKind::from_coefficient(alpha_pp),
        })
    }
}

pub fn critical_kappas(d: f64, n_max: usize) -> Result<Vec<BifPoint>> {
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    (1..=n_max).map(|n| BifPoint::new(d, n)).collect()
}

/// Second-order approximation of the branch at amplitude `s`.
pub fn predictor_from_normal_form(bp: &BifPoint, s: f64, grid: &Grid) -> (Field, f64) {
    let kappa = bp.kappa_n + bp.kappa_curvature * s * s;
    let k = 2.0 * PI * bp.n as f64;
    let values = grid
        .nodes()
        .into_iter()
        .map(|x| kappa + s * SQRT_2 * libm::cos(k * x) + s * s * bp.z_amp * libm::cos(2.0 * k * x))
        .collect();
    (Field::from_raw(grid, values), kappa)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoint {
    /// Arclength from the bifurcation point in (field L², kappa) space.
    pub s: f64,
    pub kappa: f64,
    pub field: Field,
    /// Coefficient of `√2 cos(2πnx)`.
    pub amplitude: f64,
    pub energy: f64,
    pub residual_norm: f64,
    pub stable: bool,
    pub leading_nu: f64,
    pub newton_iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fold {
    /// Branch point closest to the turning point.
    pub index: usize,
    pub s: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    KappaBound,
    StepLimit,
    Reconnect,
    Failure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::KappaBound => "kappa_bound",
            Termination::StepLimit => "step_limit",
            Termination::Reconnect => "reconnect",
            Termination::Failure => "failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub origin: BifPoint,
    pub points: Vec<BranchPoint>,
    pub folds: Vec<Fold>,
    pub terminated_by: Termination,
    /// Description of the failure when `terminated_by` is `Failure`.
    pub failure: Option<Error>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinueOptions {
    /// Initial (and largest) arclength step; also the amplitude of the first
    /// corrected point.
    pub step: f64,
    pub max_points: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub tol: f64,
    /// Give up once the step has been halved this many times in a row.
    pub max_halvings: usize,
}

impl Default for ContinueOptions {
    fn default() -> Self {
        ContinueOptions {
            step: 0.05,
            max_points: 200,
            kappa_min: 1e-3,
            kappa_max: 5.0,
            tol: DEFAULT_TOL,
            max_halvings: 8,
        }
    }
}

impl ContinueOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(alloc::format!("step must be positive, got {}", self.step)));
        }
        if self.max_points < 3 {
            return Err(Error::Config("max_points must be at least 3".into()));
        }
        if !(self.kappa_min >= 0.0 && self.kappa_max > self.kappa_min) {
            return Err(Error::Config("kappa range must be a non-empty interval".into()));
        }
        Ok(())
    }
}

struct Corrected {
    field: Field,
    kappa: f64,
    iterations: usize,
}

fn finish_point(
    bp: &BifPoint,
    c: Corrected,
    s: f64,
    space: &EvenSpace,
) -> Result<BranchPoint> {
    let params = ModelParams::new(bp.d, c.kappa)?;
    let state = SteadyState::evaluate(c.field, &params)?;
    let report = nonlocal_spectrum(&state)?;
    let amplitude = space.coords(&state.field)[bp.n];
    Ok(BranchPoint {
        s,
        kappa: c.kappa,
        amplitude,
        energy: state.energy,
        residual_norm: state.residual_norm,
        stable: report.verdict == Verdict::Stable,
        leading_nu: report.leading_nu,
        field: state.field,
        newton_iterations: c.iterations,
    })
}

fn correct(
    guess: &Field,
    d: f64,
    kappa: f64,
    constraint: &Constraint,
    tol: f64,
) -> Result<Corrected> {
    let p = ModelParams::new(d, kappa)?;
    let out = newton_even(guess, &p, tol, Some(constraint))?;
    Ok(Corrected {
        field: out.field,
        kappa: out.kappa,
        iterations: out.history.len() - 1,
    })
}

/// Solves for the branch point whose `√2 cos(2πnx)` amplitude equals `s`,
/// starting from the normal-form predictor. Returns the corrected field, its
/// `kappa`, and the number of Newton iterations.
pub fn correct_at_amplitude(
    bp: &BifPoint,
    s: f64,
    grid: &Grid,
    tol: f64,
) -> Result<(Field, f64, usize)> {
    let space = EvenSpace::new(grid);
    if bp.n >= space.dim() - 1 {
        return Err(Error::Config("mode number exceeds the grid resolution".into()));
    }
    let (guess, kappa) = predictor_from_normal_form(bp, s, grid);
    let mut a = DVector::zeros(space.dim());
    a[bp.n] = 1.0;
    let c = correct(&guess, bp.d, kappa, &Constraint { a, b: 0.0, rhs: s }, tol)?;
    Ok((c.field, c.kappa, c.iterations))
}

/// Follows the branch emanating from `bp` with positive amplitude.
///
/// Solver failures end the branch and are recorded in the result; only
/// invalid options are returned as errors.
pub fn continue_branch(bp: &BifPoint, grid: &Grid, opts: &ContinueOptions) -> Result<Branch> {
    opts.validate()?;
    let space = EvenSpace::new(grid);
    let origin_coords = space.coords(&Field::constant(grid, bp.kappa_n));
    let mut points: Vec<BranchPoint> = Vec::new();
    let mut states: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut branch = Branch {
        origin: *bp,
        points: Vec::new(),
        folds: Vec::new(),
        terminated_by: Termination::StepLimit,
        failure: None,
    };

    let distance = |a: &(DVector<f64>, f64), b: &(DVector<f64>, f64)| {
        libm::sqrt((&a.0 - &b.0).norm_squared() + (a.1 - b.1) * (a.1 - b.1))
    };

    let in_range = |kappa: f64| kappa >= opts.kappa_min && kappa <= opts.kappa_max;

    // two amplitude-constrained starting points
    let mut last = (origin_coords.clone(), bp.kappa_n);
    let mut arclength = 0.0;
    for j in 1..=2 {
        let s_amp = j as f64 * opts.step;
        let outcome = correct_at_amplitude(bp, s_amp, grid, opts.tol).and_then(|(field, kappa, it)| {
            let coords = space.coords(&field);
            let here = (coords, kappa);
            let s = arclength + distance(&here, &last);
            let point = finish_point(
                bp,
                Corrected {
                    field,
                    kappa,
                    iterations: it,
                },
                s,
                &space,
            )?;
            Ok((point, here))
        });
        match outcome {
            Ok((point, here)) => {
                arclength = point.s;
                if !in_range(point.kappa) {
                    branch.terminated_by = Termination::KappaBound;
                    branch.points = points;
                    return Ok(branch);
                }
                points.push(point);
                last = here.clone();
                states.push(here);
            }
            Err(e) => {
                branch.terminated_by = Termination::Failure;
                branch.failure = Some(e);
                branch.points = points;
                return Ok(branch);
            }
        }
    }

    let mut h = opts.step;
    let mut easy = 0;
    let mut halvings = 0;
    while points.len() < opts.max_points {
        let n = states.len();
        let (prev, cur) = (&states[n - 2], &states[n - 1]);
        let chord = distance(cur, prev);
        let t_c = (&cur.0 - &prev.0) / chord;
        let t_k = (cur.1 - prev.1) / chord;
        let pred_c = &cur.0 + &t_c * h;
        let pred_k = cur.1 + t_k * h;
        let constraint = Constraint {
            rhs: t_c.dot(&cur.0) + t_k * cur.1 + h,
            a: t_c,
            b: t_k,
        };
        let guess = space.field(&pred_c);
        let attempt = if pred_k > 0.0 {
            correct(&guess, bp.d, pred_k, &constraint, opts.tol)
        } else {
            Err(Error::Config("predicted kappa is not positive".into()))
        };
        let attempt = attempt.and_then(|c| {
            let coords = space.coords(&c.field);
            let here = (coords, c.kappa);
            let step_len = distance(&here, cur);
            if step_len > 2.0 * h {
                return Err(Error::Resolution(alloc::format!(
                    "corrector jumped {step_len:e} for step {h:e}"
                )));
            }
            let s = arclength + step_len;
            Ok((c, here, s))
        });
        match attempt {
            Ok((c, here, s)) => {
                halvings = 0;
                if !in_range(c.kappa) {
                    branch.terminated_by = Termination::KappaBound;
                    break;
                }
                let point = match finish_point(bp, c, s, &space) {
                    Ok(p) => p,
                    Err(e) => {
                        branch.terminated_by = Termination::Failure;
                        branch.failure = Some(e);
                        break;
                    }
                };
                let flat = point.field.range() < 1e-6;
                arclength = s;
                points.push(point);
                states.push(here);
                if flat {
                    branch.terminated_by = Termination::Reconnect;
                    break;
                }
                easy += 1;
                if easy >= 4 {
                    h = f64::min(h * 1.3, opts.step);
                    easy = 0;
                }
            }
            Err(e) => {
                easy = 0;
                halvings += 1;
                h *= 0.5;
                if halvings > opts.max_halvings {
                    branch.terminated_by = Termination::Failure;
                    branch.failure = Some(e);
                    break;
                }
            }
        }
    }
    branch.folds = detect_folds(&points);
    branch.points = points;
    Ok(branch)
}

/// Turning points of `kappa(s)`: sign changes of consecutive differences,
/// refined by the vertex of the parabola through the three nearest points.
pub fn detect_folds(points: &[BranchPoint]) -> Vec<Fold> {
    let s: Vec<f64> = points.iter().map(|p| p.s).collect();
    let k: Vec<f64> = points.iter().map(|p| p.kappa).collect();
    detect_folds_in(&s, &k)
}

pub fn detect_folds_in(s: &[f64], kappa: &[f64]) -> Vec<Fold> {
    let mut folds = Vec::new();
    if s.len() < 3 {
        return folds;
    }
    let mut i = 1;
    while i + 1 < s.len() {
        let before = kappa[i] - kappa[i - 1];
        let after = kappa[i + 1] - kappa[i];
        if before * after < 0.0 || (after == 0.0 && i + 2 < s.len() && before * (kappa[i + 2] - kappa[i + 1]) < 0.0) {
            let (s0, s1, s2) = (s[i - 1], s[i], s[i + 1]);
            let (k0, k1, k2) = (kappa[i - 1], kappa[i], kappa[i + 1]);
            // divided differences of the interpolating parabola
            let d01 = (k1 - k0) / (s1 - s0);
            let d12 = (k2 - k1) / (s2 - s1);
            let a = (d12 - d01) / (s2 - s0);
            let (sf, kf) = if a != 0.0 {
                let b = d01 - a * (s0 + s1);
                let sf = -b / (2.0 * a);
                (sf, k0 + d01 * (sf - s0) + a * (sf - s0) * (sf - s1))
            } else {
                (s1, k1)
            };
            folds.push(Fold {
                index: i,
                s: sf,
                kappa: kf,
            });
        }
        i += 1;
    }
    folds
}

/// Classification of a sweep cell by the distinct relaxation outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellClass {
    ConstantOnly,
    PatternOnly,
    Bistable,
    Unknown,
}

impl CellClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellClass::ConstantOnly => "constant-only",
            CellClass::PatternOnly => "pattern-only",
            CellClass::Bistable => "bistable",
            CellClass::Unknown => "unknown",
        }
    }
}

/// A distinct steady state reached from at least one initial condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub modality: usize,
    pub energy: f64,
    pub count: usize,
}

/// Analytic reference lines at a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overlays {
    /// `kappa > 1 + 4π²D`: the constant state is linearly unstable.
    pub constant_unstable: bool,
    /// `D < d_min(kappa)`: a state with energy below the constant exists.
    pub below_d_min: bool,
    /// `D > d_max(kappa)`: the energy is convex, only the constant survives.
    pub above_d_max: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub d: f64,
    pub kappa: f64,
    pub class: CellClass,
    pub outcomes: Vec<Outcome>,
    pub failures: usize,
    pub overlays: Overlays,
}

impl SweepCell {
    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub trials: usize,
    pub perturbation: f64,
    pub seed: u64,
    pub relax: RelaxOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            trials: 3,
            perturbation: 0.01,
            seed: 0,
            relax: RelaxOptions::default(),
        }
    }
}

/// Large unimodal seed `kappa e^{a cos 2πx} / ∫ e^{a cos 2πy}` with
/// `a = max(1, 1/(4π²D))`, narrowing as `D` decreases.
pub fn large_seed(grid: &Grid, p: &ModelParams) -> Field {
    let a = f64::max(1.0, 1.0 / (4.0 * PI * PI * p.d()));
    let raw = Field::from_raw(
        grid,
        grid.nodes()
            .into_iter()
            .map(|x| libm::exp(a * (libm::cos(2.0 * PI * x) - 1.0)))
            .collect(),
    );
    let mean = raw.mean();
    raw.map(|v| p.kappa() * v / mean)
}

pub fn overlays(d: f64, kappa: f64) -> Result<Overlays> {
    let b = bounds(kappa)?;
    Ok(Overlays {
        constant_unstable: kappa > 1.0 + 4.0 * PI * PI * d,
        below_d_min: d < b.d_min,
        above_d_max: d > b.d_max,
    })
}

fn same_outcome(a: &Outcome, modality: usize, energy: f64) -> bool {
    if a.modality == 0 || modality == 0 {
        return a.modality == modality;
    }
    a.modality == modality && (a.energy - energy).abs() <= 1e-6 * f64::max(1.0, energy.abs())
}

/// Relaxes `trials` perturbed constants and one large seed at `(d, kappa)`.
/// The random stream is `(opts.seed, cell_index)`, so cells can run in any
/// order.
pub fn sweep_cell(
    grid: &Grid,
    d: f64,
    kappa: f64,
    cell_index: u64,
    opts: &SweepOptions,
) -> Result<SweepCell> {
    let p = ModelParams::new(d, kappa)?;
    let mut rng = rng(opts.seed, cell_index);
    let mut initial: Vec<Field> = (0..opts.trials)
        .map(|_| random_even(grid, &mut rng, opts.perturbation).map(|v| v + kappa))
        .collect();
    initial.push(large_seed(grid, &p));

    let mut outcomes: Vec<Outcome> = Vec::new();
    let mut failures = 0;
    for u0 in &initial {
        match relax_to_steady_with(u0, &p, &opts.relax) {
            Ok(s) => match outcomes.iter_mut().find(|o| same_outcome(o, s.modality, s.energy)) {
                Some(o) => o.count += 1,
                None => outcomes.push(Outcome {
                    modality: s.modality,
                    energy: s.energy,
                    count: 1,
                }),
            },
            Err(_) => failures += 1,
        }
    }
    let has_constant = outcomes.iter().any(|o| o.modality == 0);
    let has_pattern = outcomes.iter().any(|o| o.modality > 0);
    let class = if failures > 0 {
        CellClass::Unknown
    } else {
        match (has_constant, has_pattern) {
            (true, true) => CellClass::Bistable,
            (true, false) => CellClass::ConstantOnly,
            (false, true) => CellClass::PatternOnly,
            (false, false) => CellClass::Unknown,
        }
    };
    Ok(SweepCell {
        d,
        kappa,
        class,
        outcomes,
        failures,
        overlays: overlays(d, kappa)?,
    })
}

/// Sequential sweep over the grid `d_values × kappa_values`, row-major in
/// `d`. Cell `i` uses random stream `i`.
pub fn sweep(
    grid: &Grid,
    d_values: &[f64],
    kappa_values: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::with_capacity(d_values.len() * kappa_values.len());
    for (i, &d) in d_values.iter().enumerate() {
        for (j, &kappa) in kappa_values.iter().enumerate() {
            let index = (i * kappa_values.len() + j) as u64;
            cells.push(sweep_cell(grid, d, kappa, index, opts)?);
        }
    }
    Ok(cells)
}
