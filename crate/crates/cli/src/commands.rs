use std::f64::consts::PI;

use mechpattern::bifurcation::{
    continue_branch, large_seed, sweep_cell, BifPoint, Branch, SweepCell, SweepOptions,
};
use mechpattern::dynamics::{simulate, SimulateOptions, TrajectorySummary};
use mechpattern::random::{random_even, rng};
use mechpattern::stability::{nonlocal_spectrum_with, EigenReport};
use mechpattern::steady::{
    count_modes, newton_steady, relax_to_steady_with, rescale_modal, RelaxOptions, SteadyState,
};
use mechpattern::{bounds, energy, integrate, BoundsReport, Field, Grid, ModelParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Init, Method};
use crate::config::{
    BranchConfig, ResolvedCommon, SimulateConfig, SpectrumConfig, SteadyConfig, SweepConfig,
};
use crate::error::{CliError, Context};
use crate::output::{Cell, OutputDir};

pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng seeded with seed_from_u64(seed); stream 0 for initial data, stream = cell index in sweeps";

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    common: &'a ResolvedCommon,
    options: &'a C,
    rng: &'static str,
    files: Vec<String>,
}

pub fn write_manifest<C: Serialize>(
    out: &mut OutputDir,
    command: &str,
    common: &ResolvedCommon,
    options: &C,
) -> Result<(), CliError> {
    let mut files = out.written().to_vec();
    files.push("manifest.json".into());
    let m = Manifest {
        tool: "mechpattern",
        version: env!("CARGO_PKG_VERSION"),
        core_version: mechpattern::VERSION,
        command,
        common,
        options,
        rng: RNG_DESCRIPTION,
        files,
    };
    out.write_json("manifest.json", &m)
}

pub fn initial_field(grid: &Grid, p: &ModelParams, init: Init, amplitude: f64, seed: u64) -> Field {
    let kappa = p.kappa();
    match init {
        Init::Cosine => Field::from_fn(grid, |x| kappa * (1.0 + amplitude * (2.0 * PI * x).cos()))
            .expect("finite cosine"),
        Init::Random => {
            let mut r = rng(seed, 0);
            random_even(grid, &mut r, 1.0).map(|v| kappa * (1.0 + amplitude * v))
        }
        Init::Seed => large_seed(grid, p),
        Init::Constant => Field::constant(grid, kappa),
    }
}

pub fn nodes_rows(f: &Field) -> Vec<Vec<Cell>> {
    f.grid()
        .nodes()
        .into_iter()
        .zip(f.values())
        .map(|(x, &u)| vec![x.into(), u.into()])
        .collect()
}

// ---- simulate -------------------------------------------------------------

pub fn run_simulate(common: &ResolvedCommon, cfg: &SimulateConfig) -> Result<TrajectorySummary, CliError> {
    let grid = common.make_grid()?;
    let p = common.params()?;
    let u0 = initial_field(&grid, &p, cfg.init, cfg.amplitude, common.seed);
    let opts = SimulateOptions {
        t_end: cfg.t_end,
        dt: cfg.dt,
        record_every: cfg.record_every,
        steady_tol: cfg.steady_tol,
        record_states: false,
    };
    simulate(&u0, &p, &opts).context("simulation")
}

pub fn trajectory_rows(tr: &TrajectorySummary) -> Vec<Vec<Cell>> {
    (0..tr.times.len())
        .map(|i| {
            vec![
                tr.times[i].into(),
                tr.masses[i].into(),
                tr.energies[i].into(),
                tr.max_u[i].into(),
                tr.min_u[i].into(),
            ]
        })
        .collect()
}

pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "mass", "energy", "max_u", "min_u"];

pub fn simulate_command(common: &ResolvedCommon, cfg: &SimulateConfig) -> Result<(), CliError> {
    let tr = run_simulate(common, cfg)?;
    let p = common.params()?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_csv("trajectory.csv", &TRAJECTORY_HEADER, &trajectory_rows(&tr))?;
    let header: Vec<String> = (0..tr.final_state.len()).map(|j| format!("u_{j}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let row: Vec<Cell> = tr.final_state.values().iter().map(|&v| v.into()).collect();
    out.write_csv("final_state.csv", &header, &[row])?;
    out.write_json(
        "summary.json",
        &json!({
            "converged": tr.converged,
            "final_time": tr.final_time,
            "step_count": tr.step_count,
            "final_rate": tr.final_rate,
            "max_energy_increase": tr.max_energy_increase,
            "modality": count_modes(&tr.final_state),
            "energy": energy(&tr.final_state, &p).context("energy")?,
            "mass": integrate(&tr.final_state),
        }),
    )?;
    write_manifest(&mut out, "simulate", common, cfg)
}

// ---- steady ---------------------------------------------------------------

pub fn compute_state(common: &ResolvedCommon, cfg: &SteadyConfig) -> Result<SteadyState, CliError> {
    let grid = common.make_grid()?;
    let m = cfg.modal;
    let p = ModelParams::new(common.d * (m * m) as f64, common.kappa).context("model parameters")?;
    let u0 = initial_field(&grid, &p, cfg.init, cfg.amplitude, common.seed);
    let state = match cfg.method {
        Method::Relax => {
            let opts = RelaxOptions {
                newton_tol: cfg.tol,
                ..Default::default()
            };
            relax_to_steady_with(&u0, &p, &opts).context("relaxation")?
        }
        Method::Newton => newton_steady(&u0, &p, cfg.tol).context("newton iteration")?,
    };
    if m == 1 {
        return Ok(state);
    }
    rescale_modal(&state, m).context("modal rescaling")
}

pub fn state_json(s: &SteadyState) -> Value {
    json!({
        "D": s.params.d(),
        "kappa": s.params.kappa(),
        "modality": s.modality,
        "energy": s.energy,
        "residual_norm": s.residual_norm,
        "n_points": s.field.len(),
        "values": s.field.values(),
    })
}

pub fn steady_command(common: &ResolvedCommon, cfg: &SteadyConfig) -> Result<(), CliError> {
    let state = compute_state(common, cfg)?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_json("steady.json", &state_json(&state))?;
    out.write_csv("profile.csv", &["x", "u"], &nodes_rows(&state.field))?;
    write_manifest(&mut out, "steady", common, cfg)
}

// ---- spectrum -------------------------------------------------------------

pub fn spectrum_json(state: &SteadyState, r: &EigenReport) -> Value {
    json!({
        "D": state.params.d(),
        "kappa": state.params.kappa(),
        "modality": state.modality,
        "energy": state.energy,
        "residual_norm": state.residual_norm,
        "lambdas": r.local.lambdas,
        "zero_counts": r.local.zero_counts,
        "betas": r.betas,
        "M": r.m,
        "nonlocal": r.nonlocal_eigs,
        "secular": r.secular.values,
        "verdict": r.verdict.as_str(),
        "leading_nu": r.leading_nu,
        "translation_nu": r.translation.map(|t| t.nu),
        "instability_theorem_applies": r.instability_theorem_applies,
        "crosscheck_error": r.crosscheck_error,
    })
}

pub fn spectrum_command(common: &ResolvedCommon, cfg: &SpectrumConfig) -> Result<(), CliError> {
    let state = compute_state(common, &cfg.state)?;
    let report = nonlocal_spectrum_with(&state, cfg.n_modes).context("spectrum")?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_json("spectrum.json", &spectrum_json(&state, &report))?;
    let rows: Vec<Vec<Cell>> = (0..report.nonlocal_eigs.len())
        .map(|i| {
            vec![
                i.into(),
                report.local.lambdas[i].into(),
                report.betas[i].into(),
                report.local.zero_counts[i].into(),
                report.nonlocal_eigs[i].into(),
                report.secular.values[i].into(),
            ]
        })
        .collect();
    out.write_csv(
        "eigenvalues.csv",
        &["index", "lambda", "beta", "zero_count", "nu_direct", "nu_secular"],
        &rows,
    )?;
    write_manifest(&mut out, "spectrum", common, cfg)
}

// ---- branch ---------------------------------------------------------------

pub const BRANCH_HEADER: [&str; 7] = ["s", "kappa", "amplitude", "energy", "leading_nu", "stable", "is_fold"];

pub fn branch_rows(b: &Branch) -> Vec<Vec<Cell>> {
    b.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                p.s.into(),
                p.kappa.into(),
                p.amplitude.into(),
                p.energy.into(),
                p.leading_nu.into(),
                p.stable.into(),
                b.folds.iter().any(|f| f.index == i).into(),
            ]
        })
        .collect()
}

pub fn branch_json(b: &Branch) -> Value {
    let o = &b.origin;
    json!({
        "origin": {
            "n": o.n,
            "D": o.d,
            "kappa_n": o.kappa_n,
            "alpha_pp": o.alpha_pp,
            "z_amp": o.z_amp,
            "kappa_curvature": o.kappa_curvature,
            "type": o.kind.as_str(),
        },
        "n_points": b.points.len(),
        "folds": b.folds.iter().map(|f| json!({"index": f.index, "s": f.s, "kappa": f.kappa})).collect::<Vec<_>>(),
        "terminated_by": b.terminated_by.as_str(),
        "failure": b.failure.as_ref().map(|e| e.to_string()),
    })
}

pub fn compute_branch(d: f64, grid: &Grid, cfg: &BranchConfig) -> Result<Branch, CliError> {
    let bp = BifPoint::new(d, cfg.n).context("bifurcation point")?;
    continue_branch(&bp, grid, &cfg.options()).context("continuation")
}

pub fn branch_command(common: &ResolvedCommon, cfg: &BranchConfig) -> Result<(), CliError> {
    let grid = common.make_grid()?;
    let b = compute_branch(common.d, &grid, cfg)?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_csv("branch.csv", &BRANCH_HEADER, &branch_rows(&b))?;
    out.write_json("branch.json", &branch_json(&b))?;
    write_manifest(&mut out, "branch", common, cfg)
}

// ---- sweep ----------------------------------------------------------------

pub fn run_sweep(
    grid: &Grid,
    seed: u64,
    d_values: &[f64],
    kappa_values: &[f64],
    trials: usize,
    perturbation: f64,
    threads: usize,
) -> Result<Vec<SweepCell>, CliError> {
    let opts = SweepOptions {
        trials,
        perturbation,
        seed,
        relax: RelaxOptions::default(),
    };
    let jobs: Vec<(u64, f64, f64)> = d_values
        .iter()
        .flat_map(|&d| kappa_values.iter().map(move |&k| (d, k)))
        .enumerate()
        .map(|(i, (d, k))| (i as u64, d, k))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let cells: Vec<mechpattern::Result<SweepCell>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, d, k)| sweep_cell(grid, d, k, i, &opts))
            .collect()
    });
    cells.into_iter().map(|c| c.context("sweep cell")).collect()
}

pub const SWEEP_HEADER: [&str; 8] = [
    "D",
    "kappa",
    "class",
    "n_outcomes",
    "failures",
    "constant_unstable",
    "below_d_min",
    "above_d_max",
];

pub fn sweep_rows(cells: &[SweepCell]) -> Vec<Vec<Cell>> {
    cells
        .iter()
        .map(|c| {
            vec![
                c.d.into(),
                c.kappa.into(),
                c.class.as_str().into(),
                c.n_outcomes().into(),
                c.failures.into(),
                c.overlays.constant_unstable.into(),
                c.overlays.below_d_min.into(),
                c.overlays.above_d_max.into(),
            ]
        })
        .collect()
}

pub fn outcome_rows(cells: &[SweepCell]) -> Vec<Vec<Cell>> {
    cells
        .iter()
        .flat_map(|c| {
            c.outcomes
                .iter()
                .map(move |o| vec![c.d.into(), c.kappa.into(), o.modality.into(), o.energy.into(), o.count.into()])
        })
        .collect()
}

pub const OVERLAY_HEADER: [&str; 5] = ["kappa", "d1", "d2", "d_min", "d_max"];

/// Analytic curves as functions of kappa. `d2` is also the linear threshold
/// of the constant state.
pub fn overlay_rows(kappas: &[f64]) -> Result<Vec<Vec<Cell>>, CliError> {
    kappas
        .iter()
        .map(|&k| {
            let b = bounds(k).context("bounds")?;
            Ok(vec![k.into(), b.d1.into(), b.d2.into(), b.d_min.into(), b.d_max.into()])
        })
        .collect()
}

pub fn sweep_command(common: &ResolvedCommon, cfg: &SweepConfig) -> Result<(), CliError> {
    let grid = common.make_grid()?;
    let cells = run_sweep(
        &grid,
        common.seed,
        &cfg.d_values,
        &cfg.kappa_values,
        cfg.trials,
        cfg.perturbation,
        cfg.threads,
    )?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_csv("sweep.csv", &SWEEP_HEADER, &sweep_rows(&cells))?;
    out.write_csv(
        "sweep_outcomes.csv",
        &["D", "kappa", "modality", "energy", "count"],
        &outcome_rows(&cells),
    )?;
    out.write_csv("overlays.csv", &OVERLAY_HEADER, &overlay_rows(&cfg.kappa_values)?)?;
    write_manifest(&mut out, "sweep", common, cfg)
}

// ---- bounds ---------------------------------------------------------------

pub fn bounds_json(b: &BoundsReport) -> Value {
    json!({
        "kappa": b.kappa,
        "d1": b.d1,
        "d2": b.d2,
        "d_min": b.d_min,
        "d_max": b.d_max,
        "argmax_n": b.argmax_n,
    })
}

pub fn bounds_command(common: &ResolvedCommon) -> Result<String, CliError> {
    let b = bounds(common.kappa).context("bounds")?;
    let mut out = OutputDir::create(&common.out)?;
    let v = bounds_json(&b);
    out.write_json("bounds.json", &v)?;
    write_manifest(&mut out, "bounds", common, &json!({}))?;
    crate::output::to_json_string(&v)
}
