//! Preset runs that produce the data behind the standard figures.

use mechpattern::bifurcation::large_seed;
use mechpattern::dynamics::{simulate, SimulateOptions};
use mechpattern::steady::relax_to_steady;
use mechpattern::{Grid, ModelParams};
use serde::Serialize;
use serde_json::json;

use crate::args::FigureKind;
use crate::commands::{
    branch_json, branch_rows, compute_branch, outcome_rows, overlay_rows, run_sweep, sweep_rows,
    trajectory_rows, write_manifest, BRANCH_HEADER, OVERLAY_HEADER, SWEEP_HEADER, TRAJECTORY_HEADER,
};
use crate::config::{BranchConfig, ResolvedCommon};
use crate::error::{CliError, Context};
use crate::output::{Cell, OutputDir};

#[derive(Serialize, Debug, Clone)]
pub struct FigureConfig {
    pub figure: &'static str,
    pub grid: usize,
    pub threads: usize,
}

fn preset_grid(kind: FigureKind) -> usize {
    match kind {
        FigureKind::Fig1Left => 256,
        FigureKind::Fig1Middle => 2048,
        FigureKind::Fig1Right => 4096,
        FigureKind::Fig2Top => 512,
        FigureKind::Fig2BottomLeft => 512,
        FigureKind::Fig2BottomRight => 256,
    }
}

fn params(d: f64, kappa: f64) -> Result<ModelParams, CliError> {
    ModelParams::new(d, kappa).context("model parameters")
}

fn grid(n: usize) -> Result<Grid, CliError> {
    Grid::new(n).context("grid")
}

/// Runs a preset. `grid_override` replaces the preset resolution.
pub fn run_figure(
    kind: FigureKind,
    common: &ResolvedCommon,
    grid_override: Option<usize>,
    threads: usize,
) -> Result<(), CliError> {
    let cfg = FigureConfig {
        figure: kind.as_str(),
        grid: grid_override.unwrap_or(preset_grid(kind)),
        threads,
    };
    let g = grid(cfg.grid)?;
    let mut out = OutputDir::create(&common.out)?;
    match kind {
        FigureKind::Fig1Left => fig1_left(&g, &mut out)?,
        FigureKind::Fig1Middle => {
            let rows = profiles(&g, &[1.0, 1.5, 2.0, 2.5, 3.0].map(|k| (1e-3, k)))?;
            out.write_csv("profiles.csv", &["D", "kappa", "x", "u"], &rows)?;
        }
        FigureKind::Fig1Right => {
            let rows = profiles(&g, &[(1e-3, 3.0), (1e-4, 3.0)])?;
            out.write_csv("profiles.csv", &["D", "kappa", "x", "u"], &rows)?;
        }
        FigureKind::Fig2Top => fig2_top(&g, common.seed, threads, &mut out)?,
        FigureKind::Fig2BottomLeft => branches(&g, 0.005, &mut out)?,
        FigureKind::Fig2BottomRight => branches(&g, 0.02, &mut out)?,
    }
    write_manifest(&mut out, &format!("figure {}", kind.as_str()), common, &cfg)
}

fn fig1_left(g: &Grid, out: &mut OutputDir) -> Result<(), CliError> {
    let p = params(0.01, 1.5)?;
    let u0 = crate::commands::initial_field(g, &p, crate::args::Init::Cosine, 0.01, 0);
    let opts = SimulateOptions {
        t_end: 60.0,
        dt: 1e-3,
        record_every: 5000,
        steady_tol: 0.0,
        record_states: true,
    };
    let tr = simulate(&u0, &p, &opts).context("simulation")?;
    let rows: Vec<Vec<Cell>> = tr
        .times
        .iter()
        .zip(&tr.states)
        .flat_map(|(&t, f)| {
            g.nodes()
                .into_iter()
                .zip(f.values().to_vec())
                .map(move |(x, u)| vec![t.into(), x.into(), u.into()])
        })
        .collect();
    out.write_csv("profiles.csv", &["t", "x", "u"], &rows)?;
    out.write_csv("trajectory.csv", &TRAJECTORY_HEADER, &trajectory_rows(&tr))
}

fn profiles(g: &Grid, cases: &[(f64, f64)]) -> Result<Vec<Vec<Cell>>, CliError> {
    let mut rows = Vec::new();
    for &(d, kappa) in cases {
        let p = params(d, kappa)?;
        let s = relax_to_steady(&large_seed(g, &p), &p)
            .context(&format!("steady state at D = {d}, kappa = {kappa}"))?;
        for (x, &u) in g.nodes().into_iter().zip(s.field.values()) {
            rows.push(vec![d.into(), kappa.into(), x.into(), u.into()]);
        }
    }
    Ok(rows)
}

fn fig2_top(g: &Grid, seed: u64, threads: usize, out: &mut OutputDir) -> Result<(), CliError> {
    let d_values: Vec<f64> = (0..8).map(|i| 0.0025 * 2f64.powf(i as f64 * 5.0 / 7.0)).collect();
    let kappa_values: Vec<f64> = (0..11).map(|i| 0.5 + 0.25 * i as f64).collect();
    let cells = run_sweep(g, seed, &d_values, &kappa_values, 3, 0.01, threads)?;
    out.write_csv("sweep.csv", &SWEEP_HEADER, &sweep_rows(&cells))?;
    out.write_csv(
        "sweep_outcomes.csv",
        &["D", "kappa", "modality", "energy", "count"],
        &outcome_rows(&cells),
    )?;
    let curve: Vec<f64> = (0..=100).map(|i| 0.5 + 0.025 * i as f64).collect();
    out.write_csv("overlays.csv", &OVERLAY_HEADER, &overlay_rows(&curve)?)
}

fn branches(g: &Grid, d: f64, out: &mut OutputDir) -> Result<(), CliError> {
    let mut summary = Vec::new();
    for n in [1, 2] {
        let cfg = BranchConfig {
            n,
            ..BranchConfig::resolve(&Default::default(), &Default::default())?
        };
        let b = compute_branch(d, g, &cfg)?;
        out.write_csv(&format!("branch_n{n}.csv"), &BRANCH_HEADER, &branch_rows(&b))?;
        summary.push(branch_json(&b));
    }
    out.write_json("branches.json", &json!({ "D": d, "branches": summary }))
}
