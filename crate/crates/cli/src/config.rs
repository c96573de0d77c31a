//! Resolution of options: flag, then config file, then built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use mechpattern::{Grid, ModelParams};
use serde::Serialize;

use crate::args::{
    BranchArgs, Common, FileConfig, Init, Method, SimulateArgs, SpectrumArgs, SteadyArgs, SweepArgs,
};
use crate::error::{CliError, Context};

pub fn load_file(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

macro_rules! overlay {
    ($flags:expr, $file:expr, [$($field:ident),* $(,)?]) => {{
        let mut merged = $flags.clone();
        $(
            if merged.$field.is_none() {
                merged.$field = $file.$field.clone();
            }
        )*
        merged
    }};
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least_one(name: &str, v: usize) -> Result<usize, CliError> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be at least 1")))
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct ResolvedCommon {
    #[serde(rename = "D")]
    pub d: f64,
    pub kappa: f64,
    pub grid: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ResolvedCommon {
    pub fn resolve(flags: &Common, file: &Common) -> Result<Self, CliError> {
        let c = overlay!(flags, file, [d, kappa, grid, seed, out]);
        let r = ResolvedCommon {
            d: c.d.unwrap_or(0.01),
            kappa: c.kappa.unwrap_or(1.5),
            grid: c.grid.unwrap_or(mechpattern::grid::DEFAULT_POINTS),
            seed: c.seed.unwrap_or(0),
            out: c.out.unwrap_or_else(|| PathBuf::from("out")),
        };
        r.params()?;
        r.make_grid()?;
        Ok(r)
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.d, self.kappa).context("model parameters")
    }

    pub fn make_grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid).context("grid")
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct SimulateConfig {
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
    pub steady_tol: f64,
    pub init: Init,
    pub amplitude: f64,
}

impl SimulateConfig {
    pub fn resolve(flags: &SimulateArgs, file: &SimulateArgs) -> Result<Self, CliError> {
        let a = overlay!(flags, file, [t_end, dt, record_every, steady_tol, init, amplitude]);
        let steady_tol = a.steady_tol.unwrap_or(1e-9);
        if !(steady_tol >= 0.0) {
            return Err(CliError::Config("steady_tol must be non-negative".into()));
        }
        Ok(SimulateConfig {
            t_end: positive("t_end", a.t_end.unwrap_or(100.0))?,
            dt: positive("dt", a.dt.unwrap_or(1e-3))?,
            record_every: at_least_one("record_every", a.record_every.unwrap_or(100))?,
            steady_tol,
            init: a.init.unwrap_or(Init::Cosine),
            amplitude: a.amplitude.unwrap_or(0.01),
        })
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct SteadyConfig {
    pub method: Method,
    pub init: Init,
    pub amplitude: f64,
    pub tol: f64,
    pub modal: usize,
}

impl SteadyConfig {
    pub fn resolve(flags: &SteadyArgs, file: &SteadyArgs) -> Result<Self, CliError> {
        let a = overlay!(flags, file, [method, init, amplitude, tol, modal]);
        Ok(SteadyConfig {
            method: a.method.unwrap_or(Method::Relax),
            init: a.init.unwrap_or(Init::Seed),
            amplitude: a.amplitude.unwrap_or(0.01),
            tol: positive("tol", a.tol.unwrap_or(1e-10))?,
            modal: at_least_one("modal", a.modal.unwrap_or(1))?,
        })
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct SpectrumConfig {
    #[serde(flatten)]
    pub state: SteadyConfig,
    pub n_modes: usize,
}

impl SpectrumConfig {
    pub fn resolve(flags: &SpectrumArgs, file: &SpectrumArgs, grid: usize) -> Result<Self, CliError> {
        let a = overlay!(flags, file, [method, init, amplitude, tol, modal, n_modes]);
        let state = SteadyConfig::resolve(
            &SteadyArgs {
                method: a.method,
                init: a.init,
                amplitude: a.amplitude,
                tol: a.tol,
                modal: a.modal,
            },
            &SteadyArgs::default(),
        )?;
        Ok(SpectrumConfig {
            state,
            n_modes: at_least_one("n_modes", a.n_modes.unwrap_or(grid / 4))?,
        })
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct BranchConfig {
    pub n: usize,
    pub step: f64,
    pub max_points: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub tol: f64,
}

impl BranchConfig {
    pub fn resolve(flags: &BranchArgs, file: &BranchArgs) -> Result<Self, CliError> {
        let a = overlay!(flags, file, [n, step, max_points, kappa_min, kappa_max, tol]);
        let d = mechpattern::bifurcation::ContinueOptions::default();
        Ok(BranchConfig {
            n: at_least_one("n", a.n.unwrap_or(1))?,
            step: positive("step", a.step.unwrap_or(d.step))?,
            max_points: a.max_points.unwrap_or(d.max_points),
            kappa_min: a.kappa_min.unwrap_or(d.kappa_min),
            kappa_max: a.kappa_max.unwrap_or(d.kappa_max),
            tol: positive("tol", a.tol.unwrap_or(d.tol))?,
        })
    }

    pub fn options(&self) -> mechpattern::bifurcation::ContinueOptions {
        mechpattern::bifurcation::ContinueOptions {
            step: self.step,
            max_points: self.max_points,
            kappa_min: self.kappa_min,
            kappa_max: self.kappa_max,
            tol: self.tol,
            ..Default::default()
        }
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct SweepConfig {
    #[serde(rename = "D_values")]
    pub d_values: Vec<f64>,
    pub kappa_values: Vec<f64>,
    pub trials: usize,
    pub perturbation: f64,
    /// 0 means the available parallelism.
    pub threads: usize,
}

impl SweepConfig {
    pub fn resolve(flags: &SweepArgs, file: &SweepArgs) -> Result<Self, CliError> {
        let a = overlay!(flags, file, [d_values, kappa_values, trials, perturbation, threads]);
        let d_values = a
            .d_values
            .unwrap_or_else(|| vec![0.0025, 0.005, 0.01, 0.02, 0.04, 0.08]);
        let kappa_values = a
            .kappa_values
            .unwrap_or_else(|| vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        if d_values.is_empty() || kappa_values.is_empty() {
            return Err(CliError::Config("sweep needs at least one D and one kappa".into()));
        }
        for &d in &d_values {
            positive("D value", d)?;
        }
        for &k in &kappa_values {
            positive("kappa value", k)?;
        }
        Ok(SweepConfig {
            d_values,
            kappa_values,
            trials: a.trials.unwrap_or(3),
            perturbation: positive("perturbation", a.perturbation.unwrap_or(0.01))?,
            threads: a.threads.unwrap_or(0),
        })
    }
}
