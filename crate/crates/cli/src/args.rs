//! Command line flags and the matching config-file sections. Every option is
//! optional here; [`crate::config`] fills in file values and defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "mechpattern", version, about = "Nonlocal mechanochemical pattern formation on the periodic unit interval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate the evolution equation from a perturbed constant state.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: SimulateArgs,
    },
    /// Compute a steady state by relaxation or Newton iteration.
    Steady {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: SteadyArgs,
    },
    /// Linear stability of a steady state (direct and secular routes).
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: SpectrumArgs,
    },
    /// Continue the branch bifurcating from the constant state at kappa_n.
    Branch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: BranchArgs,
    },
    /// Classify a (D, kappa) grid by the steady states reached.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: SweepArgs,
    },
    /// Variational bounds d1, d2, d_min and d_max for a given kappa.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Data for one of the preset figures.
    Figure {
        #[arg(value_enum)]
        kind: FigureKind,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: FigureArgs,
    },
}

#[derive(Args, Deserialize, Serialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Common {
    /// Diffusivity.
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Number of grid points (power of two, at least 8).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML config file; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Deserialize, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// kappa (1 + amplitude cos 2πx)
    Cosine,
    /// kappa (1 + amplitude r(x)) with r a seeded random even field
    Random,
    /// Unimodal bump of mean kappa
    Seed,
    Constant,
}

impl Init {
    pub fn as_str(&self) -> &'static str {
        match self {
            Init::Cosine => "cosine",
            Init::Random => "random",
            Init::Seed => "seed",
            Init::Constant => "constant",
        }
    }
}

#[derive(ValueEnum, Deserialize, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Relax,
    Newton,
}

#[derive(Args, Deserialize, Serialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub steady_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<Init>,
    /// Perturbation size relative to kappa.
    #[arg(long)]
    pub amplitude: Option<f64>,
}

#[derive(Args, Deserialize, Serialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SteadyArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    pub init: Option<Init>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Newton tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Build an m-modal state by rescaling the 1-modal state at m² D.
    #[arg(long)]
    pub modal: Option<usize>,
}

#[derive(Args, Deserialize, Serialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    pub init: Option<Init>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub modal: Option<usize>,
    /// Galerkin truncation (defaults to grid / 4).
    #[arg(long)]
    pub n_modes: Option<usize>,
}

#[derive(Args, Deserialize, Serialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BranchArgs {
    /// Mode number of the bifurcation point.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub max_points: Option<usize>,
    #[arg(long)]
    pub kappa_min: Option<f64>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Deserialize, Serialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    /// Comma-separated diffusivities.
    #[arg(long = "D-values", value_delimiter = ',')]
    #[serde(rename = "D_values")]
    pub d_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub kappa_values: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub perturbation: Option<f64>,
    /// Worker threads (0 = available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Deserialize, Serialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FigureArgs {
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureKind {
    Fig1Left,
    Fig1Middle,
    Fig1Right,
    Fig2Top,
    Fig2BottomLeft,
    Fig2BottomRight,
}

impl FigureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FigureKind::Fig1Left => "fig1-left",
            FigureKind::Fig1Middle => "fig1-middle",
            FigureKind::Fig1Right => "fig1-right",
            FigureKind::Fig2Top => "fig2-top",
            FigureKind::Fig2BottomLeft => "fig2-bottom-left",
            FigureKind::Fig2BottomRight => "fig2-bottom-right",
        }
    }
}

/// Config file layout: one table per command plus shared `[common]` keys.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub common: Common,
    #[serde(default)]
    pub simulate: SimulateArgs,
    #[serde(default)]
    pub steady: SteadyArgs,
    #[serde(default)]
    pub spectrum: SpectrumArgs,
    #[serde(default)]
    pub branch: BranchArgs,
    #[serde(default)]
    pub sweep: SweepArgs,
    #[serde(default)]
    pub figure: FigureArgs,
}
