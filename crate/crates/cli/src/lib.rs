//! Command line front end for `mechpattern`: option resolution, file
//! formats, and the preset figure runs.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Common};
use config::{
    load_file, BranchConfig, ResolvedCommon, SimulateConfig, SpectrumConfig, SteadyConfig, SweepConfig,
};
pub use error::CliError;

fn resolve_common(flags: &Common) -> Result<(ResolvedCommon, args::FileConfig), CliError> {
    let file = load_file(flags.config.as_deref())?;
    let common = ResolvedCommon::resolve(flags, &file.common)?;
    Ok((common, file))
}

/// Executes a parsed command. Text meant for stdout is returned.
pub fn run(cli: Cli) -> Result<Option<String>, CliError> {
    match cli.command {
        Command::Simulate { common, opts } => {
            let (c, file) = resolve_common(&common)?;
            commands::simulate_command(&c, &SimulateConfig::resolve(&opts, &file.simulate)?)?;
        }
        Command::Steady { common, opts } => {
            let (c, file) = resolve_common(&common)?;
            commands::steady_command(&c, &SteadyConfig::resolve(&opts, &file.steady)?)?;
        }
        Command::Spectrum { common, opts } => {
            let (c, file) = resolve_common(&common)?;
            let cfg = SpectrumConfig::resolve(&opts, &file.spectrum, c.grid)?;
            commands::spectrum_command(&c, &cfg)?;
        }
        Command::Branch { common, opts } => {
            let (c, file) = resolve_common(&common)?;
            commands::branch_command(&c, &BranchConfig::resolve(&opts, &file.branch)?)?;
        }
        Command::Sweep { common, opts } => {
            let (c, file) = resolve_common(&common)?;
            commands::sweep_command(&c, &SweepConfig::resolve(&opts, &file.sweep)?)?;
        }
        Command::Bounds { common } => {
            let (c, _) = resolve_common(&common)?;
            return commands::bounds_command(&c).map(Some);
        }
        Command::Figure { kind, common, opts } => {
            let (c, file) = resolve_common(&common)?;
            let grid = common.grid.or(file.common.grid);
            let threads = opts.threads.or(file.figure.threads).unwrap_or(0);
            figures::run_figure(kind, &c, grid, threads)?;
        }
    }
    Ok(None)
}

/// Parses `args`, runs the command and returns the process exit code.
/// Failures are reported on stderr as a JSON object.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{}", e.render());
            return 0;
        }
        Err(e) => {
            let err = CliError::Config(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(cli) {
        Ok(text) => {
            if let Some(text) = text {
                println!("{}", text.trim_end());
            }
            0
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}
