//! Command-line front end: argument parsing, thread pool and exit codes.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_calibrate_kappa, cmd_coeffs, cmd_evolve_free, cmd_residuals, cmd_scatter, run, Overrides};
pub use config::{
    CalibrationSection, CoeffsSection, DerivativeKind, Experiment, FreeSection, GridSection, ProfileSection,
    ResidualSection, Route, RunConfig, SolverSection,
};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "kgscatter", version, about = "Modified scattering laboratory for the 2D quadratic Klein-Gordon equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; `1` gives byte-identical reruns.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Adds the runs without the phase correction.
    #[arg(long, global = true)]
    pub ablate_psi: bool,
    /// Comma-separated residual variants, replacing the configured list.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    pub variant: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Fourier coefficients of `|cos θ|cos θ`, Parseval sums, corrector decay.
    Coeffs,
    /// Residual norms of the approximate solution over the time ladder.
    Residuals,
    /// Final-state problem by Picard iteration and backward evolution.
    Scatter,
    /// Fits the Fourier normalization against the free evolution.
    CalibrateKappa,
    /// Free evolution against its leading asymptotic term.
    EvolveFree,
}

impl Command {
    pub fn experiment(self) -> Experiment {
        match self {
            Command::Coeffs => Experiment::Coeffs,
            Command::Residuals => Experiment::Residuals,
            Command::Scatter => Experiment::Scatter,
            Command::CalibrateKappa => Experiment::CalibrateKappa,
            Command::EvolveFree => Experiment::EvolveFree,
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let overrides = Overrides { ablate_psi: cli.ablate_psi, variants: cli.variant.clone() };
    let experiment = cli.command.experiment();
    let go = move || run(experiment, config, &overrides, &out);
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
