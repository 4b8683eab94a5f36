mod commands;
mod error;
mod input;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use plugin_gp::sim::{Design, Method};

#[derive(Debug, Parser)]
#[command(
    name = "plugin-gp",
    version,
    about = "Plug-in GP regression for functions and their derivatives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Matern,
    Se,
    Sobolev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandArg {
    None,
    Pointwise,
    Simultaneous,
}

/// `auto` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

fn parse_auto_or(s: &str) -> Result<AutoOr, String> {
    if s == "auto" {
        return Ok(AutoOr::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(AutoOr::Value(v)),
        _ => Err(format!("expected 'auto' or a positive number, got '{s}'")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: plugin_gp::GpError| e.to_string())
}

fn parse_design(s: &str) -> Result<Design, String> {
    s.parse().map_err(|e: plugin_gp::GpError| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a GP to x,y[,sigma_y] data and write a model file.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum)]
        kernel: KernelArg,
        /// Matérn smoothness; `auto` picks it by leave-one-out.
        #[arg(long, default_value = "auto", value_parser = parse_auto_or)]
        nu: AutoOr,
        #[arg(long, default_value = "auto", value_parser = parse_auto_or)]
        lambda: AutoOr,
        #[arg(long, default_value = "auto", value_parser = parse_auto_or)]
        sigma2: AutoOr,
        /// Per-observation noise from the third column.
        #[arg(long)]
        hetero: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior mean of f^(k) on a grid, optionally with a credible band.
    Predict {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// a:b:m, m points from a to b inclusive; default is the training x.
        #[arg(long, value_parser = input::parse_grid)]
        grid: Option<(f64, f64, usize)>,
        #[arg(long, value_enum, default_value = "none")]
        band: BandArg,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = plugin_gp::bands::DEFAULT_BAND_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-out scores of candidate kernels.
    Select {
        input: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [KernelArg::Matern, KernelArg::Se, KernelArg::Sobolev])]
        kernels: Vec<KernelArg>,
        /// Matérn smoothness candidates; defaults to 2, 2.5, ..., 10.
        #[arg(long, value_delimiter = ',')]
        nu_grid: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation study and write per-repetition and aggregate tables.
    Simulate {
        #[arg(long, value_parser = parse_design)]
        design: Design,
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Noise sd; defaults to sqrt(0.1) for holder and 0.1 for xsinx.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "matern,se,sobolev,cv,bspline")]
        methods: Vec<Method>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
