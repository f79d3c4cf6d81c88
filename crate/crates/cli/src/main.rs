//! `dirac-surface`: geometry, operator and reconstruction reports for
//! immersion files.

mod commands;
mod report;

use clap::{Args, Parser, Subcommand};
use dirac_surface::corpus;
use dirac_surface::expr::{parse_immersion_file, ImmersionSpec};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "dirac-surface",
    version,
    about = "Dirac operators and Weierstrass data of surfaces in E⁴"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame, metric, connection and gauge data at sample points.
    Frame(RunArgs),
    /// Weierstrass reconstruction and Dirac residuals at sample points.
    Verify(RunArgs),
    /// Spectrum of the grid-discretised operator.
    Spectrum(RunArgs),
    /// Tube density against its leading-order form.
    Tube(RunArgs),
    /// Parse an immersion file and echo its contents.
    ParseCheck(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Immersion file, or the name of a bundled corpus entry.
    pub file: PathBuf,
    /// Sample point; may be repeated.
    #[arg(long, num_args = 2, value_names = ["U", "V"], action = clap::ArgAction::Append, allow_negative_numbers = true)]
    pub at: Vec<f64>,
    /// Sample lattice (interior points) or spectral grid, as NxM.
    #[arg(long, value_parser = parse_grid, conflicts_with = "at")]
    pub grid: Option<[usize; 2]>,
    /// Use the gauged operator.
    #[arg(long)]
    pub gauged: bool,
    /// Finite-difference step. For `verify`, the coarsest residual step.
    #[arg(long)]
    pub step: Option<f64>,
    /// JSON output (the default).
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// CSV output, one row per record.
    #[arg(long)]
    pub csv: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Largest matrix dimension `spectrum` will diagonalise.
    #[arg(long, default_value_t = dirac_surface::dirac::DEFAULT_EIGEN_CAP)]
    pub cap: usize,
}

fn parse_grid(text: &str) -> Result<[usize; 2], String> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got `{text}`"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad grid size `{t}`: {e}"))
    };
    let dims = [parse(a)?, parse(b)?];
    if dims.contains(&0) {
        return Err("grid sizes must be positive".into());
    }
    Ok(dims)
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Cap(String),
    #[error("writing report: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

fn load_spec(path: &Path) -> Result<ImmersionSpec, CliError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            let bundled = path.to_str().and_then(corpus::source);
            match bundled {
                Some(text) if path.components().count() == 1 => text.to_string(),
                _ => return Err(CliError::Input(format!("{}: {e}", path.display()))),
            }
        }
    };
    parse_immersion_file(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<bool, CliError> {
    let (name, args) = match &command {
        Command::Frame(a) => ("frame", a),
        Command::Verify(a) => ("verify", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Tube(a) => ("tube", a),
        Command::ParseCheck(a) => ("parse-check", a),
    };
    if let Some(h) = args.step {
        if !(h.is_finite() && h > 0.0) {
            return Err(CliError::Input(format!("--step must be positive, got {h}")));
        }
    }
    let spec = load_spec(&args.file)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        pool = pool.num_threads(k.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    let report = pool.install(|| match name {
        "frame" => commands::frame(&spec, args),
        "verify" => commands::verify(&spec, args),
        "spectrum" => commands::spectrum(&spec, args),
        "tube" => commands::tube(&spec, args),
        _ => commands::parse_check(&spec, args),
    })?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    if args.csv {
        report
            .write_csv(&mut sink)
            .map_err(|e| CliError::Io(io::Error::other(e)))?;
    } else {
        report.write_json(&mut sink)?;
    }
    sink.flush()?;

    for field in report.nonfinite_fields() {
        eprintln!("non-finite value in {field}");
    }
    let failed = report.failed_checks();
    if !failed.is_empty() {
        eprintln!("failed checks: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dirac-surface: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
