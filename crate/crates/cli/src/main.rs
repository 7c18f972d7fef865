//! Command-line frontend for spectral anomaly detection on multichannel
//! measurement windows.

mod cache;
mod commands;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use freespec_core::{Error, PolynomialKind};

#[derive(Parser)]
#[command(
    name = "freespec",
    version,
    about = "Spectral anomaly detection and fault location for multichannel measurement windows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_polynomial(s: &str) -> Result<PolynomialKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Flags shared by `detect` and `locate`.
#[derive(Args)]
struct DetectArgs {
    /// Reference window CSV (channels x samples).
    reference: PathBuf,
    /// Test window CSV with the same channel set.
    test: PathBuf,
    /// Which polynomial of the two sample covariances to analyze.
    #[arg(long, default_value = "p2", value_parser = parse_polynomial)]
    polynomial: PolynomialKind,
    /// Relative noise level added during preprocessing.
    #[arg(long, default_value_t = 1e-5)]
    eta: f64,
    /// Base RNG seed; the test window preprocessing uses seed + 1.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outlier margin beyond the support edge. Defaults to half a grid
    /// spacing plus 8% of the detected support width.
    #[arg(long)]
    margin_eps: Option<f64>,
    /// Number of grid points for the density evaluation.
    #[arg(long, default_value_t = 512)]
    grid_points: usize,
    /// Imaginary smoothing offset. Defaults to 1e-3 of the grid span.
    #[arg(long)]
    smoothing_offset: Option<f64>,
    /// Corner regularization for the squared-difference linearization.
    #[arg(long, default_value_t = 1e-6)]
    corner_eps: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a measurement window from a scenario JSON file.
    Simulate {
        /// Scenario description (channel count, window length, events).
        scenario: PathBuf,
        /// Output CSV path for the simulated window.
        #[arg(long)]
        out: PathBuf,
    },
    /// Histogram the sample-covariance eigenvalues of a window and report the
    /// KS distance to the Marchenko-Pastur law.
    MpCheck {
        /// Measurement window CSV.
        data: PathBuf,
        /// Relative noise level added during preprocessing.
        #[arg(long, default_value_t = 1e-5)]
        eta: f64,
        /// Number of independently preprocessed repetitions to pool.
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Histogram bin count (Freedman-Diaconis when omitted).
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path for the histogram.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the asymptotic spectral density of a polynomial of two
    /// independent sample-covariance laws.
    Asd {
        #[arg(long, value_parser = parse_polynomial)]
        polynomial: PolynomialKind,
        /// Aspect ratio c = N/T of both factor laws.
        #[arg(long, default_value_t = 1.0)]
        ratio_c: f64,
        /// Noise variance of both factor laws.
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        /// Grid lower edge. Defaults to a bound derived from the factor
        /// support edges.
        #[arg(long)]
        grid_lo: Option<f64>,
        #[arg(long)]
        grid_hi: Option<f64>,
        #[arg(long, default_value_t = 512)]
        grid_points: usize,
        /// Imaginary smoothing offset. Defaults to 1e-3 of the grid span.
        #[arg(long)]
        smoothing_offset: Option<f64>,
        /// Corner regularization for the squared-difference linearization.
        #[arg(long, default_value_t = 1e-6)]
        corner_eps: f64,
        /// Output CSV path for the density.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a test window against a reference window and report
    /// out-of-support eigenvalues.
    Detect {
        #[command(flatten)]
        args: DetectArgs,
        /// Write the detection report JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attribute detected outliers to a channel via eigenvector weights.
    Locate {
        #[command(flatten)]
        args: DetectArgs,
        /// Slide a reference-width window over the test stream with this
        /// step, writing one CSV row per position. Without it the whole test
        /// window is analyzed once and a JSON report is written.
        #[arg(long)]
        stride: Option<usize>,
        /// Output path (JSON for a single window, CSV when sliding).
        #[arg(long)]
        out: PathBuf,
    },
    /// Eigenvalues of the normalized product of two windows, split into bulk
    /// and outliers by a robust radius estimate.
    Product {
        /// First factor window CSV (square).
        reference: PathBuf,
        /// Second factor window CSV (same shape).
        test: PathBuf,
        /// Relative slack on the bulk radius before a point counts as an
        /// outlier.
        #[arg(long, default_value_t = 0.15)]
        delta: f64,
        /// Output CSV path for the spectrum; a JSON summary is written next
        /// to it.
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Parse(_) => 1,
        Error::NonConvergence { .. } => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> freespec_core::Result<()> {
    match cli.command {
        Command::Simulate { scenario, out } => commands::simulate(&scenario, &out),
        Command::MpCheck { data, eta, repetitions, bins, seed, out } => {
            commands::mp_check(&data, eta, repetitions, bins, seed, &out)
        }
        Command::Asd {
            polynomial,
            ratio_c,
            variance,
            grid_lo,
            grid_hi,
            grid_points,
            smoothing_offset,
            corner_eps,
            out,
        } => commands::asd(
            polynomial,
            ratio_c,
            variance,
            grid_lo,
            grid_hi,
            grid_points,
            smoothing_offset,
            corner_eps,
            &out,
        ),
        Command::Detect { args, out } => commands::detect(&args, out.as_deref()),
        Command::Locate { args, stride, out } => commands::locate(&args, stride, &out),
        Command::Product { reference, test, delta, out } => {
            commands::product(&reference, &test, delta, &out)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
