//! Implementations of the CLI subcommands.

use std::io::{BufWriter, Write};
use std::path::Path;

use freespec_core::freeprob::mp_quadrature;
use freespec_core::randmat::{read_window_csv, write_histogram_csv, write_window_csv};
use freespec_core::{
    detect_eigensystem, esd, preprocess, product_spectrum, report_to_json, run_scenario,
    sample_covariance, write_spectrum_csv, DetectionReport, EsdHistogram, Error,
    FixedPointConfig, MeasurementWindow, MpParams, PolynomialKind, Result, SampleCovariance,
    Scenario, SpectralDensity, Verdict,
};
use serde::Serialize;

use crate::cache::{cached_asd, AsdKey};
use crate::DetectArgs;

pub fn simulate(scenario_path: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(scenario_path)?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("scenario JSON: {e}")))?;
    let window = run_scenario(&scenario)?;
    write_window_csv(&window, out)?;
    println!(
        "wrote {} channels x {} samples to {}",
        window.n_channels(),
        window.n_samples(),
        out.display()
    );
    Ok(())
}

/// KS distance between the histogram's empirical CDF and the
/// Marchenko-Pastur CDF, evaluated at the bin edges.
fn histogram_ks_vs_mp(hist: &EsdHistogram, params: &MpParams) -> f64 {
    let rule = mp_quadrature(params, 4096);
    let total = hist.total_eigenvalues as f64;
    let mut cum = 0.0;
    let mut ks = 0.0f64;
    for (i, &edge) in hist.bin_edges.iter().enumerate() {
        if i > 0 {
            cum += hist.counts[i - 1] as f64;
        }
        let empirical = cum / total;
        let theoretical: f64 =
            rule.iter().filter(|&&(x, _)| x <= edge).map(|&(_, w)| w).sum();
        ks = ks.max((empirical - theoretical).abs());
    }
    ks
}

pub fn mp_check(
    data: &Path,
    eta: f64,
    repetitions: usize,
    bins: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let window = read_window_csv(data)?;
    let hist = esd(&window, repetitions, eta, bins, seed)?;
    write_histogram_csv(&hist, out)?;
    let params = MpParams::new(window.ratio_c(), 1.0)?;
    let ks = histogram_ks_vs_mp(&hist, &params);
    println!(
        "pooled {} eigenvalues into {} bins, wrote {}",
        hist.total_eigenvalues,
        hist.counts.len(),
        out.display()
    );
    println!("KS distance to Marchenko-Pastur (c = {:.6}): {:.6}", window.ratio_c(), ks);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn asd(
    kind: PolynomialKind,
    ratio_c: f64,
    variance: f64,
    grid_lo: Option<f64>,
    grid_hi: Option<f64>,
    grid_points: usize,
    smoothing_offset: Option<f64>,
    corner_eps: f64,
    out: &Path,
) -> Result<()> {
    let params = MpParams::new(ratio_c, variance)?;
    let (lo_default, hi_default) = default_grid(kind, &params);
    let lo = grid_lo.unwrap_or(lo_default);
    let hi = grid_hi.unwrap_or(hi_default);
    let smoothing = smoothing_offset.unwrap_or(1e-3 * (hi - lo));
    let (density, hit) = cached_asd(&AsdKey {
        kind,
        params0: params,
        params1: params,
        grid_lo: lo,
        grid_hi: hi,
        grid_points,
        smoothing_offset: smoothing,
        corner_eps,
        config: FixedPointConfig::default(),
    })?;
    density.write_csv(out)?;
    println!("cache: {}", if hit { "hit" } else { "miss" });
    println!("mass: {:.6}", density.total_mass());
    for &(a, b) in &density.support_intervals {
        println!("support: [{a:.6}, {b:.6}]");
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Grid bracketing the polynomial's null support when both factors follow
/// `params`. The difference of two laws supported on [a, b] lives in
/// [a - b, b - a], so [-b, b] covers it and [0, b^2] covers its square; the
/// grid adds 10% headroom, plus a short negative reach for the square so the
/// smoothed left edge stays visible.
fn default_grid(kind: PolynomialKind, params: &MpParams) -> (f64, f64) {
    let (_, edge) = params.support();
    match kind {
        PolynomialKind::P1 => (-1.1 * edge, 1.1 * edge),
        PolynomialKind::P2 => {
            let hi = 1.1 * edge * edge;
            (-0.05 * hi, hi)
        }
    }
}

fn check_same_shape(reference: &MeasurementWindow, test: &MeasurementWindow) -> Result<()> {
    if reference.data.dim() != test.data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "reference window is {:?}, test window is {:?}",
            reference.data.dim(),
            test.data.dim()
        )));
    }
    Ok(())
}

fn covariance_of(window: &MeasurementWindow, eta: f64, seed: u64) -> Result<SampleCovariance> {
    let pre = preprocess(window, eta, seed)?;
    Ok(sample_covariance(&pre))
}

/// Density of the polynomial's null law, pulled from the cache when
/// available. Preprocessing standardizes every channel, so the null factor
/// law is always the unit-variance law at the window's aspect ratio and the
/// grid depends only on the window shape.
fn null_asd(args: &DetectArgs, ratio_c: f64) -> Result<(SpectralDensity, bool)> {
    let params = MpParams::new(ratio_c, 1.0)?;
    let (lo, hi) = default_grid(args.polynomial, &params);
    let smoothing = args.smoothing_offset.unwrap_or(1e-3 * (hi - lo));
    cached_asd(&AsdKey {
        kind: args.polynomial,
        params0: params,
        params1: params,
        grid_lo: lo,
        grid_hi: hi,
        grid_points: args.grid_points,
        smoothing_offset: smoothing,
        corner_eps: args.corner_eps,
        config: FixedPointConfig::default(),
    })
}

fn verdict_label(report: &DetectionReport) -> &'static str {
    match report.verdict {
        Verdict::H0Retained => "H0_retained",
        Verdict::Anomaly => "anomaly",
    }
}

pub fn detect(args: &DetectArgs, out: Option<&Path>) -> Result<()> {
    let reference = read_window_csv(&args.reference)?;
    let test = read_window_csv(&args.test)?;
    check_same_shape(&reference, &test)?;
    let sigma0 = covariance_of(&reference, args.eta, args.seed)?;
    let sigma1 = covariance_of(&test, args.eta, args.seed + 1)?;
    let (density, hit) = null_asd(args, reference.ratio_c())?;
    let margin = match args.margin_eps {
        Some(m) => m,
        None => density.default_margin(),
    };
    let (report, _) =
        detect_eigensystem(args.polynomial, &sigma0, &sigma1, &density, margin)?;
    let json = report_to_json(&report)?;
    match out {
        Some(path) => {
            std::fs::write(path, json + "\n")?;
            println!(
                "verdict: {}  s: {:.6}  outliers: {}  margin: {:.6}  asd cache: {}",
                verdict_label(&report),
                report.s,
                report.outliers.len(),
                margin,
                if hit { "hit" } else { "miss" }
            );
            println!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct LocationJson<'a> {
    /// Index of the last sample covered by the analyzed window.
    t_index: usize,
    #[serde(rename = "L")]
    indicator: &'a [f64],
    loc: usize,
    outlier_count: usize,
}

pub fn locate(args: &DetectArgs, stride: Option<usize>, out: &Path) -> Result<()> {
    let reference = read_window_csv(&args.reference)?;
    let test = read_window_csv(&args.test)?;
    match stride {
        None => locate_single(args, &reference, &test, out),
        Some(stride) => locate_sliding(args, &reference, &test, stride, out),
    }
}

fn locate_single(
    args: &DetectArgs,
    reference: &MeasurementWindow,
    test: &MeasurementWindow,
    out: &Path,
) -> Result<()> {
    check_same_shape(reference, test)?;
    let sigma0 = covariance_of(reference, args.eta, args.seed)?;
    let sigma1 = covariance_of(test, args.eta, args.seed + 1)?;
    let (density, _) = null_asd(args, reference.ratio_c())?;
    let margin = match args.margin_eps {
        Some(m) => m,
        None => density.default_margin(),
    };
    let (report, eigenvectors) =
        detect_eigensystem(args.polynomial, &sigma0, &sigma1, &density, margin)?;
    let location = freespec_core::locate(&report, &eigenvectors)?;
    let payload = LocationJson {
        t_index: test.n_samples() - 1,
        indicator: &location.indicator,
        loc: location.loc,
        outlier_count: location.outlier_count,
    };
    let json =
        serde_json::to_string_pretty(&payload).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(out, json + "\n")?;
    println!(
        "loc: {}  outliers: {}  indicator peak: {:.6}",
        location.loc, location.outlier_count, location.indicator[location.loc]
    );
    println!("wrote {}", out.display());
    Ok(())
}

/// Slide a reference-width window across the test stream. The null density
/// is computed once and reused, so every position is judged against the same
/// support. Positions without outliers get the loc sentinel -1 and a zero
/// indicator row.
fn locate_sliding(
    args: &DetectArgs,
    reference: &MeasurementWindow,
    test: &MeasurementWindow,
    stride: usize,
    out: &Path,
) -> Result<()> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let n = reference.n_channels();
    let width = reference.n_samples();
    if test.n_channels() != n {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} channels, test stream has {}",
            n,
            test.n_channels()
        )));
    }
    if test.n_samples() < width {
        return Err(Error::InvalidArgument(format!(
            "test stream has {} samples, shorter than the {}-sample reference window",
            test.n_samples(),
            width
        )));
    }
    let sigma0 = covariance_of(reference, args.eta, args.seed)?;
    let (density, _) = null_asd(args, reference.ratio_c())?;
    let margin = match args.margin_eps {
        Some(m) => m,
        None => density.default_margin(),
    };

    let file = std::fs::File::create(out)?;
    let mut writer = BufWriter::new(file);
    write!(writer, "t_index,loc,outlier_count")?;
    for i in 0..n {
        write!(writer, ",L_{i}")?;
    }
    writeln!(writer)?;

    let mut offset = 0usize;
    let mut step = 0u64;
    let mut positions = 0usize;
    while offset + width <= test.n_samples() {
        let window = test.slice_samples(offset, offset + width)?;
        let sigma1 = covariance_of(&window, args.eta, args.seed + 1 + step)?;
        let (report, eigenvectors) =
            detect_eigensystem(args.polynomial, &sigma0, &sigma1, &density, margin)?;
        let (loc, count, indicator) = match freespec_core::locate(&report, &eigenvectors) {
            Ok(location) => (location.loc as i64, location.outlier_count, location.indicator),
            Err(Error::NoAnomaly) => (-1, 0, vec![0.0; n]),
            Err(e) => return Err(e),
        };
        write!(writer, "{},{loc},{count}", offset + width - 1)?;
        for value in &indicator {
            write!(writer, ",{value:.16e}")?;
        }
        writeln!(writer)?;
        positions += 1;
        offset += stride;
        step += 1;
    }
    writer.flush()?;
    println!("wrote {positions} window positions to {}", out.display());
    Ok(())
}

pub fn product(reference: &Path, test: &Path, delta: f64, out: &Path) -> Result<()> {
    let window0 = read_window_csv(reference)?;
    let window1 = read_window_csv(test)?;
    let spectrum = product_spectrum(&window0, &window1, delta)?;
    write_spectrum_csv(&spectrum, out)?;
    let sidecar = out.with_extension("json");
    let json =
        serde_json::to_string_pretty(&spectrum).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&sidecar, json + "\n")?;
    println!(
        "eigenvalues: {}  outliers: {}  bulk radius: {:.6}  delta: {}",
        spectrum.eigenvalues.len(),
        spectrum.outliers.len(),
        spectrum.bulk_radius,
        spectrum.delta
    );
    println!("wrote {} and {}", out.display(), sidecar.display());
    Ok(())
}
