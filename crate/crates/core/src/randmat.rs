//! Measurement windows, preprocessing, sample covariance, empirical spectral
//! distributions, and the Marchenko-Pastur reference density.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::eigen;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

/// An N x T block of multichannel measurements, channel-major.
#[derive(Debug, Clone)]
pub struct MeasurementWindow {
    pub data: Array2<f64>,
    pub channel_labels: Option<Vec<String>>,
}

impl MeasurementWindow {
    /// Wraps a data matrix, enforcing N >= 2, T >= N, and finite entries.
    pub fn new(data: Array2<f64>, channel_labels: Option<Vec<String>>) -> Result<Self> {
        let (n, t) = data.dim();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 channels, got {n}")));
        }
        if t < n {
            return Err(Error::InvalidArgument(format!(
                "need at least as many samples as channels (aspect ratio in (0,1]), got {n}x{t}"
            )));
        }
        if let Some(labels) = &channel_labels {
            if labels.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {n} channels",
                    labels.len()
                )));
            }
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry in window".into()));
        }
        Ok(Self { data, channel_labels })
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Aspect ratio c = N/T.
    pub fn ratio_c(&self) -> f64 {
        self.n_channels() as f64 / self.n_samples() as f64
    }

    /// A window over a contiguous sample range `[start, end)` of the same channels.
    pub fn slice_samples(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_samples() {
            return Err(Error::InvalidArgument(format!(
                "sample range [{start}, {end}) out of bounds for T={}",
                self.n_samples()
            )));
        }
        Self::new(
            self.data.slice(ndarray::s![.., start..end]).to_owned(),
            self.channel_labels.clone(),
        )
    }
}

/// Symmetric sample covariance of a preprocessed window.
#[derive(Debug, Clone)]
pub struct SampleCovariance {
    pub matrix: Array2<f64>,
    pub n_samples_used: usize,
}

/// Pooled eigenvalue histogram.
#[derive(Debug, Clone, Serialize)]
pub struct EsdHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_eigenvalues: usize,
}

impl EsdHistogram {
    /// Height of each bin when the histogram is normalized to unit mass.
    pub fn normalized_heights(&self) -> Vec<f64> {
        let total = self.total_eigenvalues as f64;
        self.counts
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
            .collect()
    }
}

/// Parameters of a Marchenko-Pastur law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpParams {
    pub ratio_c: f64,
    pub variance: f64,
}

impl MpParams {
    pub fn new(ratio_c: f64, variance: f64) -> Result<Self> {
        if !(ratio_c > 0.0 && ratio_c <= 1.0) {
            return Err(Error::InvalidArgument(format!("ratio_c must be in (0,1], got {ratio_c}")));
        }
        if variance <= 0.0 {
            return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
        }
        Ok(Self { ratio_c, variance })
    }

    /// Support endpoints `a <= b` of the law.
    pub fn support(&self) -> (f64, f64) {
        let sc = self.ratio_c.sqrt();
        let a = self.variance * (1.0 - sc).powi(2);
        let b = self.variance * (1.0 + sc).powi(2);
        (a, b)
    }
}

/// Probability density of the Marchenko-Pastur law at `x` (zero outside the support).
pub fn mp_density(params: &MpParams, x: f64) -> f64 {
    let (a, b) = params.support();
    if x <= a || x >= b || x <= 0.0 {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * std::f64::consts::PI * x * params.variance * params.ratio_c)
}

/// An N x T matrix of i.i.d. standard normal entries, deterministic per seed.
pub fn sample_gaussian_matrix(n: usize, t: usize, seed: u64) -> Result<MeasurementWindow> {
    let mut rng = rng::stream(seed, rng::STREAM_GAUSSIAN_MATRIX);
    let data = Array2::from_shape_simple_fn((n, t), || rng.sample(StandardNormal));
    MeasurementWindow::new(data, None)
}

/// Adds white noise of scale `eta` and standardizes every channel to mean 0, variance 1.
pub fn preprocess(window: &MeasurementWindow, eta: f64, seed: u64) -> Result<MeasurementWindow> {
    let mut rng = rng::stream(seed, rng::STREAM_PREPROCESS);
    preprocess_with_rng(window, eta, &mut rng)
}

/// `preprocess` with a caller-supplied generator; used by repetition loops that
/// need schedule-independent substreams.
pub fn preprocess_with_rng<R: Rng>(
    window: &MeasurementWindow,
    eta: f64,
    rng: &mut R,
) -> Result<MeasurementWindow> {
    if eta < 0.0 {
        return Err(Error::InvalidArgument("eta must be nonnegative".into()));
    }
    let mut data = window.data.clone();
    if eta > 0.0 {
        for x in data.iter_mut() {
            *x += eta * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let t = data.ncols() as f64;
    for (i, mut row) in data.axis_iter_mut(Axis(0)).enumerate() {
        let mean = row.sum() / t;
        row.mapv_inplace(|x| x - mean);
        let var = row.iter().map(|x| x * x).sum::<f64>() / t;
        if var <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateRow { row: i });
        }
        let inv_sd = 1.0 / var.sqrt();
        row.mapv_inplace(|x| x * inv_sd);
    }
    MeasurementWindow::new(data, window.channel_labels.clone())
}

/// Sample covariance (1/T) X X^T, symmetrized exactly.
pub fn sample_covariance(window: &MeasurementWindow) -> SampleCovariance {
    let t = window.n_samples();
    let x = &window.data;
    let mut sigma = x.dot(&x.t());
    sigma.mapv_inplace(|v| v / t as f64);
    let sym = 0.5 * (&sigma + &sigma.t());
    SampleCovariance {
        matrix: sym,
        n_samples_used: t,
    }
}

/// Pooled empirical spectral distribution over `repetitions` re-noised copies
/// of the window. Each repetition draws from its own substream of `seed`, so
/// the pool does not depend on execution order.
pub fn esd(
    window: &MeasurementWindow,
    repetitions: usize,
    eta: f64,
    n_bins: Option<usize>,
    seed: u64,
) -> Result<EsdHistogram> {
    if repetitions < 1 {
        return Err(Error::InvalidArgument("repetitions must be >= 1".into()));
    }
    if let Some(b) = n_bins {
        if b < 2 {
            return Err(Error::InvalidArgument("n_bins must be >= 2".into()));
        }
    }
    let reps: Vec<usize> = (0..repetitions).collect();
    let pooled: Result<Vec<Vec<f64>>> = reps
        .par_iter()
        .map(|&i| {
            let mut rng = rng::stream(seed, rng::STREAM_ESD_BASE + i as u64);
            let pre = preprocess_with_rng(window, eta, &mut rng)?;
            let cov = sample_covariance(&pre);
            let vals = eigen::sym_eigenvalues(&cov.matrix)?;
            Ok(vals.to_vec())
        })
        .collect();
    let eigenvalues: Vec<f64> = pooled?.into_iter().flatten().collect();

    let bins = n_bins.unwrap_or_else(|| stats::fd_bin_count(&eigenvalues));
    let lo = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let edges = stats::linspace_edges(lo, lo + span, bins);
    let counts = stats::histogram_counts(&eigenvalues, &edges)?;
    Ok(EsdHistogram {
        bin_edges: edges,
        counts,
        total_eigenvalues: eigenvalues.len(),
    })
}

/// Reads a window from CSV: N rows of T comma-separated values, with an
/// optional leading header row of channel labels (detected by a non-numeric
/// first field).
pub fn read_window_csv(path: &Path) -> Result<MeasurementWindow> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut labels: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if lineno == 0 && fields[0].trim().parse::<f64>().is_err() {
            labels = Some(fields.iter().map(|s| s.trim().to_string()).collect());
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse(format!(
                    "{}:{}: ragged row ({} fields, expected {})",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    let n = rows.len();
    let t = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let data = Array2::from_shape_vec((n, t), flat)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    // Transposed label rows are not supported; labels must match channel count.
    if let Some(l) = &labels {
        if l.len() != t {
            return Err(Error::Parse(format!(
                "{}: header has {} fields but rows have {t}",
                path.display(),
                l.len()
            )));
        }
    }
    MeasurementWindow::new(data, None)
}

/// Writes a window as CSV with 17-significant-digit values.
pub fn write_window_csv(window: &MeasurementWindow, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for row in window.data.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a histogram as CSV: bin_left, bin_right, count, normalized_height.
pub fn write_histogram_csv(hist: &EsdHistogram, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "bin_left,bin_right,count,normalized_height")?;
    let heights = hist.normalized_heights();
    for (i, win) in hist.bin_edges.windows(2).enumerate() {
        writeln!(
            w,
            "{:.16e},{:.16e},{},{:.16e}",
            win[0], win[1], hist.counts[i], heights[i]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Eigenvalues (ascending) of the covariance of one preprocessed copy of a window.
pub fn covariance_eigenvalues(window: &MeasurementWindow, eta: f64, seed: u64) -> Result<Array1<f64>> {
    let pre = preprocess(window, eta, seed)?;
    let cov = sample_covariance(&pre);
    eigen::sym_eigenvalues(&cov.matrix)
}
