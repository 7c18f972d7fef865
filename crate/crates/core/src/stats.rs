//! Small shared statistics helpers: histograms, normal CDF, Kolmogorov-Smirnov,
//! and the binned L1 distance used to compare empirical spectra against densities.

use crate::error::{Error, Result};

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + statrs::function::erf::erf(x / std::f64::consts::SQRT_2))
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against the standard normal.
pub fn ks_vs_std_normal(sample: &[f64]) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let cdf = std_normal_cdf(x);
        let hi = (i as f64 + 1.0) / n - cdf;
        let lo = cdf - i as f64 / n;
        sup = sup.max(hi.abs()).max(lo.abs());
    }
    sup
}

/// Uniform bin edges over `[lo, hi]`.
pub fn linspace_edges(lo: f64, hi: f64, n_bins: usize) -> Vec<f64> {
    let step = (hi - lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..=n_bins).map(|i| lo + step * i as f64).collect();
    // pin the final edge so the sample maximum is never rounded out
    edges[n_bins] = hi;
    edges
}

/// Freedman-Diaconis bin count for a sample (falls back to Sturges when the IQR collapses).
pub fn fd_bin_count(sample: &[f64]) -> usize {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n < 2 {
        return 1;
    }
    let q = |p: f64| -> f64 {
        let idx = p * (n - 1) as f64;
        let lo = idx.floor() as usize;
        let frac = idx - lo as f64;
        if lo + 1 < n {
            xs[lo] * (1.0 - frac) + xs[lo + 1] * frac
        } else {
            xs[lo]
        }
    };
    let iqr = q(0.75) - q(0.25);
    let span = xs[n - 1] - xs[0];
    if iqr <= 0.0 || span <= 0.0 {
        return (n as f64).log2().ceil() as usize + 1;
    }
    let width = 2.0 * iqr / (n as f64).cbrt();
    ((span / width).ceil() as usize).max(1)
}

/// Histogram counts of `sample` over the given ascending edges.
/// The final bin is closed on the right; values outside the edges are dropped.
pub fn histogram_counts(sample: &[f64], edges: &[f64]) -> Result<Vec<u64>> {
    if edges.len() < 2 {
        return Err(Error::InvalidArgument("need at least two bin edges".into()));
    }
    let n_bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[n_bins]);
    let mut counts = vec![0u64; n_bins];
    for &x in sample {
        if x < lo || x > hi {
            continue;
        }
        let mut idx = edges.partition_point(|&e| e <= x);
        if idx == 0 {
            idx = 1;
        }
        counts[(idx - 1).min(n_bins - 1)] += 1;
    }
    Ok(counts)
}

/// Cumulative integral of a sampled density by the trapezoid rule; starts at 0.
pub fn trapezoid_cdf(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(grid.len());
    cdf.push(0.0);
    for i in 1..grid.len() {
        let seg = 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
        cdf.push(cdf[i - 1] + seg);
    }
    cdf
}

/// Total trapezoid integral of a sampled function.
pub fn trapezoid_mass(grid: &[f64], values: &[f64]) -> f64 {
    let cdf = trapezoid_cdf(grid, values);
    cdf[cdf.len() - 1]
}

/// Linear interpolation of `(xs, ys)` at `x`, clamped to the endpoints.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    ys[j - 1] * (1.0 - t) + ys[j] * t
}

/// Binned L1 distance between a sample and a sampled density.
///
/// Bin masses of the density are taken from its interpolated CDF so that bins
/// not aligned with the density grid still receive their exact mass; the
/// empirical masses come from a histogram over the same edges.
pub fn l1_binned_distance(grid: &[f64], values: &[f64], sample: &[f64], n_bins: usize) -> Result<f64> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument("need at least two bins".into()));
    }
    let edges = linspace_edges(grid[0], grid[grid.len() - 1], n_bins);
    let counts = histogram_counts(sample, &edges)?;
    let total = sample.len() as f64;
    let cdf = trapezoid_cdf(grid, values);
    let mut dist = 0.0;
    for j in 0..n_bins {
        let theory = interp(grid, &cdf, edges[j + 1]) - interp(grid, &cdf, edges[j]);
        let empirical = counts[j] as f64 / total;
        dist += (empirical - theory).abs();
    }
    Ok(dist)
}
