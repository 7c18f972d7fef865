//! Fault location: an outlier-eigenvalue-weighted indicator over channels,
//! eigenvector delocalization diagnostics, and a top-singular-vector baseline.

use ndarray::Array2;
use serde::Serialize;

use crate::detect::{DetectionReport, PolynomialKind};
use crate::eigen;
use crate::error::{Error, Result};
use crate::randmat::MeasurementWindow;
use crate::stats;

const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Per-channel localization result.
#[derive(Debug, Clone, Serialize)]
pub struct LocationReport {
    /// L_i per channel, nonnegative and summing to 1 when outliers exist.
    pub indicator: Vec<f64>,
    /// argmax of the indicator (lowest index on ties), 0-based.
    pub loc: usize,
    pub outlier_count: usize,
    /// (eigenvalue, eigenvector) for each outlier, ascending by eigenvalue.
    pub eigenpairs_used: Vec<(f64, Vec<f64>)>,
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_orthonormal(eigenvectors: &Array2<f64>) -> Result<()> {
    let gram = eigenvectors.t().dot(eigenvectors);
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    if worst >= ORTHONORMALITY_TOL {
        return Err(Error::InvalidArgument(format!(
            "eigenvector columns not orthonormal: max |V'V - I| = {worst:.3e}"
        )));
    }
    Ok(())
}

/// Locates the channel responsible for the detected outliers.
///
/// The indicator is L_i = sum_k w_k v_ik^2 / sum_k w_k over the outlier
/// eigenpairs, with w_k = |lambda_k| for the difference polynomial and
/// w_k = lambda_k for the squared one. Columns of `eigenvectors` must be
/// orthonormal and paired with `report.eigenvalues` in order.
pub fn locate(report: &DetectionReport, eigenvectors: &Array2<f64>) -> Result<LocationReport> {
    if report.outlier_indices.is_empty() {
        return Err(Error::NoAnomaly);
    }
    let n = report.n;
    if eigenvectors.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "eigenvector matrix {:?}, expected ({n}, {n})",
            eigenvectors.dim()
        )));
    }
    check_orthonormal(eigenvectors)?;

    let lambdas: Vec<f64> = report.outlier_indices.iter().map(|&k| report.eigenvalues[k]).collect();
    let weights: Vec<f64> = match report.polynomial {
        PolynomialKind::P1 => lambdas.iter().map(|l| l.abs()).collect(),
        PolynomialKind::P2 => {
            let has_pos = lambdas.iter().any(|&l| l > 0.0);
            let has_neg = lambdas.iter().any(|&l| l < 0.0);
            if has_pos && has_neg {
                return Err(Error::WeightingUndefined);
            }
            lambdas.clone()
        }
    };
    let weight_sum: f64 = weights.iter().sum();
    if weight_sum.abs() < f64::MIN_POSITIVE {
        return Err(Error::WeightingUndefined);
    }

    let mut indicator = vec![0.0; n];
    let mut eigenpairs_used = Vec::with_capacity(weights.len());
    for (&k, &w) in report.outlier_indices.iter().zip(&weights) {
        let column = eigenvectors.column(k);
        for (i, &v) in column.iter().enumerate() {
            indicator[i] += w * v * v;
        }
        eigenpairs_used.push((report.eigenvalues[k], column.to_vec()));
    }
    for l in &mut indicator {
        *l /= weight_sum;
    }
    let loc = argmax_lowest(&indicator);
    Ok(LocationReport { indicator, loc, outlier_count: weights.len(), eigenpairs_used })
}

/// Pooled, rescaled eigenvector components with a normality score.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentDistribution {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Kolmogorov-Smirnov distance of the pooled components from N(0, 1).
    pub ks_statistic: f64,
    pub n_components: usize,
}

/// Pools the components of the selected eigenvector columns, rescaled so each
/// column has squared norm N, and scores them against the standard normal.
/// Delocalized (noise) eigenvectors score low; localized ones score high.
pub fn eigenvector_component_distribution(
    eigenvectors: &Array2<f64>,
    selection: &[usize],
    n_bins: Option<usize>,
) -> Result<ComponentDistribution> {
    if selection.is_empty() {
        return Err(Error::InvalidArgument("empty eigenvector selection".into()));
    }
    let n = eigenvectors.nrows();
    let mut pooled = Vec::with_capacity(n * selection.len());
    for &k in selection {
        if k >= eigenvectors.ncols() {
            return Err(Error::InvalidArgument(format!(
                "eigenvector index {k} out of range for {} columns",
                eigenvectors.ncols()
            )));
        }
        let column = eigenvectors.column(k);
        let norm_sq: f64 = column.iter().map(|v| v * v).sum();
        if norm_sq < f64::MIN_POSITIVE {
            return Err(Error::InvalidArgument(format!("eigenvector {k} has zero norm")));
        }
        let scale = (n as f64 / norm_sq).sqrt();
        pooled.extend(column.iter().map(|&v| v * scale));
    }
    let ks_statistic = stats::ks_vs_std_normal(&pooled);
    let bins = n_bins.unwrap_or_else(|| stats::fd_bin_count(&pooled));
    let lo = pooled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pooled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let bin_edges = stats::linspace_edges(lo, hi, bins);
    let counts = stats::histogram_counts(&pooled, &bin_edges)?;
    Ok(ComponentDistribution { bin_edges, counts, ks_statistic, n_components: pooled.len() })
}

/// Baseline locator: squared components of the leading left singular vector
/// of the raw difference data. Zero difference degenerates to a uniform
/// indicator with no outliers claimed.
pub fn lim_baseline(
    window0: &MeasurementWindow,
    window1: &MeasurementWindow,
) -> Result<LocationReport> {
    if window0.data.dim() != window1.data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            window0.data.dim(),
            window1.data.dim()
        )));
    }
    let diff = &window1.data - &window0.data;
    let n = diff.nrows();
    let max_abs = diff.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Ok(LocationReport {
            indicator: vec![1.0 / n as f64; n],
            loc: 0,
            outlier_count: 0,
            eigenpairs_used: vec![],
        });
    }
    let (u, sigma) = eigen::svd_left(&diff)?;
    let u1: Vec<f64> = u.column(0).to_vec();
    let indicator: Vec<f64> = u1.iter().map(|v| v * v).collect();
    let loc = argmax_lowest(&indicator);
    Ok(LocationReport {
        indicator,
        loc,
        outlier_count: 1,
        eigenpairs_used: vec![(sigma[0], u1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Verdict;
    use ndarray::{array, Array2};

    fn report_with(
        polynomial: PolynomialKind,
        eigenvalues: Vec<f64>,
        outlier_indices: Vec<usize>,
    ) -> DetectionReport {
        let outliers = outlier_indices.iter().map(|&k| eigenvalues[k]).collect();
        DetectionReport {
            polynomial,
            n: eigenvalues.len(),
            eigenvalues,
            outliers,
            support: vec![(0.0, 1.0)],
            margin_eps: 0.1,
            s: 1.0,
            verdict: Verdict::Anomaly,
            s_saturated: false,
            outlier_indices,
        }
    }

    #[test]
    fn single_outlier_on_basis_vector() {
        let report = report_with(PolynomialKind::P2, vec![0.1, 0.2, 0.3, 5.0], vec![3]);
        // eigenvector for the outlier is e_2 (third channel)
        let v: Array2<f64> = array![
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        let loc = locate(&report, &v).unwrap();
        assert_eq!(loc.loc, 2);
        assert_eq!(loc.indicator, vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(loc.outlier_count, 1);
        assert_eq!(loc.eigenpairs_used.len(), 1);
        assert_eq!(loc.eigenpairs_used[0].0, 5.0);
    }

    #[test]
    fn equal_outliers_tie_break_to_lower_channel() {
        let report = report_with(PolynomialKind::P2, vec![0.1, 0.1, 4.0, 4.0], vec![2, 3]);
        // outlier eigenvectors localized on channels 5 -> no, channels 2 and 1
        let v: Array2<f64> = array![
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let loc = locate(&report, &v).unwrap();
        assert!((loc.indicator[2] - 0.5).abs() < 1e-12);
        assert!((loc.indicator[3] - 0.5).abs() < 1e-12);
        assert_eq!(loc.loc, 2);
    }

    #[test]
    fn indicator_is_a_convex_combination() {
        let report = report_with(PolynomialKind::P2, vec![0.1, 0.2, 3.0, 9.0], vec![2, 3]);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let v: Array2<f64> = array![
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, inv_sqrt2, inv_sqrt2],
            [0.0, 0.0, inv_sqrt2, -inv_sqrt2],
        ];
        let loc = locate(&report, &v).unwrap();
        let total: f64 = loc.indicator.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(loc.indicator.iter().all(|&l| (0.0..=1.0).contains(&l)));
        // both outliers split evenly over channels 2 and 3
        assert!((loc.indicator[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_outliers_is_an_error() {
        let report = report_with(PolynomialKind::P2, vec![0.1, 0.2], vec![]);
        let v = Array2::eye(2);
        assert!(matches!(locate(&report, &v), Err(Error::NoAnomaly)));
    }

    #[test]
    fn non_orthonormal_matrix_is_rejected() {
        let report = report_with(PolynomialKind::P2, vec![0.1, 5.0], vec![1]);
        let v = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(locate(&report, &v), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mixed_sign_p2_outliers_are_rejected() {
        let report = report_with(PolynomialKind::P2, vec![-3.0, 0.1, 5.0], vec![0, 2]);
        let v = Array2::eye(3);
        assert!(matches!(locate(&report, &v), Err(Error::WeightingUndefined)));
    }

    #[test]
    fn p1_uses_absolute_weights() {
        let report = report_with(PolynomialKind::P1, vec![-3.0, 0.1, 3.0], vec![0, 2]);
        let v = Array2::eye(3);
        let loc = locate(&report, &v).unwrap();
        assert!((loc.indicator[0] - 0.5).abs() < 1e-12);
        assert!((loc.indicator[2] - 0.5).abs() < 1e-12);
        let total: f64 = loc.indicator.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn permutation_equivariance() {
        let n = 6;
        let report = report_with(
            PolynomialKind::P2,
            vec![0.1, 0.2, 0.3, 0.4, 2.0, 7.0],
            vec![4, 5],
        );
        let w = crate::randmat::sample_gaussian_matrix(n, n, 42).unwrap();
        let sym = 0.5 * (&w.data + &w.data.t());
        let (_, v) = crate::eigen::sym_eigen(&sym).unwrap();
        let base = locate(&report, &v).unwrap();

        let perm = [3usize, 0, 5, 1, 4, 2];
        let mut v_perm = Array2::zeros((n, n));
        for (new_row, &old_row) in perm.iter().enumerate() {
            for c in 0..n {
                v_perm[(new_row, c)] = v[(old_row, c)];
            }
        }
        let permuted = locate(&report, &v_perm).unwrap();
        for (new_row, &old_row) in perm.iter().enumerate() {
            assert!((permuted.indicator[new_row] - base.indicator[old_row]).abs() < 1e-12);
        }
    }

    #[test]
    fn loc_invariant_under_common_rescale_of_outliers() {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let v: Array2<f64> = array![
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, inv_sqrt2, inv_sqrt2],
            [0.0, 0.0, inv_sqrt2, -inv_sqrt2],
        ];
        let base = report_with(PolynomialKind::P2, vec![0.1, 0.2, 3.0, 9.0], vec![2, 3]);
        let scaled = report_with(PolynomialKind::P2, vec![0.1, 0.2, 21.0, 63.0], vec![2, 3]);
        let a = locate(&base, &v).unwrap();
        let b = locate(&scaled, &v).unwrap();
        assert_eq!(a.loc, b.loc);
        for (x, y) in a.indicator.iter().zip(&b.indicator) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_vector_components_are_maximally_non_normal() {
        let n = 118;
        let mut v = Array2::zeros((n, n));
        for i in 0..n {
            v[(i, i)] = 1.0;
        }
        let dist = eigenvector_component_distribution(&v, &[3], None).unwrap();
        assert_eq!(dist.n_components, n);
        assert!(dist.ks_statistic > 0.45, "ks = {}", dist.ks_statistic);
    }

    #[test]
    fn gaussian_vector_components_look_normal() {
        let n = 500;
        let w = crate::randmat::sample_gaussian_matrix(n, n, 9).unwrap();
        let sym = 0.5 * (&w.data + &w.data.t());
        let (_, v) = crate::eigen::sym_eigen(&sym).unwrap();
        let dist =
            eigenvector_component_distribution(&v, &(100..110).collect::<Vec<_>>(), None).unwrap();
        assert_eq!(dist.n_components, n * 10);
        assert!(dist.ks_statistic < 0.05, "ks = {}", dist.ks_statistic);
        assert_eq!(dist.counts.iter().sum::<u64>() as usize, dist.n_components);
    }

    #[test]
    fn empty_selection_is_rejected() {
        let v = Array2::eye(3);
        assert!(eigenvector_component_distribution(&v, &[], None).is_err());
    }

    #[test]
    fn baseline_matches_locate_on_rank_one_difference() {
        let n = 8;
        let t = 12;
        let base = crate::randmat::sample_gaussian_matrix(n, t, 5).unwrap();
        let mut bumped = base.data.clone();
        for val in bumped.row_mut(6).iter_mut() {
            *val += 4.0;
        }
        let w0 = MeasurementWindow::new(base.data.clone(), None).unwrap();
        let w1 = MeasurementWindow::new(bumped, None).unwrap();
        let report = lim_baseline(&w0, &w1).unwrap();
        assert_eq!(report.loc, 6);
        assert_eq!(report.outlier_count, 1);
        let total: f64 = report.indicator.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn baseline_zero_difference_is_uniform() {
        let w = crate::randmat::sample_gaussian_matrix(5, 9, 11).unwrap();
        let w0 = MeasurementWindow::new(w.data.clone(), None).unwrap();
        let w1 = MeasurementWindow::new(w.data.clone(), None).unwrap();
        let report = lim_baseline(&w0, &w1).unwrap();
        assert_eq!(report.loc, 0);
        assert_eq!(report.outlier_count, 0);
        assert!(report.indicator.iter().all(|&l| (l - 0.2).abs() < 1e-15));
        assert!(report.eigenpairs_used.is_empty());
    }
}
