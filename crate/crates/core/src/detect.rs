//! Hypothesis testing: evaluate a covariance polynomial, compare its spectrum
//! against the theoretical density, classify outliers, and score the anomaly.

use ndarray::Array2;
use serde::Serialize;

use crate::eigen;
use crate::error::{Error, Result};
use crate::freeprob::SpectralDensity;
use crate::randmat::SampleCovariance;

/// The two wired covariance polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PolynomialKind {
    /// S1 - S0
    #[serde(rename = "p1")]
    P1,
    /// (S1 - S0)^2
    #[serde(rename = "p2")]
    P2,
}

impl std::str::FromStr for PolynomialKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Self::P1),
            "p2" => Ok(Self::P2),
            other => Err(Error::Parse(format!("unknown polynomial '{other}', expected p1 or p2"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "H0_retained")]
    H0Retained,
    #[serde(rename = "anomaly")]
    Anomaly,
}

/// Outcome of one detection run. Serializes with a stable field order.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub polynomial: PolynomialKind,
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub outliers: Vec<f64>,
    pub support: Vec<(f64, f64)>,
    pub margin_eps: f64,
    /// |sum of outliers| / |sum of bulk|; 0 with no outliers. When the bulk
    /// sum collapses below 1e-9 the value saturates to +infinity (which JSON
    /// renders as null) and `s_saturated` is set.
    pub s: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub s_saturated: bool,
    /// Positions of the outliers within `eigenvalues`.
    #[serde(skip)]
    pub outlier_indices: Vec<usize>,
}

/// The polynomial matrix itself: P1 = S1 - S0 or P2 = (S1 - S0)^2, exactly
/// symmetrized.
pub fn evaluate_polynomial(
    kind: PolynomialKind,
    sigma0: &SampleCovariance,
    sigma1: &SampleCovariance,
) -> Result<Array2<f64>> {
    if sigma0.matrix.dim() != sigma1.matrix.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            sigma0.matrix.dim(),
            sigma1.matrix.dim()
        )));
    }
    let diff = &sigma1.matrix - &sigma0.matrix;
    let diff = 0.5 * (&diff + &diff.t());
    match kind {
        PolynomialKind::P1 => Ok(diff),
        PolynomialKind::P2 => {
            let sq = diff.dot(&diff);
            Ok(0.5 * (&sq + &sq.t()))
        }
    }
}

fn distance_to_intervals(x: f64, intervals: &[(f64, f64)]) -> f64 {
    intervals
        .iter()
        .map(|&(lo, hi)| (lo - x).max(x - hi).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

fn build_report(
    kind: PolynomialKind,
    eigenvalues: Vec<f64>,
    asd: &SpectralDensity,
    margin_eps: f64,
) -> Result<DetectionReport> {
    if asd.support_intervals.is_empty() {
        return Err(Error::DegenerateDensity(
            "spectral density has empty support; cannot classify".into(),
        ));
    }
    if !(margin_eps > 0.0) {
        return Err(Error::InvalidArgument("margin_eps must be positive".into()));
    }
    let mut outliers = Vec::new();
    let mut outlier_indices = Vec::new();
    for (i, &ev) in eigenvalues.iter().enumerate() {
        if distance_to_intervals(ev, &asd.support_intervals) > margin_eps {
            outliers.push(ev);
            outlier_indices.push(i);
        }
    }
    let (s, s_saturated) = if outliers.is_empty() {
        (0.0, false)
    } else {
        let out_sum: f64 = outliers.iter().sum();
        let bulk_sum: f64 = eigenvalues.iter().sum::<f64>() - out_sum;
        if bulk_sum.abs() < 1e-9 {
            (f64::INFINITY, true)
        } else {
            ((out_sum / bulk_sum).abs(), false)
        }
    };
    let verdict = if outliers.is_empty() { Verdict::H0Retained } else { Verdict::Anomaly };
    Ok(DetectionReport {
        polynomial: kind,
        n: eigenvalues.len(),
        eigenvalues,
        outliers,
        support: asd.support_intervals.clone(),
        margin_eps,
        s,
        verdict,
        s_saturated,
        outlier_indices,
    })
}

/// Detection from the polynomial's eigenvalues alone.
pub fn detect(
    kind: PolynomialKind,
    sigma0: &SampleCovariance,
    sigma1: &SampleCovariance,
    asd: &SpectralDensity,
    margin_eps: f64,
) -> Result<DetectionReport> {
    let poly = evaluate_polynomial(kind, sigma0, sigma1)?;
    let eigenvalues = eigen::sym_eigenvalues(&poly)?;
    build_report(kind, eigenvalues.to_vec(), asd, margin_eps)
}

/// Detection that also returns the orthonormal eigenvector matrix (columns
/// paired with the ascending eigenvalues), for location.
pub fn detect_eigensystem(
    kind: PolynomialKind,
    sigma0: &SampleCovariance,
    sigma1: &SampleCovariance,
    asd: &SpectralDensity,
    margin_eps: f64,
) -> Result<(DetectionReport, Array2<f64>)> {
    let poly = evaluate_polynomial(kind, sigma0, sigma1)?;
    let (eigenvalues, eigenvectors) = eigen::sym_eigen(&poly)?;
    let report = build_report(kind, eigenvalues.to_vec(), asd, margin_eps)?;
    Ok((report, eigenvectors))
}

/// Indices of `reports` in ascending order of s, stable on ties.
pub fn ordering_check(reports: &[DetectionReport]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| {
        reports[a]
            .s
            .partial_cmp(&reports[b].s)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Serializes a report as pretty JSON.
pub fn report_to_json(report: &DetectionReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randmat::{preprocess, sample_covariance, sample_gaussian_matrix};
    use ndarray::array;

    fn cov(m: Array2<f64>) -> SampleCovariance {
        SampleCovariance { n_samples_used: m.nrows(), matrix: m }
    }

    fn dummy_density(intervals: Vec<(f64, f64)>) -> SpectralDensity {
        SpectralDensity {
            grid: vec![-1.0, 0.0, 1.0],
            values: vec![0.0, 1.0, 0.0],
            support_intervals: intervals,
            smoothing_offset: 1e-3,
            clipped_mass: 0.0,
            invalid_points: vec![],
        }
    }

    fn dummy_report(s: f64) -> DetectionReport {
        DetectionReport {
            polynomial: PolynomialKind::P2,
            n: 0,
            eigenvalues: vec![],
            outliers: vec![],
            support: vec![],
            margin_eps: 0.1,
            s,
            verdict: Verdict::H0Retained,
            s_saturated: false,
            outlier_indices: vec![],
        }
    }

    #[test]
    fn identical_covariances_give_zero_polynomial() {
        let w = sample_gaussian_matrix(8, 16, 1).unwrap();
        let pre = preprocess(&w, 1e-5, 2).unwrap();
        let sigma = sample_covariance(&pre);
        for kind in [PolynomialKind::P1, PolynomialKind::P2] {
            let p = evaluate_polynomial(kind, &sigma, &sigma).unwrap();
            assert!(p.iter().all(|&v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn squared_polynomial_arithmetic() {
        let s0 = cov(Array2::zeros((2, 2)));
        let s1 = cov(array![[1.0, 0.0], [0.0, 2.0]]);
        let p2 = evaluate_polynomial(PolynomialKind::P2, &s0, &s1).unwrap();
        assert_eq!(p2, array![[1.0, 0.0], [0.0, 4.0]]);
    }

    #[test]
    fn p2_eigenvalues_are_squared_p1_eigenvalues() {
        let w0 = sample_gaussian_matrix(12, 24, 3).unwrap();
        let w1 = sample_gaussian_matrix(12, 24, 4).unwrap();
        let s0 = sample_covariance(&preprocess(&w0, 1e-5, 5).unwrap());
        let s1 = sample_covariance(&preprocess(&w1, 1e-5, 6).unwrap());
        let p1 = evaluate_polynomial(PolynomialKind::P1, &s0, &s1).unwrap();
        let p2 = evaluate_polynomial(PolynomialKind::P2, &s0, &s1).unwrap();
        let mut sq: Vec<f64> = crate::eigen::sym_eigenvalues(&p1)
            .unwrap()
            .iter()
            .map(|v| v * v)
            .collect();
        sq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ev2 = crate::eigen::sym_eigenvalues(&p2).unwrap();
        for (a, b) in sq.iter().zip(ev2.iter()) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s0 = cov(Array2::zeros((2, 2)));
        let s1 = cov(Array2::zeros((3, 3)));
        assert!(matches!(
            evaluate_polynomial(PolynomialKind::P1, &s0, &s1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn s_statistic_arithmetic() {
        // outlier {2.0} against bulk summing to 10.0
        let asd = dummy_density(vec![(-0.5, 0.5)]);
        let eigenvalues = vec![0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.3, 0.3,
                               0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.2, 0.2, 0.2, 0.2,
                               0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1,
                               0.1, 0.1, 0.1, 0.1, 2.0];
        let mut sorted = eigenvalues;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let report = build_report(PolynomialKind::P2, sorted, &asd, 0.1).unwrap();
        assert_eq!(report.outliers, vec![2.0]);
        assert!((report.s - 0.2).abs() < 1e-12);
        assert_eq!(report.verdict, Verdict::Anomaly);
    }

    #[test]
    fn no_outliers_means_h0_and_zero_s() {
        let asd = dummy_density(vec![(-0.5, 3.0)]);
        let report =
            build_report(PolynomialKind::P2, vec![0.1, 0.5, 2.9], &asd, 0.05).unwrap();
        assert_eq!(report.verdict, Verdict::H0Retained);
        assert_eq!(report.s, 0.0);
        assert!(report.outliers.is_empty());
    }

    #[test]
    fn boundary_eigenvalue_counts_as_bulk() {
        let asd = dummy_density(vec![(0.0, 1.0)]);
        // distance of 1.1 from support is exactly the margin: bulk by the
        // strict-inequality rule
        let report = build_report(PolynomialKind::P2, vec![0.5, 2.1], &asd, 1.1).unwrap();
        assert!(report.outliers.is_empty());
        let report = build_report(PolynomialKind::P2, vec![0.5, 2.1], &asd, 1.0999).unwrap();
        assert_eq!(report.outliers, vec![2.1]);
    }

    #[test]
    fn saturated_denominator_sets_the_flag() {
        let asd = dummy_density(vec![(-0.5, 0.5)]);
        let report =
            build_report(PolynomialKind::P1, vec![-1.0, 1.0, 3.0], &asd, 0.1).unwrap();
        // bulk is empty: denominator 0
        assert!(report.s.is_infinite());
        assert!(report.s_saturated);
    }

    #[test]
    fn empty_support_is_rejected() {
        let asd = dummy_density(vec![]);
        assert!(build_report(PolynomialKind::P2, vec![0.1], &asd, 0.1).is_err());
    }

    #[test]
    fn ordering_matches_published_examples() {
        // five scenarios whose s values must rank as C5 < C2 < C3 < C1 < C4
        let table_a = [0.1096, 0.0357, 0.0609, 0.4219, 0.000];
        let table_b = [0.9027, 0.1152, 0.2783, 5.2332, 0.000];
        for s_values in [table_a, table_b] {
            let reports: Vec<DetectionReport> =
                s_values.iter().map(|&s| dummy_report(s)).collect();
            assert_eq!(ordering_check(&reports), vec![4, 1, 2, 0, 3]);
        }
    }

    #[test]
    fn ordering_ties_are_stable() {
        let reports: Vec<DetectionReport> = [0.5, 0.2, 0.5, 0.2]
            .iter()
            .map(|&s| dummy_report(s))
            .collect();
        assert_eq!(ordering_check(&reports), vec![1, 3, 0, 2]);
    }

    #[test]
    fn scale_consistency_of_p1_classification() {
        let w0 = sample_gaussian_matrix(16, 32, 7).unwrap();
        let w1 = sample_gaussian_matrix(16, 32, 8).unwrap();
        let s0 = sample_covariance(&preprocess(&w0, 1e-5, 9).unwrap());
        let s1 = sample_covariance(&preprocess(&w1, 1e-5, 10).unwrap());
        let scale = 2.5;
        let s0s = cov(&s0.matrix * scale);
        let s1s = cov(&s1.matrix * scale);
        let base = evaluate_polynomial(PolynomialKind::P1, &s0, &s1).unwrap();
        let scaled = evaluate_polynomial(PolynomialKind::P1, &s0s, &s1s).unwrap();
        let ev_base = crate::eigen::sym_eigenvalues(&base).unwrap();
        let ev_scaled = crate::eigen::sym_eigenvalues(&scaled).unwrap();
        for (a, b) in ev_base.iter().zip(ev_scaled.iter()) {
            assert!((a * scale - b).abs() < 1e-10);
        }
    }

    #[test]
    fn report_json_has_stable_field_order() {
        let asd = dummy_density(vec![(0.0, 1.0)]);
        let report = build_report(PolynomialKind::P2, vec![0.5, 5.0], &asd, 0.1).unwrap();
        let json = report_to_json(&report).unwrap();
        let keys = ["polynomial", "n", "eigenvalues", "outliers", "support", "margin_eps", "s", "verdict"];
        let mut last = 0;
        for key in keys {
            let pos = json.find(&format!("\"{key}\"")).unwrap_or_else(|| panic!("missing {key}"));
            assert!(pos > last, "field {key} out of order");
            last = pos;
        }
        assert!(json.contains("\"anomaly\""));
        assert!(json.contains("\"p2\""));
    }
}
