//! Asymptotic spectral distributions of self-adjoint polynomials of sample
//! covariance matrices, with anomaly detection and fault location built on top.
//!
//! The pipeline: sample or ingest an N x T measurement window, preprocess it
//! (noise regularization + per-channel standardization), form sample
//! covariances for a reference and a test window, evaluate the polynomial
//! P1 = S1 - S0 or P2 = (S1 - S0)^2, and compare its eigenvalues against the
//! polynomial's asymptotic spectral density computed by operator-valued free
//! probability. Eigenvalues beyond the theoretical support flag an anomaly;
//! their eigenvectors point at the responsible channel.

pub mod detect;
pub mod eigen;
pub mod error;
pub mod freeprob;
pub mod gridsim;
pub mod locate;
pub mod products;
pub mod randmat;
pub mod rng;
pub mod stats;

pub use detect::{
    detect, detect_eigensystem, evaluate_polynomial, ordering_check, report_to_json,
    DetectionReport, PolynomialKind, Verdict,
};
pub use error::{Error, Result};
pub use freeprob::{
    asd_p1, asd_p2, cauchy_mp, linearize_p2, stieltjes_invert, FixedPointConfig, Linearization,
    SpectralDensity,
};
pub use gridsim::{build_model, run_scenario, simulate, EventKind, GridModel, Scenario, ScenarioEvent};
pub use locate::{
    eigenvector_component_distribution, lim_baseline, locate, ComponentDistribution,
    LocationReport,
};
pub use products::{
    classify_outliers, product_spectrum, rank1_outlier_prediction, write_spectrum_csv,
    ProductSpectrum,
};
pub use randmat::{
    esd, mp_density, preprocess, sample_covariance, sample_gaussian_matrix, EsdHistogram,
    MeasurementWindow, MpParams, SampleCovariance,
};
