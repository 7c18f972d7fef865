//! Oracles for the squared-difference polynomial: its law is the
//! pushforward of the difference law under x -> x^2, so
//! rho2(x) = (rho1(sqrt x) + rho1(-sqrt x)) / (2 sqrt x), checked pointwise.
//! Sampled spectra and the algebraic corner identity close the loop.

use freespec_core::freeprob::asd::{p2_corner_transform, uniform_grid};
use freespec_core::freeprob::{asd_p1, asd_p2, linearize_p2, PointMassTransform};
use freespec_core::randmat::{preprocess, sample_covariance, sample_gaussian_matrix};
use freespec_core::stats::{interp, l1_binned_distance};
use freespec_core::{evaluate_polynomial, FixedPointConfig, MpParams, PolynomialKind};
use num_complex::Complex64;

#[test]
fn pushforward_of_difference_law() {
    let params = MpParams::new(1.0, 1.0).unwrap();
    let config = FixedPointConfig::default();
    let y = 1e-4;
    let grid1 = uniform_grid(-3.5, 3.5, 1401).unwrap();
    let density1 = asd_p1(&params, &params, &grid1, &config, y).unwrap();
    let grid2 = uniform_grid(0.05, 12.0, 240).unwrap();
    let density2 = asd_p2(&params, &params, &grid2, &config, 1e-6, y).unwrap();

    let mut max_diff = 0.0f64;
    let mut at = 0.0;
    for (i, &x) in grid2.iter().enumerate() {
        if !(1.0..=9.0).contains(&x) {
            continue;
        }
        let root = x.sqrt();
        let pushed = (interp(&grid1, &density1.values, root)
            + interp(&grid1, &density1.values, -root))
            / (2.0 * root);
        let diff = (density2.values[i] - pushed).abs();
        if diff > max_diff {
            max_diff = diff;
            at = x;
        }
    }
    assert!(max_diff < 5e-3, "max |rho2 - pushforward| = {max_diff} at x = {at}");
}

#[test]
fn sampled_square_matches_density() {
    let n = 1000;
    let w0 = sample_gaussian_matrix(n, n, 41).unwrap();
    let w1 = sample_gaussian_matrix(n, n, 42).unwrap();
    let s0 = sample_covariance(&preprocess(&w0, 1e-5, 43).unwrap());
    let s1 = sample_covariance(&preprocess(&w1, 1e-5, 44).unwrap());
    let square = evaluate_polynomial(PolynomialKind::P2, &s0, &s1).unwrap();
    let eigenvalues = freespec_core::eigen::sym_eigenvalues(&square).unwrap();

    let params = MpParams::new(1.0, 1.0).unwrap();
    let grid = uniform_grid(-0.88, 17.6, 512).unwrap();
    let density = asd_p2(
        &params,
        &params,
        &grid,
        &FixedPointConfig::default(),
        1e-6,
        1e-3 * 18.48,
    )
    .unwrap();
    let l1 =
        l1_binned_distance(&grid, &density.values, eigenvalues.as_slice().unwrap(), 50).unwrap();
    assert!(l1 < 0.07, "L1 distance {l1}");
}

#[test]
fn corner_identity_on_deterministic_inputs() {
    // factor spectra concentrated at x0 and x1 make the squared difference a
    // point mass at (x1 - x0)^2, whose transform is 1 / (z - (x1 - x0)^2)
    let lin = linearize_p2();
    let config = FixedPointConfig::default();
    for (x0, x1) in [(0.0, 1.0), (2.0, 3.5), (-1.0, 0.25)] {
        let target = (x1 - x0) * (x1 - x0);
        let mut a0 = [[0.0; 3]; 3];
        let mut a1 = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a0[i][j] = x0 * lin.b0[i][j];
                a1[i][j] = x1 * lin.b1[i][j];
            }
        }
        let gx = PointMassTransform::<3> { matrix: a0 };
        let gy = PointMassTransform::<3> { matrix: a1 };
        for &(re, im) in &[(3.0, 0.5), (0.0, 1.0), (-1.2, 0.25), (5.0, 0.05)] {
            let z = Complex64::new(re, im);
            let g = p2_corner_transform(&gx, &gy, &lin, z, 1e-6, &config).unwrap();
            let exact = (z - target).finv();
            assert!(
                (g - exact).norm() < 1e-6,
                "x0={x0} x1={x1} z={z}: corner {g} vs exact {exact}"
            );
        }
    }
}
