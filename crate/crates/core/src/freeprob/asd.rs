//! Asymptotic spectral densities of the difference and squared-difference
//! polynomials of two free sample-covariance laws.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freeprob::cauchy::{cauchy_mp, reflected_cauchy_mp};
use crate::freeprob::density::{stieltjes_invert, SpectralDensity, SUPPORT_THRESHOLD_FRAC};
use crate::freeprob::linearize::{linearize_p2, Linearization};
use crate::freeprob::opval::{subordination_sum, CMat, CauchyTransform, ScalarTransform, WishartOperatorTransform};
use crate::freeprob::FixedPointConfig;
use crate::randmat::MpParams;

fn validate_grid(grid: &[f64], smoothing_offset: f64) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly ascending".into()));
    }
    if !(smoothing_offset > 0.0) {
        return Err(Error::InvalidArgument("smoothing_offset must be positive".into()));
    }
    Ok(())
}

/// Default smoothing offset: 1e-3 of the grid span.
pub fn default_smoothing(grid: &[f64]) -> f64 {
    1e-3 * (grid[grid.len() - 1] - grid[0])
}

/// Uniform grid of `points` values on [lo, hi].
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "grid needs points >= 2 and hi > lo, got {points} on [{lo}, {hi}]"
        )));
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

/// ASD of the difference polynomial S1 - S0 by scalar subordination of the
/// law of S1 with the reflected law of S0.
pub fn asd_p1(
    params0: &MpParams,
    params1: &MpParams,
    grid: &[f64],
    config: &FixedPointConfig,
    smoothing_offset: f64,
) -> Result<SpectralDensity> {
    validate_grid(grid, smoothing_offset)?;
    config.validate()?;
    let p0 = *params0;
    let p1 = *params1;
    let gx = ScalarTransform(move |z| cauchy_mp(&p1, z));
    let gy = ScalarTransform(move |z| reflected_cauchy_mp(&p0, z));
    let g_values: Result<Vec<Complex64>> = grid
        .par_iter()
        .map(|&x| {
            let point = CMat::<1> { entries: [[Complex64::new(x, smoothing_offset)]] };
            Ok(subordination_sum(&gx, &gy, &point, config)?.g_value.entries[0][0])
        })
        .collect();
    stieltjes_invert(&g_values?, grid, smoothing_offset, SUPPORT_THRESHOLD_FRAC)
}

/// Transform of the corner of the linearized squared-difference pencil at one
/// spectral parameter z, with the small corner offset extrapolated out by a
/// two-point Richardson step (eps and 10*eps).
pub fn p2_corner_transform(
    gx: &dyn CauchyTransform<3>,
    gy: &dyn CauchyTransform<3>,
    lin: &Linearization,
    z: Complex64,
    corner_eps: f64,
    config: &FixedPointConfig,
) -> Result<Complex64> {
    let fine = p2_corner_at_eps(gx, gy, lin, z, corner_eps, config)?;
    let coarse = p2_corner_at_eps(gx, gy, lin, z, 10.0 * corner_eps, config)?;
    Ok((fine * 10.0 - coarse) / 9.0)
}

fn p2_corner_at_eps(
    gx: &dyn CauchyTransform<3>,
    gy: &dyn CauchyTransform<3>,
    lin: &Linearization,
    z: Complex64,
    eps: f64,
    config: &FixedPointConfig,
) -> Result<Complex64> {
    let mut point = CMat::<3>::diag(&[z, Complex64::new(0.0, eps), Complex64::new(0.0, eps)]);
    for i in 0..3 {
        for j in 0..3 {
            point.entries[i][j] -= lin.c[i][j];
        }
    }
    let result = subordination_sum(gx, gy, &point, config)?;
    Ok(result.g_value.entries[0][0])
}

/// ASD of the squared-difference polynomial (S1 - S0)^2 via the 3x3
/// linearization: at each grid point the pencil's operator-valued transform
/// is evaluated by subordination and the (0,0) corner is inverted.
///
/// Points where the corner evaluation degenerates numerically (conditioning
/// or loss of the Herglotz property near support edges) are marked invalid
/// and interpolated; non-convergence of the fixed point is fatal.
pub fn asd_p2(
    params0: &MpParams,
    params1: &MpParams,
    grid: &[f64],
    config: &FixedPointConfig,
    corner_eps: f64,
    smoothing_offset: f64,
) -> Result<SpectralDensity> {
    validate_grid(grid, smoothing_offset)?;
    config.validate()?;
    if !(corner_eps > 0.0) {
        return Err(Error::InvalidArgument("corner_eps must be positive".into()));
    }
    let lin = linearize_p2();
    let gx = WishartOperatorTransform::<3>::new(lin.b0, params0);
    let gy = WishartOperatorTransform::<3>::new(lin.b1, params1);
    let g_values: Result<Vec<Complex64>> = grid
        .par_iter()
        .map(|&x| {
            let z = Complex64::new(x, smoothing_offset);
            match p2_corner_transform(&gx, &gy, &lin, z, corner_eps, config) {
                Ok(v) => Ok(v),
                Err(Error::IllConditioned { .. }) | Err(Error::DegenerateDensity(_)) => {
                    Ok(Complex64::new(f64::NAN, f64::NAN))
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    stieltjes_invert(&g_values?, grid, smoothing_offset, SUPPORT_THRESHOLD_FRAC)
}
