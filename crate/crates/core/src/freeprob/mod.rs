//! Free-probability engine: Cauchy transforms (scalar and operator-valued),
//! additive-convolution subordination, the 3x3 linearization of the squared
//! difference polynomial, and Stieltjes inversion back to a density.

pub mod asd;
pub mod cauchy;
pub mod density;
pub mod linearize;
pub mod opval;

pub use asd::{asd_p1, asd_p2};
pub use cauchy::{adaptive_mp_quadrature, cauchy_mp, cauchy_mp_quadrature, gauss_legendre, mp_quadrature, reflected_cauchy_mp};
pub use density::{stieltjes_invert, SpectralDensity, SUPPORT_THRESHOLD_FRAC};
pub use linearize::{linearize_p2, Linearization};
pub use opval::{
    h_transform, subordination_sum, CMat, CauchyTransform, PointMassTransform, ScalarTransform,
    SubordinationResult, WishartOperatorTransform,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Controls for the subordination fixed-point iteration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FixedPointConfig {
    /// Max-norm change between successive iterates that counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// 1.0 runs the plain iteration; below 1.0 mixes in the previous iterate.
    pub damping: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 10_000, damping: 1.0 }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument("damping must lie in (0, 1]".into()));
        }
        Ok(())
    }
}
