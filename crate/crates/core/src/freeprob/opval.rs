//! Operator-valued Cauchy transforms over k x k complex matrices and the
//! additive-convolution subordination fixed point.
//!
//! Matrix upper half-plane convention: a point b is admissible when
//! Im b := (b - b^H)/(2i) is positive definite; transform values then satisfy
//! Im G(b) negative definite (checked on every iterate).

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::freeprob::cauchy::{adaptive_mp_quadrature, mp_quadrature};
use crate::freeprob::FixedPointConfig;
use crate::randmat::MpParams;

/// Conditioning cap for every matrix inverse taken by the engine.
pub const CONDITION_CAP: f64 = 1e14;

/// Slack allowed on the sign-definiteness checks, absorbing roundoff.
const HERGLOTZ_SLACK: f64 = 1e-9;

/// Dense k x k complex matrix with k fixed at compile time; the element of
/// the operator algebra that subordination iterates over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat<const K: usize> {
    pub entries: [[Complex64; K]; K],
}

impl<const K: usize> CMat<K> {
    pub fn zero() -> Self {
        Self { entries: [[Complex64::new(0.0, 0.0); K]; K] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..K {
            m.entries[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(real: &[[f64; K]; K]) -> Self {
        let mut m = Self::zero();
        for i in 0..K {
            for j in 0..K {
                m.entries[i][j] = Complex64::new(real[i][j], 0.0);
            }
        }
        m
    }

    pub fn diag(values: &[Complex64; K]) -> Self {
        let mut m = Self::zero();
        for i in 0..K {
            m.entries[i][i] = values[i];
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for row in m.entries.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..K {
            for j in 0..K {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    /// Hermitian part of the skew decomposition: (A - A^H) / (2i).
    pub fn imag_part(&self) -> Self {
        let mut m = Self::zero();
        let two_i = Complex64::new(0.0, 2.0);
        for i in 0..K {
            for j in 0..K {
                m.entries[i][j] = (self.entries[i][j] - self.entries[j][i].conj()) / two_i;
            }
        }
        m
    }

    pub fn max_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    fn inf_norm(&self) -> f64 {
        (0..K)
            .map(|i| (0..K).map(|j| self.entries[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting, together
    /// with the infinity-norm condition estimate ||A|| ||A^-1||. Fails when
    /// the estimate exceeds `CONDITION_CAP` or a pivot vanishes.
    pub fn inverse(&self) -> Result<(Self, f64)> {
        let mut a = self.entries;
        let mut inv = Self::identity().entries;
        for col in 0..K {
            let mut pivot_row = col;
            let mut pivot_mag = a[col][col].norm();
            for row in (col + 1)..K {
                let mag = a[row][col].norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = row;
                }
            }
            if pivot_mag == 0.0 {
                return Err(Error::IllConditioned { condition: f64::INFINITY });
            }
            a.swap(col, pivot_row);
            inv.swap(col, pivot_row);
            let pivot = a[col][col];
            for j in 0..K {
                a[col][j] /= pivot;
                inv[col][j] /= pivot;
            }
            for row in 0..K {
                if row == col {
                    continue;
                }
                let factor = a[row][col];
                if factor.norm() == 0.0 {
                    continue;
                }
                for j in 0..K {
                    let ac = a[col][j];
                    let ic = inv[col][j];
                    a[row][j] -= factor * ac;
                    inv[row][j] -= factor * ic;
                }
            }
        }
        let inv = Self { entries: inv };
        let condition = self.inf_norm() * inv.inf_norm();
        if !condition.is_finite() || condition > CONDITION_CAP {
            return Err(Error::IllConditioned { condition });
        }
        Ok((inv, condition))
    }

    /// Eigenvalue range (min, max) of a Hermitian matrix, closed form up to
    /// k = 3 (the only dimensions this engine instantiates).
    pub fn hermitian_eig_bounds(&self) -> Result<(f64, f64)> {
        let e = |i: usize, j: usize| self.entries[i][j];
        match K {
            1 => {
                let v = e(0, 0).re;
                Ok((v, v))
            }
            2 => {
                let mean = (e(0, 0).re + e(1, 1).re) / 2.0;
                let disc = (((e(0, 0).re - e(1, 1).re) / 2.0).powi(2) + e(0, 1).norm_sqr()).sqrt();
                Ok((mean - disc, mean + disc))
            }
            3 => {
                let q = (e(0, 0).re + e(1, 1).re + e(2, 2).re) / 3.0;
                let off = e(0, 1).norm_sqr() + e(0, 2).norm_sqr() + e(1, 2).norm_sqr();
                let p2 = (e(0, 0).re - q).powi(2)
                    + (e(1, 1).re - q).powi(2)
                    + (e(2, 2).re - q).powi(2)
                    + 2.0 * off;
                if p2 <= 0.0 {
                    return Ok((q, q));
                }
                let p = (p2 / 6.0).sqrt();
                let mut b = *self;
                for i in 0..3 {
                    b.entries[i][i] -= q;
                }
                let b = b.scale(1.0 / p);
                let be = |i: usize, j: usize| b.entries[i][j];
                let det = be(0, 0) * (be(1, 1) * be(2, 2) - be(1, 2) * be(2, 1))
                    - be(0, 1) * (be(1, 0) * be(2, 2) - be(1, 2) * be(2, 0))
                    + be(0, 2) * (be(1, 0) * be(2, 1) - be(1, 1) * be(2, 0));
                let r = (det / 2.0).re.clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let max = q + 2.0 * p * phi.cos();
                let min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
                Ok((min, max))
            }
            _ => Err(Error::InvalidArgument(format!(
                "eigenvalue bounds implemented only for dim <= 3, got {K}"
            ))),
        }
    }

    /// Smallest eigenvalue of the imaginary part; positive means the point
    /// lies in the matrix upper half-plane.
    pub fn min_imag_eig(&self) -> Result<f64> {
        Ok(self.imag_part().hermitian_eig_bounds()?.0)
    }
}

impl<const K: usize> Add for CMat<K> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..K {
            for j in 0..K {
                self.entries[i][j] += rhs.entries[i][j];
            }
        }
        self
    }
}

impl<const K: usize> Sub for CMat<K> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..K {
            for j in 0..K {
                self.entries[i][j] -= rhs.entries[i][j];
            }
        }
        self
    }
}

impl<const K: usize> Neg for CMat<K> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const K: usize> Mul for CMat<K> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..K {
            for l in 0..K {
                let left = self.entries[i][l];
                if left.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..K {
                    out.entries[i][j] += left * rhs.entries[l][j];
                }
            }
        }
        out
    }
}

/// An operator-valued Cauchy-transform evaluator for one free summand.
pub trait CauchyTransform<const K: usize>: Sync {
    fn evaluate(&self, point: &CMat<K>) -> Result<CMat<K>>;
}

/// Transform of coeff ⊗ (an MP-distributed matrix):
/// G(b) = ∫ (b - t·coeff)^-1 dρ_MP(t), evaluated on a fixed quadrature rule.
pub struct WishartOperatorTransform<const K: usize> {
    weights: Vec<f64>,
    node_coeffs: Vec<[[f64; K]; K]>,
}

impl<const K: usize> WishartOperatorTransform<K> {
    /// Builds the evaluator on the adaptively refined quadrature rule.
    pub fn new(coeff: [[f64; K]; K], params: &MpParams) -> Self {
        Self::from_rule(coeff, adaptive_mp_quadrature(params))
    }

    pub fn with_node_count(coeff: [[f64; K]; K], params: &MpParams, n: usize) -> Self {
        Self::from_rule(coeff, mp_quadrature(params, n))
    }

    fn from_rule(coeff: [[f64; K]; K], rule: Vec<(f64, f64)>) -> Self {
        let mut weights = Vec::with_capacity(rule.len());
        let mut node_coeffs = Vec::with_capacity(rule.len());
        for (t, w) in rule {
            let mut tc = [[0.0; K]; K];
            for i in 0..K {
                for j in 0..K {
                    tc[i][j] = t * coeff[i][j];
                }
            }
            weights.push(w);
            node_coeffs.push(tc);
        }
        Self { weights, node_coeffs }
    }
}

impl<const K: usize> CauchyTransform<K> for WishartOperatorTransform<K> {
    fn evaluate(&self, point: &CMat<K>) -> Result<CMat<K>> {
        let mut acc = CMat::<K>::zero();
        for (w, tc) in self.weights.iter().zip(&self.node_coeffs) {
            let mut shifted = *point;
            for i in 0..K {
                for j in 0..K {
                    shifted.entries[i][j] -= tc[i][j];
                }
            }
            let (inv, _) = shifted.inverse()?;
            for i in 0..K {
                for j in 0..K {
                    acc.entries[i][j] += inv.entries[i][j] * *w;
                }
            }
        }
        Ok(acc)
    }
}

/// Transform of a deterministic summand A: G(b) = (b - A)^-1.
pub struct PointMassTransform<const K: usize> {
    pub matrix: [[f64; K]; K],
}

impl<const K: usize> CauchyTransform<K> for PointMassTransform<K> {
    fn evaluate(&self, point: &CMat<K>) -> Result<CMat<K>> {
        let shifted = *point - CMat::from_real(&self.matrix);
        Ok(shifted.inverse()?.0)
    }
}

/// Wraps a scalar transform as the k = 1 case of the operator machinery.
pub struct ScalarTransform<F: Fn(Complex64) -> Result<Complex64> + Sync>(pub F);

impl<F: Fn(Complex64) -> Result<Complex64> + Sync> CauchyTransform<1> for ScalarTransform<F> {
    fn evaluate(&self, point: &CMat<1>) -> Result<CMat<1>> {
        Ok(CMat { entries: [[(self.0)(point.entries[0][0])?]] })
    }
}

/// h(b) = G(b)^-1 - b, the auxiliary transform driving subordination.
pub fn h_transform<const K: usize>(g_value: &CMat<K>, point: &CMat<K>) -> Result<CMat<K>> {
    let (inv, _) = g_value.inverse()?;
    Ok(inv - *point)
}

fn check_herglotz<const K: usize>(g: &CMat<K>) -> Result<()> {
    let (_, max_im) = g.imag_part().hermitian_eig_bounds()?;
    if max_im > HERGLOTZ_SLACK {
        return Err(Error::DegenerateDensity(format!(
            "transform value left the Herglotz class (max Im eigenvalue {max_im:.3e})"
        )));
    }
    Ok(())
}

/// Converged subordination data at one point.
#[derive(Debug, Clone, Copy)]
pub struct SubordinationResult<const K: usize> {
    /// G_{x+y}(b) = G_x(omega1).
    pub g_value: CMat<K>,
    pub omega1: CMat<K>,
    pub omega2: CMat<K>,
    pub iterations: usize,
    pub residual: f64,
    /// Max-norm gap between G_x(omega1) and G_y(omega2).
    pub consistency_gap: f64,
}

/// Cauchy transform of the free additive convolution x ⊞ y at `point`, by the
/// fixed point of f(ω) = h_y(h_x(ω) + b) + b started from ω = b.
pub fn subordination_sum<const K: usize>(
    gx: &dyn CauchyTransform<K>,
    gy: &dyn CauchyTransform<K>,
    point: &CMat<K>,
    config: &FixedPointConfig,
) -> Result<SubordinationResult<K>> {
    config.validate()?;
    let b = *point;
    if b.min_imag_eig()? <= 0.0 {
        return Err(Error::InvalidArgument(
            "subordination point must lie in the matrix upper half-plane".into(),
        ));
    }
    let mut omega = b;
    let mut residual = f64::INFINITY;
    for it in 1..=config.max_iterations {
        let gx_omega = gx.evaluate(&omega)?;
        check_herglotz(&gx_omega)?;
        let omega2 = h_transform(&gx_omega, &omega)? + b;
        let gy_omega2 = gy.evaluate(&omega2)?;
        check_herglotz(&gy_omega2)?;
        let mapped = h_transform(&gy_omega2, &omega2)? + b;
        let next = if config.damping == 1.0 {
            mapped
        } else {
            omega.scale(1.0 - config.damping) + mapped.scale(config.damping)
        };
        residual = (next - omega).max_norm();
        omega = next;
        if residual < config.tolerance {
            let g_value = gx.evaluate(&omega)?;
            check_herglotz(&g_value)?;
            let omega2 = h_transform(&g_value, &omega)? + b;
            let consistency_gap = (g_value - gy.evaluate(&omega2)?).max_norm();
            let lift = (omega - b).imag_part().hermitian_eig_bounds()?.0;
            if lift < -1e-7 {
                return Err(Error::DegenerateDensity(format!(
                    "subordination point dropped below its base point (min lift {lift:.3e})"
                )));
            }
            return Ok(SubordinationResult {
                g_value,
                omega1: omega,
                omega2,
                iterations: it,
                residual,
                consistency_gap,
            });
        }
    }
    Err(Error::NonConvergence { iterations: config.max_iterations, residual })
}
