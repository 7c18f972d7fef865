//! Self-adjoint 3x3 linearization of the squared-difference polynomial.
//!
//! With u = y - x, the pencil
//!   L = c + b0*x + b1*y = [[0, u, u/2], [u, 0, -1], [u/2, -1, 0]]
//! reduces to u^2 when the invertible lower-right 2x2 block is eliminated,
//! so the (0,0) corner of its resolvent recovers the resolvent of (y - x)^2.

/// Coefficient matrices of the pencil c + b0 ⊗ x + b1 ⊗ y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub dim: usize,
    pub c: [[f64; 3]; 3],
    pub b0: [[f64; 3]; 3],
    pub b1: [[f64; 3]; 3],
}

/// The fixed linearization of (y - x)^2 used for the quadratic polynomial's
/// spectral density.
pub fn linearize_p2() -> Linearization {
    let b1 = [[0.0, 1.0, 0.5], [1.0, 0.0, 0.0], [0.5, 0.0, 0.0]];
    let mut b0 = b1;
    for row in b0.iter_mut() {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
    let mut c = [[0.0; 3]; 3];
    c[1][2] = -1.0;
    c[2][1] = -1.0;
    Linearization { dim: 3, c, b0, b1 }
}
