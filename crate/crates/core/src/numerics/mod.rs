//! Complex dense linear algebra: DFT bases, Kronecker products,
//! least squares, orthogonal-complement projectors and numeric rank.

mod decomp;
mod matrix;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use decomp::{
    full_rank_qr, least_squares, numeric_rank, projector_complement, singular_values, Qr,
};
pub use matrix::{ComplexMatrix, ComplexVector};

use crate::error::{Error, Result};

/// Unitary DFT matrix with entry `(p, q) = exp(−j·2π·p·q/n)/√n` (0-based).
pub fn dft_matrix(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::invalid("DFT size must be at least 1"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(ComplexMatrix::from_fn(n, n, |p, q| {
        // reduce the exponent mod n first to keep the angle small
        let k = (p * q) % n;
        Complex64::from_polar(scale, -2.0 * PI * k as f64 / n as f64)
    }))
}

/// Kronecker product; block `(i, j)` of the result is `a[i, j]·b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = b.shape();
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> ComplexVector {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}
