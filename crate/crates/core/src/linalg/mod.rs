//! Dense linear algebra used by every solver: Householder QR, one-sided Jacobi SVD,
//! cyclic Jacobi symmetric eigendecomposition, and the least-squares/projection
//! helpers built on top of them.

mod eigen;
mod lstsq;
mod matrix;
mod qr;
mod svd;

pub use eigen::{cholesky, symmetric_eigen, toeplitz, toeplitz_sqrt_pair, SpdRoots, SymmetricEigen};
pub use lstsq::{least_squares, projection_pair, LeastSquaresFactor, RANK_TOLERANCE};
pub use matrix::DenseMatrix;
pub use qr::HouseholderQr;
pub use svd::{singular_values, Svd};

use crate::scalar::Real;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<T: Real>(v: &[T]) -> T {
    // Scaled accumulation avoids overflow/underflow for extreme magnitudes.
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let ss = v.iter().fold(T::zero(), |acc, &x| {
        let y = x / scale;
        acc + y * y
    });
    scale * ss.sqrt()
}

#[inline]
pub fn norm_inf<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<T: Real>(a: &[T], alpha: T) -> Vec<T> {
    a.iter().map(|&x| x * alpha).collect()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Back substitution for an upper-triangular system `R x = c`.
pub(crate) fn solve_upper<T: Real>(r: &DenseMatrix<T>, c: &[T]) -> Vec<T> {
    let n = r.cols();
    let mut x = c[..n].to_vec();
    for i in (0..n).rev() {
        let row = r.row(i);
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= row[j] * x[j];
        }
        x[i] = acc / row[i];
    }
    x
}

/// Solves `Rᵀ y = c` for upper-triangular `R` (forward substitution).
pub(crate) fn solve_upper_transposed<T: Real>(r: &DenseMatrix<T>, c: &[T]) -> Vec<T> {
    let n = r.cols();
    let mut y = c[..n].to_vec();
    for i in 0..n {
        let mut acc = y[i];
        for j in 0..i {
            acc -= r[(j, i)] * y[j];
        }
        y[i] = acc / r[(i, i)];
    }
    y
}
