use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending; `vectors` holds them as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Rebuilds `V f(Λ) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> DenseMatrix<T> {
        let n = self.values.len();
        let mapped: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = T::zero();
                for (k, &fk) in mapped.iter().enumerate() {
                    acc += self.vectors[(i, k)] * fk * self.vectors[(j, k)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition. Only the lower triangle symmetry is assumed;
/// callers validate symmetry.
pub fn symmetric_eigen<T: Real>(a: &DenseMatrix<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition needs a square matrix".into()));
    }
    let n = a.rows();
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)] * w[(i, j)])
            .sum();
        let diag: T = (0..n).map(|i| w[(i, i)] * w[(i, i)]).sum();
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = w[(p, p)];
                let aqq = w[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let wkp = w[(k, p)];
                    let wkq = w[(k, q)];
                    w[(k, p)] = c * wkp - s * wkq;
                    w[(k, q)] = s * wkp + c * wkq;
                }
                for k in 0..n {
                    let wpk = w[(p, k)];
                    let wqk = w[(q, k)];
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].partial_cmp(&w[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Square root, inverse square root, and spectral extremes of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct SpdRoots<T> {
    pub sqrt: DenseMatrix<T>,
    pub inv_sqrt: DenseMatrix<T>,
    pub min_eigenvalue: T,
    pub max_eigenvalue: T,
}

impl<T: Real> SpdRoots<T> {
    pub fn new(sigma: &DenseMatrix<T>) -> Result<Self> {
        let scale = sigma.max_abs().max(T::one());
        if !sigma.is_symmetric(T::lit(1e-12) * scale) {
            return Err(Error::InvalidParameter("covariance matrix is not symmetric".into()));
        }
        let eig = symmetric_eigen(sigma)?;
        let min = eig.values.first().copied().unwrap_or_else(T::zero);
        let max = eig.values.last().copied().unwrap_or_else(T::zero);
        let n = T::from_usize(sigma.rows()).unwrap();
        if !(min > T::epsilon() * n * max.abs()) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min.as_f64(),
            });
        }
        Ok(Self {
            sqrt: eig.map_spectrum(|l| l.sqrt()),
            inv_sqrt: eig.map_spectrum(|l| T::one() / l.sqrt()),
            min_eigenvalue: min,
            max_eigenvalue: max,
        })
    }
}

/// Symmetric Toeplitz matrix with the given first column.
pub fn toeplitz<T: Real>(first_column: &[T]) -> DenseMatrix<T> {
    let n = first_column.len();
    DenseMatrix::from_fn(n, n, |i, j| first_column[i.abs_diff(j)])
}

/// Returns `(Σ, Σ^{-1/2})` for the symmetric Toeplitz `Σ` built from `first_column`.
pub fn toeplitz_sqrt_pair<T: Real>(first_column: &[T]) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    if first_column.is_empty() {
        return Err(Error::InvalidParameter("empty Toeplitz column".into()));
    }
    if first_column.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Toeplitz column"));
    }
    let sigma = toeplitz(first_column);
    let roots = SpdRoots::new(&sigma)?;
    Ok((sigma, roots.inv_sqrt))
}

/// Lower Cholesky factor `L` with `L Lᵀ = Σ`.
pub fn cholesky<T: Real>(sigma: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch("Cholesky needs a square matrix".into()));
    }
    let n = sigma.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: d.as_f64(),
            });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut acc = sigma[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / d;
        }
    }
    Ok(l)
}
