use super::{dot, DenseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Householder QR of a tall (or square) matrix, `A = Q R`.
///
/// The reflectors are kept so that both the thin and the full orthogonal factor can be
/// formed, and `Qᵀ v` can be applied without forming `Q`.
#[derive(Clone, Debug)]
pub struct HouseholderQr<T> {
    rows: usize,
    cols: usize,
    /// Reflector `k` acts on entries `k..rows`; `vectors[k][0]` corresponds to row `k`.
    vectors: Vec<Vec<T>>,
    betas: Vec<T>,
    r: DenseMatrix<T>,
}

impl<T: Real> HouseholderQr<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows < cols {
            return Err(Error::DimensionMismatch(format!(
                "QR needs rows >= cols, got {rows}x{cols}"
            )));
        }
        let mut work = a.clone();
        let mut vectors = Vec::with_capacity(cols);
        let mut betas = Vec::with_capacity(cols);
        let mut s = vec![T::zero(); cols];

        for k in 0..cols {
            let mut v: Vec<T> = (k..rows).map(|i| work[(i, k)]).collect();
            let norm_x = super::norm2(&v);
            let alpha = if v[0] >= T::zero() { -norm_x } else { norm_x };
            v[0] -= alpha;
            let vnorm_sq = dot(&v, &v);
            let beta = if vnorm_sq > T::zero() {
                T::lit(2.0) / vnorm_sq
            } else {
                T::zero()
            };

            if beta > T::zero() {
                // s_j = v · A[k.., j] for j >= k
                for sj in s[k..].iter_mut() {
                    *sj = T::zero();
                }
                for (off, &vi) in v.iter().enumerate() {
                    if vi == T::zero() {
                        continue;
                    }
                    let row = &work.row(k + off)[k..];
                    for (sj, &aij) in s[k..].iter_mut().zip(row) {
                        *sj += vi * aij;
                    }
                }
                for (off, &vi) in v.iter().enumerate() {
                    let f = beta * vi;
                    if f == T::zero() {
                        continue;
                    }
                    let row = &mut work.row_mut(k + off)[k..];
                    for (aij, &sj) in row.iter_mut().zip(&s[k..]) {
                        *aij -= f * sj;
                    }
                }
            }
            vectors.push(v);
            betas.push(beta);
        }

        let r = DenseMatrix::from_fn(cols, cols, |i, j| if j >= i { work[(i, j)] } else { T::zero() });
        Ok(Self {
            rows,
            cols,
            vectors,
            betas,
            r,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Upper-triangular `cols x cols` factor.
    pub fn r(&self) -> &DenseMatrix<T> {
        &self.r
    }

    fn apply_reflector(&self, k: usize, v: &mut [T]) {
        let beta = self.betas[k];
        if beta == T::zero() {
            return;
        }
        let h = &self.vectors[k];
        let tail = &mut v[k..];
        let f = beta * dot(h, tail);
        for (t, &hi) in tail.iter_mut().zip(h) {
            *t -= f * hi;
        }
    }

    /// Full-length `Qᵀ v` (length `rows`).
    pub fn apply_qt(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = v.to_vec();
        for k in 0..self.cols {
            self.apply_reflector(k, &mut out);
        }
        out
    }

    /// `Q v` for a full-length `v`.
    pub fn apply_q(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = v.to_vec();
        for k in (0..self.cols).rev() {
            self.apply_reflector(k, &mut out);
        }
        out
    }

    /// Orthonormal basis of `range(A)`, `rows x cols`.
    pub fn thin_q(&self) -> DenseMatrix<T> {
        self.q_columns(self.cols)
    }

    /// Full orthogonal factor, `rows x rows`.
    pub fn full_q(&self) -> DenseMatrix<T> {
        self.q_columns(self.rows)
    }

    fn q_columns(&self, ncols: usize) -> DenseMatrix<T> {
        let mut q = DenseMatrix::zeros(self.rows, ncols);
        let mut e = vec![T::zero(); self.rows];
        for j in 0..ncols {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.apply_q(&e);
            for (i, &c) in col.iter().enumerate() {
                q[(i, j)] = c;
            }
        }
        q
    }
}
