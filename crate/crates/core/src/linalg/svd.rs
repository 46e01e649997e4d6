use super::{dot, norm2, DenseMatrix};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(s) Vᵀ` with `s` sorted descending.
///
/// Computed by one-sided (Hestenes) Jacobi rotations, which deliver singular values to
/// high relative accuracy; that matters for the rank decisions made downstream.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    /// `rows x r`, orthonormal columns (columns for zero singular values are zero).
    pub u: DenseMatrix<T>,
    pub s: Vec<T>,
    /// `cols x r`, orthonormal columns.
    pub v: DenseMatrix<T>,
}

impl<T: Real> Svd<T> {
    pub fn new(a: &DenseMatrix<T>) -> Self {
        if a.rows() >= a.cols() {
            jacobi_svd(a)
        } else {
            let t = jacobi_svd(&a.transpose());
            Svd {
                u: t.v,
                s: t.s,
                v: t.u,
            }
        }
    }

    /// Number of singular values above `rel_tol * s_max`.
    pub fn rank(&self, rel_tol: T) -> usize {
        let smax = self.s.first().copied().unwrap_or_else(T::zero);
        if smax == T::zero() {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rel_tol * smax).count()
    }

    /// Minimum-norm least-squares solution of `A x = b`, truncating singular values
    /// below `rel_tol * s_max`.
    pub fn solve_min_norm(&self, b: &[T], rel_tol: T) -> Vec<T> {
        let r = self.rank(rel_tol);
        let n = self.v.rows();
        let mut x = vec![T::zero(); n];
        for j in 0..r {
            let coeff = (0..self.u.rows()).fold(T::zero(), |acc, i| acc + self.u[(i, j)] * b[i]) / self.s[j];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += coeff * self.v[(i, j)];
            }
        }
        x
    }
}

/// Singular values only, descending.
pub fn singular_values<T: Real>(a: &DenseMatrix<T>) -> Vec<T> {
    Svd::new(a).s
}

fn jacobi_svd<T: Real>(a: &DenseMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    // Column-wise storage so rotations touch contiguous memory.
    let mut g: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&g[p], &g[p]);
                let beta = dot(&g[q], &g[q]);
                let gamma = dot(&g[p], &g[q]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut g, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<(T, usize)> = g.iter().enumerate().map(|(j, col)| (norm2(col), j)).collect();
    sv.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (out_j, &(sigma, j)) in sv.iter().enumerate() {
        s.push(sigma);
        if sigma > T::zero() {
            for i in 0..m {
                u[(i, out_j)] = g[j][i] / sigma;
            }
        }
        for i in 0..n {
            vm[(i, out_j)] = v[j][i];
        }
    }
    Svd { u, s, v: vm }
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_singular_values() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 3.0], vec![-2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let s = singular_values(&a);
        assert!((s[0] - 3.0f64).abs() < 1e-14 && (s[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_wide_and_tall() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.5]]).unwrap();
        for m in [a.clone(), a.transpose()] {
            let svd = Svd::new(&m);
            let us = DenseMatrix::from_fn(svd.u.rows(), svd.s.len(), |i, j| svd.u[(i, j)] * svd.s[j]);
            let back = us.matmul(&svd.v.transpose());
            assert!(back.max_abs_diff(&m) < 1e-12);
        }
    }

    #[test]
    fn rank_of_deficient_matrix() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(Svd::new(&a).rank(1e-10), 1);
    }
}
