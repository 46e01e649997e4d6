use super::{dot, solve_upper, solve_upper_transposed, DenseMatrix, HouseholderQr, Svd};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative singular value threshold below which a matrix is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Least-squares machinery for a fixed full-column-rank matrix `A = Q R`.
///
/// The thin `Q` is stored explicitly so the projection `P_A v = Q (Qᵀ v)` costs
/// `O(rows * cols)` per application.
#[derive(Clone, Debug)]
pub struct LeastSquaresFactor<T> {
    q: DenseMatrix<T>,
    r: DenseMatrix<T>,
}

/// Cheap sufficient test for `σ_min(R)/σ_max(R) > RANK_TOLERANCE`, using
/// `σ_max ≤ ‖R‖_F` and `σ_min ≥ 1/‖R⁻¹‖_F`.
fn clearly_full_rank<T: Real>(r: &DenseMatrix<T>) -> bool {
    let n = r.cols();
    if (0..n).any(|i| r[(i, i)] == T::zero()) {
        return false;
    }
    let mut inv_sq = T::zero();
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = solve_upper(r, &e);
        e[j] = T::zero();
        inv_sq += col.iter().fold(T::zero(), |acc, &x| acc + x * x);
    }
    let bound = T::one() / (r.frobenius_norm() * inv_sq.sqrt());
    bound.is_finite() && bound > T::lit(RANK_TOLERANCE)
}

impl<T: Real> LeastSquaresFactor<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        let (rows, cols) = a.shape();
        if cols == 0 {
            return Err(Error::DimensionMismatch("matrix has no columns".into()));
        }
        if rows < cols {
            return Err(Error::RankDeficient { ratio: 0.0 });
        }
        let qr = HouseholderQr::new(a)?;
        if !clearly_full_rank(qr.r()) {
            // R shares the singular values of A.
            let sv = super::singular_values(qr.r());
            let smax = sv[0];
            let smin = *sv.last().unwrap();
            if !(smax > T::zero()) || smin <= T::lit(RANK_TOLERANCE) * smax {
                let ratio = if smax > T::zero() { (smin / smax).as_f64() } else { 0.0 };
                return Err(Error::RankDeficient { ratio });
            }
        }
        Ok(Self {
            q: qr.thin_q(),
            r: qr.r().clone(),
        })
    }

    pub fn rows(&self) -> usize {
        self.q.rows()
    }

    pub fn cols(&self) -> usize {
        self.q.cols()
    }

    pub fn q(&self) -> &DenseMatrix<T> {
        &self.q
    }

    pub fn r(&self) -> &DenseMatrix<T> {
        &self.r
    }

    /// Singular values of `A`, descending (computed on each call).
    pub fn singular_values(&self) -> Vec<T> {
        super::singular_values(&self.r)
    }

    /// `Qᵀ v`, the coordinates of `P_A v` in the orthonormal basis.
    pub fn coords(&self, v: &[T]) -> Vec<T> {
        self.q.tr_matvec(v)
    }

    /// `Q c`.
    pub fn expand(&self, c: &[T]) -> Vec<T> {
        self.q.matvec(c)
    }

    /// `P_A v`.
    pub fn project(&self, v: &[T]) -> Vec<T> {
        self.expand(&self.coords(v))
    }

    /// `P_A^⊥ v`.
    pub fn project_orthogonal(&self, v: &[T]) -> Vec<T> {
        let p = self.project(v);
        v.iter().zip(&p).map(|(&a, &b)| a - b).collect()
    }

    /// Maps basis coordinates `c = Qᵀ v` to the least-squares solution `R⁻¹ c`.
    pub fn coords_to_solution(&self, c: &[T]) -> Vec<T> {
        solve_upper(&self.r, c)
    }

    /// `argmin_x ‖A x − b‖₂`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.coords_to_solution(&self.coords(b))
    }

    /// `Aᵀ z = Rᵀ Qᵀ z`.
    pub fn apply_at(&self, z: &[T]) -> Vec<T> {
        let c = self.coords(z);
        let n = self.cols();
        (0..n)
            .map(|j| (0..=j).fold(T::zero(), |acc, i| acc + self.r[(i, j)] * c[i]))
            .collect()
    }

    /// `(AᵀA)⁻¹ g`, used to map gradients back to the parameter space.
    pub fn gram_solve(&self, g: &[T]) -> Vec<T> {
        solve_upper(&self.r, &solve_upper_transposed(&self.r, g))
    }
}

/// Minimizer of `‖b − A x‖₂`; the minimum-norm minimizer when `A` is rank deficient or wide.
pub fn least_squares<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {} but matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares input"));
    }
    if a.cols() == 0 {
        return Ok(Vec::new());
    }
    if a.rows() >= a.cols() {
        match LeastSquaresFactor::new(a) {
            Ok(f) => return Ok(f.solve(b)),
            Err(Error::RankDeficient { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Svd::new(a).solve_min_norm(b, T::lit(RANK_TOLERANCE)))
}

/// Orthogonal projector onto `range(A)` and its complement, `(P_A, I − P_A)`.
pub fn projection_pair<T: Real>(a: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    let f = LeastSquaresFactor::new(a)?;
    let q = f.q();
    let m = q.rows();
    let mut p = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = dot(q.row(i), q.row(j));
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    let perp = DenseMatrix::identity(m).sub(&p);
    Ok((p, perp))
}
