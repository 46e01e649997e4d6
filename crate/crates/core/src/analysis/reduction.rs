use crate::error::{Error, Result};
use crate::linalg::{sub, DenseMatrix, HouseholderQr, LeastSquaresFactor};
use crate::model::{SensingProblem, SensorBlock};
use crate::scalar::Real;

/// Embeds `C x = d` as a sensing problem whose sensor `i` carries equation `i` in its
/// first row and zeros elsewhere, so consistent sensors are satisfied equations.
pub fn mcle_to_rs<T: Real>(c: &DenseMatrix<T>, d: &[T], m: usize) -> Result<SensingProblem<T>> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("block height must be at least 2, got {m}")));
    }
    if d.len() != c.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} equations but {} right-hand sides",
            c.rows(),
            d.len()
        )));
    }
    let n = c.cols();
    let blocks = (0..c.rows())
        .map(|i| {
            let a = DenseMatrix::from_fn(m, n, |r, j| if r == 0 { c[(i, j)] } else { T::zero() });
            let mut b = vec![T::zero(); m];
            b[0] = d[i];
            SensorBlock::new(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    SensingProblem::new(blocks)
}

/// An annihilator of `range(A)` and the data it induces.
#[derive(Clone, Debug)]
pub struct Annihilator<T> {
    /// `(km − n) × km` with orthonormal rows and `C A = 0`.
    pub c: DenseMatrix<T>,
    /// `C b`.
    pub d: Vec<T>,
    factor: LeastSquaresFactor<T>,
    b: Vec<T>,
}

impl<T: Real> Annihilator<T> {
    /// Maps a residual `r0` with `C r0 = d` back to `x = A†(b − r0)`.
    pub fn recover_x(&self, r0: &[T]) -> Result<Vec<T>> {
        if r0.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!(
                "residual has length {}, expected {}",
                r0.len(),
                self.b.len()
            )));
        }
        Ok(self.factor.solve(&sub(&self.b, r0)))
    }
}

/// Rewrites the residual form of the sum-of-norms problem as a block-sparse recovery
/// problem `min Σ‖r_i‖ s.t. C r = d`.
pub fn annihilator_pair<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<Annihilator<T>> {
    let (rows, n) = a.shape();
    if rows <= n {
        return Err(Error::DimensionMismatch(format!(
            "annihilator needs more measurements than unknowns, got {rows}x{n}"
        )));
    }
    if b.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "data has length {}, expected {rows}",
            b.len()
        )));
    }
    let factor = LeastSquaresFactor::new(a)?;
    let q = HouseholderQr::new(a)?.full_q();
    let c = DenseMatrix::from_fn(rows - n, rows, |i, j| q[(j, n + i)]);
    let d = c.matvec(b);
    Ok(Annihilator {
        c,
        d,
        factor,
        b: b.to_vec(),
    })
}
