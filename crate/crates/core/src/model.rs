//! Problem, ground truth, configuration, and result types.

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::scalar::Real;

/// One sensor's linear subsystem `b_i ≈ A_i x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorBlock<T> {
    pub a: DenseMatrix<T>,
    pub b: Vec<T>,
}

impl<T: Real> SensorBlock<T> {
    pub fn new(a: DenseMatrix<T>, b: Vec<T>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "block matrix has {} rows but data vector has length {}",
                a.rows(),
                b.len()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn residual(&self, x: &[T]) -> Vec<T> {
        linalg::sub(&self.b, &self.a.matvec(x))
    }
}

/// `k` sensor blocks sharing block height `m` and unknown dimension `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingProblem<T> {
    n: usize,
    m: usize,
    blocks: Vec<SensorBlock<T>>,
}

impl<T: Real> SensingProblem<T> {
    pub fn new(blocks: Vec<SensorBlock<T>>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::Validation("a sensing problem needs at least one sensor (k >= 1)".into()))?;
        let (m, n) = first.a.shape();
        if n == 0 || m == 0 {
            return Err(Error::Validation(format!("degenerate block shape {m}x{n}")));
        }
        for (i, blk) in blocks.iter().enumerate() {
            if blk.a.shape() != (m, n) || blk.b.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "block {i} has shape {:?} / data length {}, expected {m}x{n}",
                    blk.a.shape(),
                    blk.b.len()
                )));
            }
            if !blk.a.is_finite() || blk.b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sensor block"));
            }
        }
        Ok(Self { n, m, blocks })
    }

    /// Splits a stacked `km x n` matrix and length-`km` vector into `k` blocks of height `m`.
    pub fn from_stacked(a: &DenseMatrix<T>, b: &[T], m: usize) -> Result<Self> {
        if m == 0 || !a.rows().is_multiple_of(m) || a.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot split {} rows (data length {}) into blocks of height {m}",
                a.rows(),
                b.len()
            )));
        }
        let blocks = (0..a.rows() / m)
            .map(|i| SensorBlock::new(a.row_range(i * m, (i + 1) * m), b[i * m..(i + 1) * m].to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[SensorBlock<T>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &SensorBlock<T> {
        &self.blocks[i]
    }

    /// Aggregate `km x n` regression matrix.
    pub fn stacked_matrix(&self) -> DenseMatrix<T> {
        let refs: Vec<&DenseMatrix<T>> = self.blocks.iter().map(|b| &b.a).collect();
        DenseMatrix::vstack(&refs).expect("blocks share column count")
    }

    /// Aggregate length-`km` data vector.
    pub fn stacked_data(&self) -> Vec<T> {
        self.blocks.iter().flat_map(|b| b.b.iter().copied()).collect()
    }

    /// `‖b_i − A_i x‖₂` for every sensor.
    pub fn residual_norms(&self, x: &[T]) -> Vec<T> {
        self.blocks.iter().map(|b| linalg::norm2(&b.residual(x))).collect()
    }

    /// Sum-of-norms objective `Σ ‖b_i − A_i x‖₂`.
    pub fn sum_of_norms(&self, x: &[T]) -> T {
        self.residual_norms(x).into_iter().sum()
    }

    /// Problem restricted to the given sensors, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let blocks = indices
            .iter()
            .map(|&i| {
                self.blocks
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidParameter(format!("sensor index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    /// Re-blocks every scalar equation into its own sensor (`km` blocks of height 1).
    pub fn to_scalar_blocks(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .flat_map(|blk| {
                (0..self.m).map(move |r| SensorBlock {
                    a: blk.a.row_range(r, r + 1),
                    b: vec![blk.b[r]],
                })
            })
            .collect();
        Self {
            n: self.n,
            m: 1,
            blocks,
        }
    }

    pub fn cast<U: Real>(&self) -> SensingProblem<U> {
        SensingProblem {
            n: self.n,
            m: self.m,
            blocks: self
                .blocks
                .iter()
                .map(|b| SensorBlock {
                    a: b.a.cast(),
                    b: b.b.iter().map(|v| U::lit(v.as_f64())).collect(),
                })
                .collect(),
        }
    }
}

/// Zero-pads blocks of heterogeneous heights `m_i` up to `max m_i`.
pub fn pad_to_uniform<T: Real>(blocks: Vec<(DenseMatrix<T>, Vec<T>)>) -> Result<SensingProblem<T>> {
    let n = blocks
        .first()
        .map(|(a, _)| a.cols())
        .ok_or_else(|| Error::Validation("a sensing problem needs at least one sensor (k >= 1)".into()))?;
    if let Some((i, _)) = blocks.iter().enumerate().find(|(_, (a, _))| a.cols() != n) {
        return Err(Error::DimensionMismatch(format!(
            "block {i} has {} columns, expected {n}",
            blocks[i].0.cols()
        )));
    }
    let height = blocks.iter().map(|(a, _)| a.rows()).max().unwrap_or(0);
    let padded = blocks
        .into_iter()
        .map(|(a, mut b)| {
            if a.rows() != b.len() {
                return Err(Error::DimensionMismatch("block data length differs from row count".into()));
            }
            let extra = height - a.rows();
            let a = if extra == 0 {
                a
            } else {
                DenseMatrix::vstack(&[&a, &DenseMatrix::zeros(extra, n)])?
            };
            b.resize(height, T::zero());
            SensorBlock::new(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    SensingProblem::new(padded)
}

/// How the unreliable sensors were generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierModel {
    /// Unreliable blocks carry pure standard normal data; no noise anywhere.
    NoiseFreeRandom,
    /// Unreliable blocks carry standard normal data plus measurement noise.
    GaussianOutlier,
    /// Unreliable entries are Laplacian with variance `σ² + 1`.
    LaplacianOutlier,
}

/// The planted solution of a generated instance. Sensor indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth<T> {
    pub x0: Vec<T>,
    pub reliable_set: Vec<usize>,
    pub sigma: T,
    pub outlier_model: OutlierModel,
}

impl<T: Real> GroundTruth<T> {
    pub fn validate(&self, problem: &SensingProblem<T>) -> Result<()> {
        if self.x0.len() != problem.n() {
            return Err(Error::Validation(format!(
                "ground truth x0 has length {}, expected {}",
                self.x0.len(),
                problem.n()
            )));
        }
        if self.reliable_set.is_empty() {
            return Err(Error::Validation("reliable set must be non-empty".into()));
        }
        if let Some(&i) = self.reliable_set.iter().find(|&&i| i >= problem.k()) {
            return Err(Error::Validation(format!("reliable index {i} out of range")));
        }
        if !(self.sigma >= T::zero()) {
            return Err(Error::Validation("noise level must be nonnegative".into()));
        }
        Ok(())
    }

    /// Membership mask over all `k` sensors.
    pub fn reliable_mask(&self, k: usize) -> Vec<bool> {
        let mut mask = vec![false; k];
        for &i in &self.reliable_set {
            mask[i] = true;
        }
        mask
    }
}

/// Tuning knobs shared by the solver family.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    /// Group penalty λ for the outlier-aware estimators.
    pub lambda: T,
    /// Offset δ of the log surrogates.
    pub delta: T,
    /// Relative-change stopping threshold ε.
    pub epsilon: T,
    pub max_iters: usize,
    /// Initial splitting penalty ρ.
    pub rho: T,
    pub abs_tol: T,
    pub rel_tol: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            lambda: T::one(),
            delta: T::lit(1e-4),
            epsilon: T::lit(1e-6),
            max_iters: 5000,
            rho: T::one(),
            abs_tol: T::lit(1e-8),
            rel_tol: T::lit(1e-6),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if !(self.lambda >= T::zero() && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        positive(self.delta, "delta")?;
        positive(self.epsilon, "epsilon")?;
        positive(self.rho, "rho")?;
        positive(self.abs_tol, "abs_tol")?;
        positive(self.rel_tol, "rel_tol")?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOutput<T> {
    pub x_hat: Vec<T>,
    /// Per-sensor outlier estimates, present for the outlier-aware estimators.
    pub u_hat: Option<Vec<Vec<T>>>,
    pub residual_norms: Vec<T>,
    pub cost_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> SolverOutput<T> {
    /// Indices of sensors whose outlier block is nonzero.
    pub fn outlier_support(&self) -> Option<Vec<usize>> {
        self.u_hat.as_ref().map(|u| {
            u.iter()
                .enumerate()
                .filter(|(_, ui)| ui.iter().any(|&v| v != T::zero()))
                .map(|(i, _)| i)
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(rows: &[Vec<f64>], b: &[f64]) -> (DenseMatrix<f64>, Vec<f64>) {
        (DenseMatrix::from_rows(rows).unwrap(), b.to_vec())
    }

    #[test]
    fn padding_is_identity_for_uniform_heights() {
        let blocks = vec![
            block(&[vec![1.0, 2.0], vec![0.0, 1.0]], &[1.0, 2.0]),
            block(&[vec![3.0, 1.0], vec![1.0, 1.0]], &[0.5, 0.0]),
        ];
        let p = pad_to_uniform(blocks.clone()).unwrap();
        for (blk, (a, b)) in p.blocks().iter().zip(&blocks) {
            assert_eq!(&blk.a, a);
            assert_eq!(&blk.b, b);
        }
    }

    #[test]
    fn padding_appends_zero_rows() {
        let blocks = vec![
            block(&[vec![1.0, 2.0], vec![0.0, 1.0]], &[1.0, 2.0]),
            block(&[vec![3.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]], &[0.5, 0.0, 1.0]),
        ];
        let p = pad_to_uniform(blocks).unwrap();
        assert_eq!(p.m(), 3);
        assert_eq!(p.block(0).a.row(2), &[0.0, 0.0]);
        assert_eq!(p.block(0).b[2], 0.0);
    }

    #[test]
    fn padding_rejects_mismatched_columns() {
        let blocks = vec![block(&[vec![1.0, 2.0]], &[1.0]), block(&[vec![1.0]], &[1.0])];
        assert!(matches!(pad_to_uniform(blocks), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn empty_problem_is_rejected() {
        assert!(matches!(SensingProblem::<f64>::new(vec![]), Err(Error::Validation(_))));
        assert!(pad_to_uniform::<f64>(vec![]).is_err());
    }

    #[test]
    fn scalar_reblocking_preserves_equations() {
        let p = SensingProblem::from_stacked(
            &DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap(),
            &[1.0, 2.0, 3.0, 4.0],
            2,
        )
        .unwrap();
        let s = p.to_scalar_blocks();
        assert_eq!((s.k(), s.m()), (4, 1));
        assert_eq!(s.stacked_matrix(), p.stacked_matrix());
        assert_eq!(s.stacked_data(), p.stacked_data());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::<f64>::default().validate().is_ok());
        let bad = SolverConfig::<f64> {
            delta: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
