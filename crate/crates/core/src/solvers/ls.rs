use crate::error::{Error, Result};
use crate::linalg::{least_squares, norm2, LeastSquaresFactor};
use crate::model::{SensingProblem, SolverOutput};
use crate::scalar::Real;

/// Ordinary least squares on the stacked system.
pub fn solve_ls<T: Real>(problem: &SensingProblem<T>) -> Result<SolverOutput<T>> {
    let factor = LeastSquaresFactor::new(&problem.stacked_matrix())?;
    let x_hat = factor.solve(&problem.stacked_data());
    Ok(plain_output(problem, x_hat))
}

/// Least squares on the true reliable sensors only (the genie-aided benchmark).
///
/// Residual norms are reported for every sensor.
pub fn solve_ga_ls<T: Real>(problem: &SensingProblem<T>, reliable: &[usize]) -> Result<SolverOutput<T>> {
    if reliable.is_empty() {
        return Err(Error::InvalidParameter("genie-aided LS needs a non-empty reliable set".into()));
    }
    let sub = problem.subset(reliable)?;
    let x_hat = least_squares(&sub.stacked_matrix(), &sub.stacked_data())?;
    Ok(plain_output(problem, x_hat))
}

pub(crate) fn plain_output<T: Real>(problem: &SensingProblem<T>, x_hat: Vec<T>) -> SolverOutput<T> {
    let residual_norms = problem.residual_norms(&x_hat);
    let cost = residual_norms.iter().map(|&r| r * r).sum::<T>() * T::lit(0.5);
    SolverOutput {
        x_hat,
        u_hat: None,
        residual_norms,
        cost_trace: vec![cost],
        iterations: 1,
        converged: true,
    }
}

/// `½‖b − A x‖²`.
pub fn ls_cost<T: Real>(problem: &SensingProblem<T>, x: &[T]) -> T {
    let r: Vec<T> = problem.blocks().iter().flat_map(|b| b.residual(x)).collect();
    let n = norm2(&r);
    T::lit(0.5) * n * n
}
