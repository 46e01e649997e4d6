//! Outlier-aware least squares `min_{x,u} ½‖b − A x − u‖² + Σ λ_i ‖u_i‖₂` by block
//! coordinate descent, and the estimators built on it.

use crate::error::{Error, Result};
use crate::linalg::{norm2, LeastSquaresFactor};
use crate::model::{SensingProblem, SolverConfig, SolverOutput};
use crate::scalar::Real;

use super::prox::block_soft_threshold_into;

/// Floor on `‖u‖` in the relative-change test.
pub(crate) const REL_FLOOR: f64 = 1e-12;

struct BcdRun<T> {
    u: Vec<T>,
    cost_trace: Vec<T>,
    iterations: usize,
    converged: bool,
}

/// Factorization and projected data shared by repeated runs on one problem.
pub(crate) struct Bcd<'a, T> {
    problem: &'a SensingProblem<T>,
    factor: LeastSquaresFactor<T>,
    b: Vec<T>,
    pperp_b: Vec<T>,
}

impl<'a, T: Real> Bcd<'a, T> {
    pub(crate) fn new(problem: &'a SensingProblem<T>) -> Result<Self> {
        let factor = LeastSquaresFactor::new(&problem.stacked_matrix())?;
        let b = problem.stacked_data();
        let pperp_b = factor.project_orthogonal(&b);
        Ok(Self {
            problem,
            factor,
            b,
            pperp_b,
        })
    }

    /// Alternates `r = P⊥b + P_A u` (the residual at the exact x-minimizer) and the
    /// per-block soft threshold. Each sweep is an exact block minimization, so the
    /// recorded cost is non-increasing.
    fn run(&self, lams: &[T], mut u: Vec<T>, cfg: &SolverConfig<T>) -> BcdRun<T> {
        let m = self.problem.m();
        let mut r = vec![T::zero(); u.len()];
        let mut next = vec![T::zero(); u.len()];
        let mut trace = Vec::new();
        let mut iterations = 0;
        let mut converged = false;
        loop {
            let pu = self.factor.project(&u);
            for (p, ri) in r.iter_mut().enumerate() {
                *ri = self.pperp_b[p] + pu[p];
            }
            trace.push(self.cost(&r, &u, lams));
            if converged || iterations >= cfg.max_iters {
                break;
            }
            let mut any = false;
            for (i, &lam) in lams.iter().enumerate() {
                let rng = i * m..(i + 1) * m;
                any |= block_soft_threshold_into(&r[rng.clone()], lam, &mut next[rng]);
            }
            iterations += 1;
            let was_zero = u.iter().all(|&v| v == T::zero());
            let diff = norm2(&crate::linalg::sub(&next, &u));
            std::mem::swap(&mut u, &mut next);
            converged = (!any && was_zero) || diff / norm2(&u).max(T::lit(REL_FLOOR)) < cfg.epsilon;
        }
        BcdRun {
            u,
            cost_trace: trace,
            iterations,
            converged,
        }
    }

    fn cost(&self, r: &[T], u: &[T], lams: &[T]) -> T {
        let m = self.problem.m();
        let fit = norm2(&crate::linalg::sub(r, u));
        let penalty: T = lams
            .iter()
            .enumerate()
            .map(|(i, &lam)| lam * norm2(&u[i * m..(i + 1) * m]))
            .sum();
        T::lit(0.5) * fit * fit + penalty
    }

    fn output(&self, run: BcdRun<T>) -> SolverOutput<T> {
        let target = crate::linalg::sub(&self.b, &run.u);
        let x_hat = self.factor.solve(&target);
        let m = self.problem.m();
        SolverOutput {
            residual_norms: self.problem.residual_norms(&x_hat),
            x_hat,
            u_hat: Some(to_blocks(&run.u, m)),
            cost_trace: run.cost_trace,
            iterations: run.iterations,
            converged: run.converged,
        }
    }
}

pub(crate) fn to_blocks<T: Real>(u: &[T], m: usize) -> Vec<Vec<T>> {
    u.chunks(m).map(<[T]>::to_vec).collect()
}

pub(crate) fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// `½‖b − A x − u‖² + λ Σ ‖u_i‖` evaluated at `(x, u)`.
pub fn p3_cost<T: Real>(problem: &SensingProblem<T>, x: &[T], u: &[Vec<T>], lambda: T) -> T {
    let mut fit = T::zero();
    let mut penalty = T::zero();
    for (blk, ui) in problem.blocks().iter().zip(u) {
        let e = crate::linalg::sub(&blk.residual(x), ui);
        let ne = norm2(&e);
        fit += ne * ne;
        penalty += norm2(ui);
    }
    T::lit(0.5) * fit + lambda * penalty
}

/// `½‖b − A x − u‖² + λ Σ log(‖u_i‖ + δ)` evaluated at `(x, u)`.
pub fn p4_cost<T: Real>(problem: &SensingProblem<T>, x: &[T], u: &[Vec<T>], lambda: T, delta: T) -> T {
    let mut fit = T::zero();
    let mut penalty = T::zero();
    for (blk, ui) in problem.blocks().iter().zip(u) {
        let e = crate::linalg::sub(&blk.residual(x), ui);
        let ne = norm2(&e);
        fit += ne * ne;
        penalty += (norm2(ui) + delta).ln();
    }
    T::lit(0.5) * fit + lambda * penalty
}

/// Group-penalized outlier estimator, started at `u = 0`.
pub fn solve_p3<T: Real>(problem: &SensingProblem<T>, cfg: &SolverConfig<T>) -> Result<SolverOutput<T>> {
    cfg.validate()?;
    check_lambda(cfg.lambda)?;
    let bcd = Bcd::new(problem)?;
    let len = problem.k() * problem.m();
    let run = bcd.run(&vec![cfg.lambda; problem.k()], vec![T::zero(); len], cfg);
    Ok(bcd.output(run))
}

/// Solves along a non-increasing grid of penalties, warm-starting each `u` at the
/// previous solution.
pub fn solve_p3_path<T: Real>(
    problem: &SensingProblem<T>,
    lambda_grid: &[T],
    cfg: &SolverConfig<T>,
) -> Result<Vec<SolverOutput<T>>> {
    cfg.validate()?;
    if lambda_grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    for &lam in lambda_grid {
        check_lambda(lam)?;
    }
    if lambda_grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("lambda grid must be non-increasing".into()));
    }
    let bcd = Bcd::new(problem)?;
    let mut u = vec![T::zero(); problem.k() * problem.m()];
    let mut outputs = Vec::with_capacity(lambda_grid.len());
    for &lam in lambda_grid {
        let run = bcd.run(&vec![lam; problem.k()], u, cfg);
        u = run.u.clone();
        outputs.push(bcd.output(run));
    }
    Ok(outputs)
}

/// Log-penalized outlier estimator by majorization-minimization.
///
/// Starts at the group-penalized solution; each outer pass solves the weighted problem
/// with `λ_i = λ / (‖û_i‖ + δ)` warm-started at the previous `û`. With `outer_iters = 0`
/// the starting solution is returned unchanged. Otherwise `cost_trace` holds the
/// log-penalty objective at each outer iterate and `iterations` counts inner sweeps.
pub fn solve_p4<T: Real>(
    problem: &SensingProblem<T>,
    cfg: &SolverConfig<T>,
    outer_iters: usize,
) -> Result<SolverOutput<T>> {
    cfg.validate()?;
    check_lambda(cfg.lambda)?;
    let bcd = Bcd::new(problem)?;
    let k = problem.k();
    let m = problem.m();
    let first = bcd.run(&vec![cfg.lambda; k], vec![T::zero(); k * m], cfg);
    if outer_iters == 0 {
        return Ok(bcd.output(first));
    }
    reweight_loop(
        problem,
        cfg,
        outer_iters,
        first.u,
        first.iterations,
        |lams, u| {
            let run = bcd.run(lams, u, cfg);
            (run.u, run.iterations, run.converged)
        },
        |u| bcd.factor.solve(&crate::linalg::sub(&bcd.b, u)),
        |x, u| p4_cost(problem, x, &to_blocks(u, m), cfg.lambda, cfg.delta),
    )
}

/// Shared outer loop of the log-penalty estimators. `inner` solves one weighted problem
/// from a warm start and returns `(u, iterations, converged)`; `x_of` maps `u` to its
/// optimal `x`; `objective` evaluates the log-penalty cost at stacked `(x, u)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn reweight_loop<T: Real>(
    problem: &SensingProblem<T>,
    cfg: &SolverConfig<T>,
    outer_iters: usize,
    u_start: Vec<T>,
    start_iterations: usize,
    mut inner: impl FnMut(&[T], Vec<T>) -> (Vec<T>, usize, bool),
    x_of: impl Fn(&[T]) -> Vec<T>,
    objective: impl Fn(&[T], &[T]) -> T,
) -> Result<SolverOutput<T>> {
    let m = problem.m();
    let mut u = u_start;
    let mut x = x_of(&u);
    let mut trace = vec![objective(&x, &u)];
    let mut iterations = start_iterations;
    let mut converged = true;
    for _ in 0..outer_iters {
        let lams: Vec<T> = u.chunks(m).map(|ui| cfg.lambda / (norm2(ui) + cfg.delta)).collect();
        let (u_new, its, conv) = inner(&lams, u.clone());
        iterations += its;
        converged = conv;
        let change = norm2(&crate::linalg::sub(&u_new, &u)) / norm2(&u_new).max(T::lit(REL_FLOOR));
        u = u_new;
        x = x_of(&u);
        trace.push(objective(&x, &u));
        if change < cfg.epsilon {
            break;
        }
    }
    Ok(SolverOutput {
        residual_norms: problem.residual_norms(&x),
        x_hat: x,
        u_hat: Some(to_blocks(&u, m)),
        cost_trace: trace,
        iterations,
        converged,
    })
}

/// Scalar Huber M-estimator with threshold `tau`, solved as the group-penalized problem
/// on scalar blocks. `û` and residual norms are regrouped per original sensor; a sensor
/// is outlier-free iff all of its scalar `û` entries are zero.
pub fn solve_huber_scalar<T: Real>(
    problem: &SensingProblem<T>,
    tau: T,
    cfg: &SolverConfig<T>,
) -> Result<SolverOutput<T>> {
    let scalar = problem.to_scalar_blocks();
    let mut out = solve_p3(&scalar, &cfg.clone().with_lambda(tau))?;
    let m = problem.m();
    out.u_hat = out.u_hat.map(|u| to_blocks(&u.concat(), m));
    out.residual_norms = problem.residual_norms(&out.x_hat);
    Ok(out)
}
