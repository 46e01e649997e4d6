//! Outlier-aware estimators under correlated noise with covariance `Σ`.
//!
//! After whitening (`b′ = Σ^{-1/2} b`, `A′ = Σ^{-1/2} A`) the cost is
//! `½‖b′ − A′x − Σ^{-1/2}u‖² + λ Σ ‖u_i‖`, which has no closed-form `u` step. Each
//! iteration minimizes exactly over `x` and then takes one accelerated proximal-gradient
//! step in `u` with step `1/L`, `L = λ_max(Σ⁻¹)`.

use crate::error::{Error, Result};
use crate::linalg::{norm2, sub, DenseMatrix, LeastSquaresFactor, SpdRoots};
use crate::model::{SensingProblem, SolverConfig, SolverOutput};
use crate::scalar::Real;

use super::bcd::{check_lambda, reweight_loop, to_blocks, REL_FLOOR};
use super::prox::block_soft_threshold_into;

/// Relative-change tolerance of the proximal-gradient iteration.
pub const INNER_TOLERANCE: f64 = 1e-8;

struct Whitened<'a, T> {
    problem: &'a SensingProblem<T>,
    w: DenseMatrix<T>,
    a: DenseMatrix<T>,
    factor: LeastSquaresFactor<T>,
    b: Vec<T>,
    step: T,
}

struct Run<T> {
    u: Vec<T>,
    cost_trace: Vec<T>,
    iterations: usize,
    converged: bool,
}

impl<'a, T: Real> Whitened<'a, T> {
    fn new(problem: &'a SensingProblem<T>, sigma: &DenseMatrix<T>) -> Result<Self> {
        let km = problem.k() * problem.m();
        if sigma.shape() != (km, km) {
            return Err(Error::DimensionMismatch(format!(
                "noise covariance is {}x{}, expected {km}x{km}",
                sigma.rows(),
                sigma.cols()
            )));
        }
        let roots = SpdRoots::new(sigma)?;
        let w = roots.inv_sqrt;
        let a = w.matmul(&problem.stacked_matrix());
        let factor = LeastSquaresFactor::new(&a)?;
        let b = w.matvec(&problem.stacked_data());
        Ok(Self {
            problem,
            w,
            a,
            factor,
            b,
            step: roots.min_eigenvalue,
        })
    }

    /// `P′⊥(b′ − W u)`, the whitened residual at the exact x-minimizer.
    fn residual(&self, u: &[T]) -> Vec<T> {
        let target = sub(&self.b, &self.w.matvec(u));
        self.factor.project_orthogonal(&target)
    }

    fn x_of(&self, u: &[T]) -> Vec<T> {
        self.factor.solve(&sub(&self.b, &self.w.matvec(u)))
    }

    fn cost_from_residual(&self, e: &[T], u: &[T], lams: &[T]) -> T {
        let m = self.problem.m();
        let ne = norm2(e);
        let penalty: T = lams
            .iter()
            .enumerate()
            .map(|(i, &l)| l * norm2(&u[i * m..(i + 1) * m]))
            .sum();
        T::lit(0.5) * ne * ne + penalty
    }

    fn prox_step(&self, y: &[T], lams: &[T]) -> Vec<T> {
        let m = self.problem.m();
        // ∇f(y) = −W e(y)
        let g = self.w.matvec(&self.residual(y));
        let v: Vec<T> = y.iter().zip(&g).map(|(&yi, &gi)| yi + self.step * gi).collect();
        let mut z = vec![T::zero(); v.len()];
        for (i, &lam) in lams.iter().enumerate() {
            let rng = i * m..(i + 1) * m;
            block_soft_threshold_into(&v[rng.clone()], lam * self.step, &mut z[rng]);
        }
        z
    }

    /// Monotone accelerated proximal gradient with momentum restart.
    fn run(&self, lams: &[T], mut u: Vec<T>, cfg: &SolverConfig<T>) -> Run<T> {
        let tol = T::lit(INNER_TOLERANCE);
        let mut cost = self.cost_from_residual(&self.residual(&u), &u, lams);
        let mut trace = vec![cost];
        let mut y = u.clone();
        let mut t = T::one();
        let mut momentum = false;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < cfg.max_iters {
            iterations += 1;
            let z = self.prox_step(&y, lams);
            let z_cost = self.cost_from_residual(&self.residual(&z), &z, lams);
            if momentum && z_cost > cost {
                y.clone_from(&u);
                t = T::one();
                momentum = false;
                continue;
            }
            let change = norm2(&sub(&z, &u)) / norm2(&z).max(T::lit(REL_FLOOR));
            let prev = std::mem::replace(&mut u, z);
            cost = z_cost.min(cost);
            trace.push(cost);
            if change < tol || u.iter().chain(&prev).all(|&v| v == T::zero()) {
                converged = true;
                break;
            }
            let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
            let beta = (t - T::one()) / t_next;
            y = u.iter().zip(&prev).map(|(&a, &p)| a + beta * (a - p)).collect();
            t = t_next;
            momentum = true;
        }
        Run {
            u,
            cost_trace: trace,
            iterations,
            converged,
        }
    }

    fn output(&self, run: Run<T>) -> SolverOutput<T> {
        let x_hat = self.x_of(&run.u);
        SolverOutput {
            residual_norms: self.problem.residual_norms(&x_hat),
            x_hat,
            u_hat: Some(to_blocks(&run.u, self.problem.m())),
            cost_trace: run.cost_trace,
            iterations: run.iterations,
            converged: run.converged,
        }
    }
}

/// Group-penalized outlier estimator with noise covariance `sigma` (size `km x km`).
pub fn solve_p3_colored<T: Real>(
    problem: &SensingProblem<T>,
    sigma: &DenseMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolverOutput<T>> {
    cfg.validate()?;
    check_lambda(cfg.lambda)?;
    let wh = Whitened::new(problem, sigma)?;
    let len = problem.k() * problem.m();
    let run = wh.run(&vec![cfg.lambda; problem.k()], vec![T::zero(); len], cfg);
    Ok(wh.output(run))
}

/// Log-penalized counterpart of [`solve_p3_colored`], reweighted like the white-noise
/// estimator.
pub fn solve_p4_colored<T: Real>(
    problem: &SensingProblem<T>,
    sigma: &DenseMatrix<T>,
    cfg: &SolverConfig<T>,
    outer_iters: usize,
) -> Result<SolverOutput<T>> {
    cfg.validate()?;
    check_lambda(cfg.lambda)?;
    let wh = Whitened::new(problem, sigma)?;
    let k = problem.k();
    let m = problem.m();
    let first = wh.run(&vec![cfg.lambda; k], vec![T::zero(); k * m], cfg);
    if outer_iters == 0 {
        return Ok(wh.output(first));
    }
    let log_cost = |x: &[T], u: &[T]| {
        let fit = sub(&sub(&wh.b, &wh.a.matvec(x)), &wh.w.matvec(u));
        let nf = norm2(&fit);
        let penalty: T = u.chunks(m).map(|ui| (norm2(ui) + cfg.delta).ln()).sum();
        T::lit(0.5) * nf * nf + cfg.lambda * penalty
    };
    reweight_loop(
        problem,
        cfg,
        outer_iters,
        first.u,
        first.iterations,
        |lams, u| {
            let run = wh.run(lams, u, cfg);
            (run.u, run.iterations, run.converged)
        },
        |u| wh.x_of(u),
        log_cost,
    )
}
