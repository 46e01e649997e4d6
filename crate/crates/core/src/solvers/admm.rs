//! Sum-of-norms regression `min_x Σ w_i ‖b_i − A_i x‖₂` by scaled ADMM on the split
//! `A x + r = b`, plus the reweighted log-surrogate loop and the ℓ1 special case.

use crate::error::{Error, Result};
use crate::linalg::{norm2, LeastSquaresFactor};
use crate::model::{SensingProblem, SolverConfig, SolverOutput};
use crate::scalar::Real;

use super::polish::polish;
use super::prox::block_soft_threshold_into;

/// Nonnegative per-sensor weights of the weighted sum-of-norms objective.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockWeights<T> {
    w: Vec<T>,
}

impl<T: Real> BlockWeights<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("block weights"));
        }
        if w.iter().any(|&v| v < T::zero()) {
            return Err(Error::InvalidParameter("block weights must be nonnegative".into()));
        }
        Ok(Self { w })
    }

    pub fn uniform(k: usize) -> Self {
        Self { w: vec![T::one(); k] }
    }

    /// `w_i = (‖r_i‖ + δ)⁻¹`.
    pub fn reweighted(residual_norms: &[T], delta: T) -> Self {
        Self {
            w: residual_norms.iter().map(|&r| T::one() / (r + delta)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// `Σ log(‖r_i‖ + δ)`.
pub fn log_surrogate<T: Real>(residual_norms: &[T], delta: T) -> T {
    residual_norms.iter().map(|&r| (r + delta).ln()).sum()
}

/// Over-relaxation factor of the splitting iteration.
const RELAXATION: f64 = 1.6;

/// Iterations the zero pattern of `r` must stay fixed before an active-set refinement
/// is attempted.
const STABLE_ITERS: usize = 10;

struct AdmmRun<T> {
    x: Vec<T>,
    cost_trace: Vec<T>,
    iterations: usize,
    converged: bool,
}

/// Factorization and data shared by repeated weighted solves on one problem.
struct SumOfNorms<'a, T> {
    problem: &'a SensingProblem<T>,
    factor: LeastSquaresFactor<T>,
    b: Vec<T>,
    qb: Vec<T>,
}

impl<'a, T: Real> SumOfNorms<'a, T> {
    fn new(problem: &'a SensingProblem<T>) -> Result<Self> {
        let factor = LeastSquaresFactor::new(&problem.stacked_matrix())?;
        let b = problem.stacked_data();
        let qb = factor.coords(&b);
        Ok(Self { problem, factor, b, qb })
    }

    fn stacked_residual(&self, x: &[T]) -> Vec<T> {
        self.problem.blocks().iter().flat_map(|blk| blk.residual(x)).collect()
    }

    fn ls_solution(&self) -> Vec<T> {
        self.factor.coords_to_solution(&self.qb)
    }

    fn run(&self, w: &[T], r0: Vec<T>, cfg: &SolverConfig<T>) -> AdmmRun<T> {
        let m = self.problem.m();
        let n = self.problem.n();
        let km = self.b.len();
        let b = &self.b;
        let q = self.factor.q();
        let r_mat = self.factor.r();
        let rt = |c: &[T]| -> Vec<T> {
            (0..n)
                .map(|j| (0..=j).fold(T::zero(), |acc, i| acc + r_mat[(i, j)] * c[i]))
                .collect::<Vec<T>>()
        };

        let mean_w = w.iter().copied().sum::<T>() / T::from_usize(w.len()).unwrap();
        let mut rho = if mean_w > T::zero() { cfg.rho * mean_w } else { cfg.rho };
        let sqrt_km = T::from_usize(km).unwrap().sqrt();
        let sqrt_n = T::from_usize(n).unwrap().sqrt();
        let b_norm = norm2(b);
        let s_max = self.factor.singular_values()[0];

        let mut r = r0;
        let mut qr = q.tr_matvec(&r);
        let mut y = vec![T::zero(); km];
        let mut qy = vec![T::zero(); n];
        let mut t = vec![T::zero(); km];
        let mut c = vec![T::zero(); n];
        let mut zr = vec![T::zero(); km];
        let mut pattern: Vec<bool> = r.chunks(m).map(|ri| ri.iter().all(|&v| v == T::zero())).collect();
        let mut stable_since = 0;
        let mut tried: Option<Vec<bool>> = None;
        let alpha = T::lit(RELAXATION);

        let mut trace = Vec::new();
        let mut best = (T::infinity(), Vec::new());
        let mut converged = false;
        let mut iterations = 0;

        for it in 1..=cfg.max_iters {
            iterations = it;
            for j in 0..n {
                c[j] = self.qb[j] - qr[j] - qy[j];
            }
            let z = q.matvec(&c);
            // over-relaxed estimate of A x
            for p in 0..km {
                zr[p] = alpha * z[p] + (T::one() - alpha) * (b[p] - r[p]);
            }

            let mut cost = T::zero();
            for (i, &wi) in w.iter().enumerate() {
                let rng = i * m..(i + 1) * m;
                for p in rng.clone() {
                    t[p] = b[p] - zr[p] - y[p];
                }
                let fit = rng.clone().map(|p| (b[p] - z[p]) * (b[p] - z[p])).sum::<T>();
                cost += wi * fit.sqrt();
                let nonzero = block_soft_threshold_into(&t[rng.clone()], wi / rho, &mut r[rng]);
                if nonzero == pattern[i] {
                    pattern[i] = !nonzero;
                    stable_since = it;
                }
            }
            trace.push(cost);
            if cost < best.0 {
                best = (cost, c.clone());
            }

            let qr_new = q.tr_matvec(&r);
            let mut pri_sq = T::zero();
            for p in 0..km {
                y[p] += zr[p] + r[p] - b[p];
                let e = z[p] + r[p] - b[p];
                pri_sq += e * e;
            }
            for j in 0..n {
                qy[j] += alpha * c[j] + (T::one() - alpha) * (self.qb[j] - qr[j]) + qr_new[j] - self.qb[j];
            }
            let dqr: Vec<T> = qr_new.iter().zip(&qr).map(|(&a, &o)| a - o).collect();
            qr = qr_new;

            let pri = pri_sq.sqrt();
            let dual = rho * norm2(&rt(&dqr));
            let eps_pri = sqrt_km * cfg.abs_tol + cfg.rel_tol * norm2(&z).max(norm2(&r)).max(b_norm);
            // Aᵀy vanishes at the optimum here, so the dual scale uses ‖A‖·‖y‖ instead.
            let eps_dual = sqrt_n * cfg.abs_tol + cfg.rel_tol * rho * s_max * norm2(&y);
            if pri <= eps_pri && dual <= eps_dual {
                converged = true;
                break;
            }
            if it - stable_since >= STABLE_ITERS && tried.as_ref() != Some(&pattern) {
                tried = Some(pattern.clone());
                if let Some(x) = self.try_polish(w, &pattern, &c) {
                    trace.push(self.objective(w, &x));
                    return AdmmRun {
                        x,
                        cost_trace: trace,
                        iterations,
                        converged: true,
                    };
                }
            }

            let ten = T::lit(10.0);
            let two = T::lit(2.0);
            if pri > ten * dual {
                rho *= two;
                y.iter_mut().chain(qy.iter_mut()).for_each(|v| *v /= two);
            } else if dual > ten * pri {
                rho /= two;
                y.iter_mut().chain(qy.iter_mut()).for_each(|v| *v *= two);
            }
        }

        if !converged {
            if let Some(x) = self.try_polish(w, &pattern, &c) {
                trace.push(self.objective(w, &x));
                return AdmmRun {
                    x,
                    cost_trace: trace,
                    iterations,
                    converged: true,
                };
            }
        }
        // Without convergence, fall back to the lowest-objective iterate.
        let coords = if converged { c } else { best.1 };
        AdmmRun {
            x: self.factor.coords_to_solution(&coords),
            cost_trace: trace,
            iterations,
            converged,
        }
    }

    fn objective(&self, w: &[T], x: &[T]) -> T {
        self.problem
            .residual_norms(x)
            .iter()
            .zip(w)
            .map(|(&r, &wi)| wi * r)
            .sum()
    }

    /// `zero` marks the blocks that the splitting iterate has thresholded to exactly zero.
    fn try_polish(&self, w: &[T], zero: &[bool], c: &[T]) -> Option<Vec<T>> {
        polish(self.problem, w, zero, &self.factor.coords_to_solution(c))
    }
}

fn check_weights<T: Real>(problem: &SensingProblem<T>, weights: &BlockWeights<T>) -> Result<()> {
    if weights.len() != problem.k() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} sensors",
            weights.len(),
            problem.k()
        )));
    }
    Ok(())
}

/// Weighted sum-of-norms estimator; `weights = None` means unit weights.
pub fn solve_p1<T: Real>(
    problem: &SensingProblem<T>,
    cfg: &SolverConfig<T>,
    weights: Option<&BlockWeights<T>>,
) -> Result<SolverOutput<T>> {
    cfg.validate()?;
    let uniform;
    let weights = match weights {
        Some(w) => {
            check_weights(problem, w)?;
            w
        }
        None => {
            uniform = BlockWeights::uniform(problem.k());
            &uniform
        }
    };
    let sn = SumOfNorms::new(problem)?;
    let r0 = sn.stacked_residual(&sn.ls_solution());
    let run = sn.run(weights.as_slice(), r0, cfg);
    Ok(finish(problem, run))
}

fn finish<T: Real>(problem: &SensingProblem<T>, run: AdmmRun<T>) -> SolverOutput<T> {
    SolverOutput {
        residual_norms: problem.residual_norms(&run.x),
        x_hat: run.x,
        u_hat: None,
        cost_trace: run.cost_trace,
        iterations: run.iterations,
        converged: run.converged,
    }
}

/// Reweighted sum-of-norms: starts at the unweighted solution, then performs up to
/// `outer_iters` weighted solves with `w_i = (‖b_i − A_i x‖ + δ)⁻¹`.
///
/// With `outer_iters = 0` the unweighted output is returned unchanged. Otherwise
/// `cost_trace` holds `Σ log(‖r_i‖ + δ)` at each outer iterate and `iterations` counts
/// inner iterations.
pub fn solve_p2<T: Real>(
    problem: &SensingProblem<T>,
    cfg: &SolverConfig<T>,
    outer_iters: usize,
) -> Result<SolverOutput<T>> {
    cfg.validate()?;
    let sn = SumOfNorms::new(problem)?;
    let r0 = sn.stacked_residual(&sn.ls_solution());
    let first = sn.run(&vec![T::one(); problem.k()], r0, cfg);
    if outer_iters == 0 {
        return Ok(finish(problem, first));
    }
    let mut x = first.x;
    let mut norms = problem.residual_norms(&x);
    let mut trace = vec![log_surrogate(&norms, cfg.delta)];
    let mut iterations = first.iterations;
    let mut converged = first.converged;
    for _ in 0..outer_iters {
        let w = BlockWeights::reweighted(&norms, cfg.delta);
        let run = sn.run(w.as_slice(), sn.stacked_residual(&x), cfg);
        iterations += run.iterations;
        converged = run.converged;
        let change = norm2(&crate::linalg::sub(&run.x, &x)) / norm2(&x).max(T::lit(1e-12));
        x = run.x;
        norms = problem.residual_norms(&x);
        trace.push(log_surrogate(&norms, cfg.delta));
        if change < cfg.epsilon {
            break;
        }
    }
    Ok(SolverOutput {
        x_hat: x,
        u_hat: None,
        residual_norms: norms,
        cost_trace: trace,
        iterations,
        converged,
    })
}

/// Least absolute deviations `min_x ‖b − A x‖₁`, solved as a sum-of-norms problem on
/// scalar blocks. Residual norms are reported per original sensor.
pub fn solve_l1<T: Real>(problem: &SensingProblem<T>, cfg: &SolverConfig<T>) -> Result<SolverOutput<T>> {
    let scalar = problem.to_scalar_blocks();
    let mut out = solve_p1(&scalar, cfg, None)?;
    out.residual_norms = problem.residual_norms(&out.x_hat);
    Ok(out)
}
