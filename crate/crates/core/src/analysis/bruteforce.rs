use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, norm2, sub, LeastSquaresFactor, Svd, RANK_TOLERANCE};
use crate::model::SensingProblem;
use crate::scalar::Real;

/// Largest sensor count the exhaustive sensor-selection oracle accepts.
pub const P0_MAX_SENSORS: usize = 20;

/// Largest number of subsets the exhaustive noisy oracle enumerates.
pub const RSN_MAX_SUBSETS: u64 = 1_000_000;

/// Relative feasibility tolerance: a subset is consistent when its least-squares residual
/// is at most `tol (1 + ‖b_S‖)`.
pub const DEFAULT_FEAS_TOL: f64 = 1e-8;

/// `C(n, r)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn stacked<T: Real>(problem: &SensingProblem<T>, subset: &[usize]) -> Result<(crate::linalg::DenseMatrix<T>, Vec<T>)> {
    let sub = problem.subset(subset)?;
    Ok((sub.stacked_matrix(), sub.stacked_data()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct P0Solution<T> {
    pub x: Vec<T>,
    /// Consistent sensors, ascending.
    pub support: Vec<usize>,
    pub s: usize,
}

/// Largest consistent subset by exhaustive search.
///
/// Sizes are tried from `k` down; within a size, subsets are visited in lexicographic
/// order and the first consistent one wins. `x` is the minimum-norm least-squares
/// solution on that subset.
pub fn solve_p0_bruteforce<T: Real>(problem: &SensingProblem<T>, feas_tol: T) -> Result<P0Solution<T>> {
    let k = problem.k();
    if k > P0_MAX_SENSORS {
        return Err(Error::GuardExceeded(format!(
            "exhaustive search over k={k} sensors (limit {P0_MAX_SENSORS})"
        )));
    }
    if !(feas_tol >= T::zero()) {
        return Err(Error::InvalidParameter("feasibility tolerance must be non-negative".into()));
    }
    for s in (1..=k).rev() {
        for subset in (0..k).combinations(s) {
            let (a, b) = stacked(problem, &subset)?;
            let x = least_squares(&a, &b)?;
            let resid = norm2(&sub(&b, &a.matvec(&x)));
            if resid <= feas_tol * (T::one() + norm2(&b)) {
                return Ok(P0Solution { x, support: subset, s });
            }
        }
    }
    Err(Error::Validation("no single sensor is consistent".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RsnSolution<T> {
    pub x: Vec<T>,
    pub support: Vec<usize>,
    /// `‖b_S − A_S x‖²` at the optimum.
    pub objective: T,
    /// Number of enumerated subsets whose stacked matrix was rank deficient; those were
    /// fitted with the minimum-norm solution.
    pub rank_deficient_subsets: usize,
}

/// Exact minimizer of the least-squares error over all size-`s` sensor subsets.
pub fn solve_rsn_bruteforce<T: Real>(problem: &SensingProblem<T>, s: usize) -> Result<RsnSolution<T>> {
    let k = problem.k();
    if s == 0 || s > k {
        return Err(Error::InvalidParameter(format!("need 1 <= s <= k, got s={s}, k={k}")));
    }
    let count = binomial(k, s);
    if count > RSN_MAX_SUBSETS {
        return Err(Error::GuardExceeded(format!(
            "C({k}, {s}) = {count} subsets (limit {RSN_MAX_SUBSETS})"
        )));
    }
    let mut best: Option<RsnSolution<T>> = None;
    let mut deficient = 0;
    for subset in (0..k).combinations(s) {
        let (a, b) = stacked(problem, &subset)?;
        let x = match LeastSquaresFactor::new(&a) {
            Ok(f) => f.solve(&b),
            Err(Error::RankDeficient { .. }) => {
                deficient += 1;
                Svd::new(&a).solve_min_norm(&b, T::lit(RANK_TOLERANCE))
            }
            Err(e) => return Err(e),
        };
        let r = norm2(&sub(&b, &a.matvec(&x)));
        let objective = r * r;
        if best.as_ref().is_none_or(|bst| objective < bst.objective) {
            best = Some(RsnSolution {
                x,
                support: subset,
                objective,
                rank_deficient_subsets: 0,
            });
        }
    }
    let mut out = best.expect("at least one subset is enumerated");
    out.rank_deficient_subsets = deficient;
    Ok(out)
}
