use itertools::Itertools;

use super::bruteforce::binomial;
use crate::error::{Error, Result};
use crate::linalg::{norm2, singular_values, DenseMatrix, HouseholderQr, Svd, RANK_TOLERANCE};
use crate::model::SensingProblem;
use crate::rng::RngStream;
use crate::scalar::Real;

/// Largest number of `(2s − k)`-subsets the rank check enumerates.
pub const UNIQUENESS_MAX_SUBSETS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Uniqueness {
    Unique,
    /// A subset of size `2s − k` whose stacked matrix has rank below `n`.
    NotUnique { subset: Vec<usize> },
}

/// Decides whether a consistent set of size `s > k/2` pins down `x` uniquely: every
/// subset of `2s − k` sensors must have a full-column-rank stacked matrix.
pub fn check_uniqueness_rank<T: Real>(problem: &SensingProblem<T>, s: usize) -> Result<Uniqueness> {
    let (n, m, k) = (problem.n(), problem.m(), problem.k());
    if s > k || 2 * s <= k {
        return Err(Error::InvalidParameter(format!("need k/2 < s <= k, got s={s}, k={k}")));
    }
    let c = 2 * s - k;
    if c * m < n {
        return Ok(Uniqueness::NotUnique {
            subset: (0..c).collect(),
        });
    }
    let count = binomial(k, c);
    if count > UNIQUENESS_MAX_SUBSETS {
        return Err(Error::GuardExceeded(format!(
            "C({k}, {c}) = {count} subsets (limit {UNIQUENESS_MAX_SUBSETS})"
        )));
    }
    for subset in (0..k).combinations(c) {
        let a = problem.subset(&subset)?.stacked_matrix();
        let sv = singular_values(&a);
        let smax = sv[0];
        let full = smax > T::zero() && sv.iter().all(|&v| v > T::lit(RANK_TOLERANCE) * smax);
        if !full {
            return Ok(Uniqueness::NotUnique { subset });
        }
    }
    Ok(Uniqueness::Unique)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RangeCheck<T> {
    /// No violation was found; this is not a proof that the condition holds.
    NoCounterexample,
    /// `v = A u` with `Σ_{i∈S} ‖v_i‖ ≤ Σ_{i∉S} ‖v_i‖` for the listed `S`, `|S| = s`.
    Counterexample { u: Vec<T>, v: Vec<T>, subset: Vec<usize> },
}

/// Whether `Σ_{i∈S} ‖v_i‖ > Σ_{i∉S} ‖v_i‖` holds for the worst `S` of size `s` (the `s`
/// blocks of smallest norm). Returns that worst subset alongside.
pub fn range_condition_holds_for<T: Real>(v: &[T], m: usize, s: usize) -> (bool, Vec<usize>) {
    let norms: Vec<T> = v.chunks(m).map(norm2).collect();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[a].partial_cmp(&norms[b]).unwrap().then(a.cmp(&b)));
    let inside: T = order[..s].iter().fold(T::zero(), |acc, &i| acc + norms[i]);
    let outside: T = order[s..].iter().fold(T::zero(), |acc, &i| acc + norms[i]);
    let mut subset = order[..s].to_vec();
    subset.sort_unstable();
    (inside > outside, subset)
}

fn unit<T: Real>(u: Vec<T>) -> Option<Vec<T>> {
    let nrm = norm2(&u);
    (nrm > T::zero() && nrm.is_finite()).then(|| u.into_iter().map(|x| x / nrm).collect())
}

/// Direction in (or nearest to) the null space of a random set of sensors.
fn null_space_sample<T: Real>(problem: &SensingProblem<T>, s: usize, rng: &mut RngStream) -> Result<Vec<T>> {
    let (n, k) = (problem.n(), problem.k());
    let size = 1 + rng.below(s);
    let mut pool: Vec<usize> = (0..k).collect();
    for i in 0..size {
        let j = i + rng.below(k - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..size].to_vec();
    chosen.sort_unstable();
    let a = problem.subset(&chosen)?.stacked_matrix();
    if a.rows() < n {
        // Columns beyond the row count of A_Sᵀ's full Q are orthogonal to every row of A_S.
        let q = HouseholderQr::new(&a.transpose())?.full_q();
        let mut u = vec![T::zero(); n];
        for j in a.rows()..n {
            let c = T::lit(rng.standard_normal());
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += c * q[(i, j)];
            }
        }
        Ok(u)
    } else {
        let svd = Svd::new(&a);
        Ok(svd.v.column(svd.v.cols() - 1))
    }
}

/// Randomized search for a violation of the range-space recovery condition.
///
/// Each trial tests one direction `u`: even trials draw `u` uniformly on the sphere, odd
/// trials draw it from the null space of a random set of at most `s` sensors, where
/// violations concentrate. Any returned counterexample is certified by direct
/// evaluation; finding none certifies nothing.
pub fn falsify_range_condition<T: Real>(
    problem: &SensingProblem<T>,
    s: usize,
    trials: usize,
    rng: &mut RngStream,
) -> Result<RangeCheck<T>> {
    let (n, m, k) = (problem.n(), problem.m(), problem.k());
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if s == 0 || s > k {
        return Err(Error::InvalidParameter(format!("need 1 <= s <= k, got s={s}, k={k}")));
    }
    let a: DenseMatrix<T> = problem.stacked_matrix();
    for t in 0..trials {
        let raw = if t % 2 == 0 {
            (0..n).map(|_| T::lit(rng.standard_normal())).collect()
        } else {
            null_space_sample(problem, s, rng)?
        };
        let Some(u) = unit(raw) else { continue };
        let v = a.matvec(&u);
        let (holds, subset) = range_condition_holds_for(&v, m, s);
        if !holds {
            return Ok(RangeCheck::Counterexample { u, v, subset });
        }
    }
    Ok(RangeCheck::NoCounterexample)
}
