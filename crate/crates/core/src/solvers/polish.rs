//! Active-set refinement for weighted sum-of-norms regression.
//!
//! Given a guess `Z` of the blocks with zero residual at the optimum, the problem
//! restricted to `{x : A_Z x = b_Z}` is smooth and is solved by damped Newton. The
//! result is accepted only with an optimality certificate: multipliers `λ_i` with
//! `A_Zᵀ λ = Σ_{i∉Z} w_i A_iᵀ r_i/‖r_i‖` and `‖λ_i‖ ≤ w_i`.

use crate::linalg::{cholesky, dot, norm2, solve_upper, solve_upper_transposed, DenseMatrix, HouseholderQr};
use crate::linalg::RANK_TOLERANCE;
use crate::model::SensingProblem;
use crate::scalar::Real;

const NEWTON_STEPS: usize = 50;

/// Householder QR of a tall matrix, rejected when `R` has a negligible diagonal entry.
fn tall_qr<T: Real>(a: &DenseMatrix<T>) -> Option<HouseholderQr<T>> {
    let qr = HouseholderQr::new(a).ok()?;
    let r = qr.r();
    let n = r.cols();
    let rmax = (0..n).fold(T::zero(), |acc, i| acc.max(r[(i, i)].abs()));
    if !(rmax > T::zero()) || (0..n).any(|i| r[(i, i)].abs() <= T::lit(RANK_TOLERANCE) * rmax) {
        return None;
    }
    Some(qr)
}

/// Least-squares solution through a tall QR.
fn qr_solve<T: Real>(qr: &HouseholderQr<T>, b: &[T]) -> Vec<T> {
    let qtb = qr.apply_qt(b);
    solve_upper(qr.r(), &qtb[..qr.cols()])
}

/// Affine set `{x_p + N v}` of points with zero residual on the blocks in `Z`.
struct Affine<T> {
    x_p: Vec<T>,
    /// `n x d` orthonormal basis of the null space of `A_Z`.
    basis: DenseMatrix<T>,
}

fn affine_set<T: Real>(a_z: &DenseMatrix<T>, b_z: &[T], x: &[T]) -> Option<Affine<T>> {
    let n = x.len();
    let rz = a_z.rows();
    if rz == 0 {
        return Some(Affine {
            x_p: x.to_vec(),
            basis: DenseMatrix::identity(n),
        });
    }
    if rz >= n {
        let x_p = qr_solve(&tall_qr(a_z)?, b_z);
        let res = norm2(&crate::linalg::sub(&a_z.matvec(&x_p), b_z));
        if res > T::lit(1e-9) * (T::one() + norm2(b_z)) {
            return None;
        }
        return Some(Affine {
            x_p,
            basis: DenseMatrix::zeros(n, 0),
        });
    }
    let qr = tall_qr(&a_z.transpose())?;
    let r = qr.r();
    let q = qr.full_q();
    let y = solve_upper_transposed(r, b_z);
    let x_p = (0..n).map(|i| (0..rz).fold(T::zero(), |acc, j| acc + q[(i, j)] * y[j])).collect();
    let basis = q.column_range(rz, n);
    Some(Affine { x_p, basis })
}

/// `Σ_{i∉Z} w_i ‖b_i − A_i x‖`.
fn free_objective<T: Real>(problem: &SensingProblem<T>, w: &[T], free: &[usize], x: &[T]) -> T {
    free.iter().map(|&i| w[i] * norm2(&problem.block(i).residual(x))).sum()
}

/// Attempts to certify an exact minimizer with zero-residual set `zero`, starting from `x`.
pub(crate) fn polish<T: Real>(problem: &SensingProblem<T>, w: &[T], zero: &[bool], x: &[T]) -> Option<Vec<T>> {
    let n = problem.n();
    let m = problem.m();
    let z_idx: Vec<usize> = (0..problem.k()).filter(|&i| zero[i]).collect();
    let free: Vec<usize> = (0..problem.k()).filter(|&i| !zero[i]).collect();
    let a_z = if z_idx.is_empty() {
        DenseMatrix::zeros(0, n)
    } else {
        problem.subset(&z_idx).ok()?.stacked_matrix()
    };
    let b_z: Vec<T> = z_idx.iter().flat_map(|&i| problem.block(i).b.iter().copied()).collect();
    let aff = affine_set(&a_z, &b_z, x)?;
    let d = aff.basis.cols();

    let point = |v: &[T]| -> Vec<T> {
        let mut p = aff.x_p.clone();
        if d > 0 {
            for (pi, nv) in p.iter_mut().zip(aff.basis.matvec(v)) {
                *pi += nv;
            }
        }
        p
    };
    let mut v: Vec<T> = if d > 0 {
        aff.basis.tr_matvec(&crate::linalg::sub(x, &aff.x_p))
    } else {
        Vec::new()
    };
    let mut xc = point(&v);

    if d > 0 {
        let projected: Vec<DenseMatrix<T>> = free
            .iter()
            .map(|&i| {
                if z_idx.is_empty() {
                    problem.block(i).a.clone()
                } else {
                    problem.block(i).a.matmul(&aff.basis)
                }
            })
            .collect();
        let mut f = free_objective(problem, w, &free, &xc);
        for _ in 0..NEWTON_STEPS {
            let mut g = vec![T::zero(); d];
            let mut h: DenseMatrix<T> = DenseMatrix::zeros(d, d);
            for (&i, bm) in free.iter().zip(&projected) {
                let r = problem.block(i).residual(&xc);
                let nr = norm2(&r);
                if nr == T::zero() {
                    return None;
                }
                let br = bm.tr_matvec(&r);
                for a in 0..d {
                    g[a] -= w[i] * br[a] / nr;
                }
                let s = w[i] / nr;
                let s3 = s / (nr * nr);
                for a in 0..d {
                    for b in 0..=a {
                        let mut acc = T::zero();
                        for row in 0..m {
                            acc += bm[(row, a)] * bm[(row, b)];
                        }
                        let val = s * acc - s3 * br[a] * br[b];
                        h[(a, b)] += val;
                        if a != b {
                            h[(b, a)] += val;
                        }
                    }
                }
            }
            let gnorm = norm2(&g);
            if gnorm <= T::lit(1e-13) * (T::one() + f) {
                break;
            }
            let hmax = h.max_abs().max(T::lit(1e-300));
            let mut shift = T::lit(1e-12) * hmax;
            let step = loop {
                let mut hs = h.clone();
                for a in 0..d {
                    hs[(a, a)] += shift;
                }
                if let Ok(l) = cholesky(&hs) {
                    let neg: Vec<T> = g.iter().map(|&gi| -gi).collect();
                    break solve_upper(&l.transpose(), &lower_solve(&l, &neg));
                }
                shift *= T::lit(100.0);
                if shift > hmax * T::lit(1e6) {
                    return None;
                }
            };
            let slope = dot(&g, &step);
            let mut t = T::one();
            let mut accepted = false;
            for _ in 0..40 {
                let cand: Vec<T> = v.iter().zip(&step).map(|(&a, &s)| a + t * s).collect();
                let xn = point(&cand);
                let fnew = free_objective(problem, w, &free, &xn);
                if fnew <= f + T::lit(1e-4) * t * slope {
                    v = cand;
                    xc = xn;
                    f = fnew;
                    accepted = true;
                    break;
                }
                t *= T::lit(0.5);
            }
            if !accepted {
                break;
            }
        }
    }

    certify(problem, w, &z_idx, &free, &a_z, &xc).then_some(xc)
}

fn lower_solve<T: Real>(l: &DenseMatrix<T>, c: &[T]) -> Vec<T> {
    let n = c.len();
    let mut y = c.to_vec();
    for i in 0..n {
        let mut acc = y[i];
        for j in 0..i {
            acc -= l[(i, j)] * y[j];
        }
        y[i] = acc / l[(i, i)];
    }
    y
}

fn certify<T: Real>(
    problem: &SensingProblem<T>,
    w: &[T],
    z_idx: &[usize],
    free: &[usize],
    a_z: &DenseMatrix<T>,
    x: &[T],
) -> bool {
    let n = problem.n();
    let m = problem.m();
    let mut g = vec![T::zero(); n];
    let mut scale = T::zero();
    for &i in free {
        let blk = problem.block(i);
        let r = blk.residual(x);
        let nr = norm2(&r);
        if nr <= T::lit(1e-10) * (T::one() + norm2(&blk.b)) {
            return false;
        }
        let at = blk.a.tr_matvec(&r);
        for j in 0..n {
            g[j] += w[i] * at[j] / nr;
        }
        scale += w[i] * norm2(&at) / nr;
    }
    let tol = T::lit(1e-9) * (T::one() + scale);
    if z_idx.is_empty() {
        return norm2(&g) <= tol;
    }
    for &i in z_idx {
        let blk = problem.block(i);
        if norm2(&blk.residual(x)) > T::lit(1e-9) * (T::one() + norm2(&blk.b)) {
            return false;
        }
    }
    // minimum-norm multipliers of A_Zᵀ λ = g
    let at = a_z.transpose();
    let lam = if at.rows() >= at.cols() {
        match tall_qr(&at) {
            Some(qr) => qr_solve(&qr, &g),
            None => return false,
        }
    } else {
        match tall_qr(a_z) {
            Some(qr) => {
                let mut padded = solve_upper_transposed(qr.r(), &g);
                padded.resize(a_z.rows(), T::zero());
                qr.apply_q(&padded)
            }
            None => return false,
        }
    };
    if norm2(&crate::linalg::sub(&at.matvec(&lam), &g)) > tol {
        return false;
    }
    z_idx
        .iter()
        .enumerate()
        .all(|(p, &i)| norm2(&lam[p * m..(p + 1) * m]) <= w[i] * (T::one() + T::lit(1e-8)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generate_rs_instance;
    use crate::rng::RngStream;

    #[test]
    fn certifies_the_planted_pattern() {
        let mut rng = RngStream::new(4, 0);
        let (p, truth) = generate_rs_instance::<f64>(6, 2, 10, 8, &mut rng).unwrap();
        let zero = truth.reliable_mask(10);
        let start: Vec<f64> = truth.x0.iter().map(|v| v + 1e-3).collect();
        let x = polish(&p, &[1.0; 10], &zero, &start).unwrap();
        for (a, b) in x.iter().zip(&truth.x0) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_an_inconsistent_pattern() {
        let mut rng = RngStream::new(5, 0);
        let (p, truth) = generate_rs_instance::<f64>(4, 2, 8, 5, &mut rng).unwrap();
        let mut zero = truth.reliable_mask(8);
        zero[7] = true;
        assert!(polish(&p, &[1.0; 8], &zero, &truth.x0).is_none());
    }
}
