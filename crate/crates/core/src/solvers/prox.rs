use crate::linalg::norm2;
use crate::scalar::Real;

/// Minimizer of `½‖v − u‖² + lam‖u‖₂` over `u`.
///
/// Returns zero when `‖v‖ ≤ lam` (the boundary is closed), otherwise `v (1 − lam/‖v‖)`.
pub fn block_soft_threshold<T: Real>(v: &[T], lam: T) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    block_soft_threshold_into(v, lam, &mut out);
    out
}

/// In-place variant of [`block_soft_threshold`]; returns whether the output is nonzero.
pub fn block_soft_threshold_into<T: Real>(v: &[T], lam: T, out: &mut [T]) -> bool {
    let norm = norm2(v);
    if norm <= lam {
        out.iter_mut().for_each(|o| *o = T::zero());
        return false;
    }
    let shrink = T::one() - lam / norm;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = x * shrink;
    }
    true
}
