use crate::scalar::Real;

/// Scalar Huber loss with threshold `tau`.
pub fn huber_rho<T: Real>(r: T, tau: T) -> T {
    let a = r.abs();
    if a <= tau {
        T::lit(0.5) * a * a
    } else {
        tau * a - T::lit(0.5) * tau * tau
    }
}

/// Vector Huber cost `Σ_i ρ_v(‖r_i‖)`, quadratic below `lam` and linear above.
pub fn vector_huber_cost<T: Real>(residual_norms: &[T], lam: T) -> T {
    residual_norms.iter().map(|&r| huber_rho(r, lam)).sum()
}
