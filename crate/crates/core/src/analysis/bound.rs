use serde::Serialize;

use crate::error::{Error, Result};

/// Boundary `β = (√γ + 1)/2` above which a fixed partition fails with exponentially small
/// probability.
pub fn beta_star(gamma: f64) -> f64 {
    (gamma.sqrt() + 1.0) / 2.0
}

/// Constants of the probabilistic recovery guarantee for the sum-of-norms estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecoveryBound {
    /// `s/k`.
    pub beta: f64,
    /// `n/(km)`.
    pub gamma: f64,
    pub alpha: f64,
    pub beta_star: f64,
    /// `½((2β − 1)/√γ − 1)²`, meaningful only when `applicable`.
    pub c0: f64,
    /// `⌈β log(e/β) / ((1 − α) c0 γ)⌉`; `None` when the bound does not apply.
    pub min_m: Option<u64>,
    /// `β > β*`.
    pub applicable: bool,
}

impl RecoveryBound {
    /// `e^{−c0 n}`, the leading-order failure probability of one fixed partition.
    pub fn weak_failure_probability(&self, n: usize) -> Option<f64> {
        self.applicable.then(|| (-self.c0 * n as f64).exp())
    }
}

pub fn recovery_bound_constants(n: usize, m: usize, k: usize, s: usize, alpha: f64) -> Result<RecoveryBound> {
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "dimensions must be positive, got n={n}, m={m}, k={k}"
        )));
    }
    if s == 0 || s > k {
        return Err(Error::InvalidParameter(format!("need 1 <= s <= k, got s={s}, k={k}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let beta = s as f64 / k as f64;
    let gamma = n as f64 / (k * m) as f64;
    let bs = beta_star(gamma);
    let c0 = 0.5 * ((2.0 * beta - 1.0) / gamma.sqrt() - 1.0).powi(2);
    let applicable = beta > bs && c0 > 0.0;
    let min_m = applicable.then(|| {
        let v = beta * (std::f64::consts::E / beta).ln() / ((1.0 - alpha) * c0 * gamma);
        v.ceil() as u64
    });
    Ok(RecoveryBound {
        beta,
        gamma,
        alpha,
        beta_star: bs,
        c0,
        min_m,
        applicable,
    })
}
