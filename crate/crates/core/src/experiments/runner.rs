use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::beta_star;
use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, sub, toeplitz};
use crate::model::OutlierModel;
use crate::rng::RngStream;

use super::classify::{classify, ClassificationRule};
use super::generate::{generate_rs_instance, generate_rsn_instance, snr_to_sigma};
use super::methods::{noisy_rule, run_method, Method, MethodParams};
use super::spec::{ExperimentSpec, Family};

/// Success criterion of the phase diagram: `‖x̂ − x0‖∞ ≤ 1e−4`.
pub const RECOVERY_TOLERANCE: f64 = 1e-4;

/// Huber-type tuning constant for 95% efficiency at the normal.
pub const HUBER_CONSTANT: f64 = 1.34;

/// Correlation of adjacent measurements in the correlated-noise experiment.
pub const TOEPLITZ_RHO: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub gamma: f64,
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub s: usize,
    pub trials: usize,
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub beta_star: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiagram {
    pub cells: Vec<PhaseCell>,
    /// The recovery curve `β = (√γ + 1)/2` at each grid γ.
    pub curve: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub s: usize,
    pub per_sensor_pct: f64,
    pub whole_network_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub method: Method,
    pub s: usize,
    pub mse: f64,
    pub trials: usize,
}

/// Runs `f` for every trial index, in parallel on the current rayon pool, returning
/// results in trial order.
fn per_trial<R: Send>(trials: usize, f: impl Fn(u64) -> Result<R> + Sync) -> Result<Vec<R>> {
    (0..trials as u64).into_par_iter().map(&f).collect()
}

fn expect_family(spec: &ExperimentSpec, allowed: &[Family]) -> Result<()> {
    spec.validate()?;
    if !allowed.contains(&spec.family) {
        return Err(Error::InvalidParameter(format!(
            "experiment family {:?} is not valid here",
            spec.family
        )));
    }
    Ok(())
}

/// Distinct sensor counts `k = round(n/(γ m))` for `γ_j = 0.1 + 0.9 j / count`.
pub fn phase_grid_k(n: usize, m: usize, gamma_count: usize) -> Vec<usize> {
    let mut ks = Vec::new();
    for j in 1..=gamma_count {
        let gamma = 0.1 + 0.9 * j as f64 / gamma_count as f64;
        let k = (n as f64 / (gamma * m as f64)).round() as usize;
        if k >= 1 && !ks.contains(&k) {
            ks.push(k);
        }
    }
    ks
}

/// Empirical recovery rate of the sum-of-norms estimator over the `(γ, β)` grid.
pub fn run_phase_diagram(spec: &ExperimentSpec) -> Result<PhaseDiagram> {
    expect_family(spec, &[Family::PhaseDiagram])?;
    let (n, m) = (spec.n, spec.m);
    let ks = phase_grid_k(n, m, spec.gamma_count.unwrap_or(10));
    if ks.is_empty() {
        return Err(Error::EmptyGrid(format!("no sensor count for n={n}, m={m}")));
    }
    let params = MethodParams::new(1.0, 1.0);
    let mut cells = Vec::new();
    let mut curve = Vec::new();
    for &k in &ks {
        let gamma = n as f64 / (k * m) as f64;
        curve.push(CurvePoint {
            gamma,
            beta_star: beta_star(gamma),
        });
        for s in k.div_ceil(2)..=k {
            let seed = spec.cell_seed(k, s);
            let hits = per_trial(spec.trials, |t| {
                let mut rng = RngStream::new(seed, t);
                let (problem, truth) = generate_rs_instance::<f64>(n, m, k, s, &mut rng)?;
                let out = run_method(Method::P1, &problem, &truth, &params)?;
                Ok(norm_inf(&sub(&out.x_hat, &truth.x0)) <= RECOVERY_TOLERANCE)
            })?;
            cells.push(PhaseCell {
                gamma,
                beta: s as f64 / k as f64,
                n,
                m,
                k,
                s,
                trials: spec.trials,
                success_rate: hits.iter().filter(|&&h| h).count() as f64 / spec.trials as f64,
            });
        }
    }
    Ok(PhaseDiagram { cells, curve })
}

fn table_rows(
    spec: &ExperimentSpec,
    trial: impl Fn(usize, u64) -> Result<Vec<(f64, bool)>> + Sync,
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for &s in &spec.s_list {
        let results = per_trial(spec.trials, |t| trial(s, t))?;
        for (j, &method) in spec.methods.iter().enumerate() {
            let mut per_sensor = 0.0;
            let mut whole = 0usize;
            for r in &results {
                per_sensor += r[j].0;
                whole += usize::from(r[j].1);
            }
            let trials = spec.trials as f64;
            rows.push(TableRow {
                method,
                s,
                per_sensor_pct: 100.0 * per_sensor / trials,
                whole_network_pct: 100.0 * whole as f64 / trials,
            });
        }
    }
    Ok(rows)
}

/// Noise-free sensor classification; every method is judged by the residual ∞-norm rule.
pub fn run_rs_table(spec: &ExperimentSpec) -> Result<Vec<TableRow>> {
    expect_family(spec, &[Family::RsTable])?;
    let (n, m, k) = (spec.n, spec.m, spec.k.unwrap_or(0));
    let params = MethodParams::new(1.0, 1.0);
    table_rows(spec, |s, t| {
        let mut rng = RngStream::new(spec.cell_seed(k, s), t);
        let (problem, truth) = generate_rs_instance::<f64>(n, m, k, s, &mut rng)?;
        spec.methods
            .iter()
            .map(|&method| {
                let out = run_method(method, &problem, &truth, &params)?;
                let rep = classify(&problem, &out, &truth, ClassificationRule::residual_inf())?;
                Ok((rep.per_sensor_correct, rep.whole_network_success))
            })
            .collect()
    })
}

/// Noisy sensor classification with Laplacian outliers, `τ = σ` and `λ = σ√m`.
pub fn run_rsn_table(spec: &ExperimentSpec) -> Result<Vec<TableRow>> {
    expect_family(spec, &[Family::RsnTable])?;
    let (n, m, k) = (spec.n, spec.m, spec.k.unwrap_or(0));
    let sigma = snr_to_sigma(spec.snr_db.unwrap_or_default());
    let params = MethodParams::new(sigma * (m as f64).sqrt(), sigma);
    table_rows(spec, |s, t| {
        let mut rng = RngStream::new(spec.cell_seed(k, s), t);
        let (problem, truth) =
            generate_rsn_instance::<f64>(n, m, k, s, sigma, OutlierModel::LaplacianOutlier, None, &mut rng)?;
        spec.methods
            .iter()
            .map(|&method| {
                let out = run_method(method, &problem, &truth, &params)?;
                let rep = classify(&problem, &out, &truth, noisy_rule(method))?;
                Ok((rep.per_sensor_correct, rep.whole_network_success))
            })
            .collect()
    })
}

/// Empirical `E‖x̂ − x0‖²` with Gaussian outliers, `τ = 1.34σ` and `λ = 1.34σ√m`.
///
/// For the correlated family the noise covariance is `σ² T` with `T` the Toeplitz
/// matrix of first column `0.9^j`, and the correlated-noise estimators use the penalty
/// `1.34√m/σ`, which reduces to `λ = 1.34σ√m` on the unwhitened scale when `T = I`.
pub fn run_mse_curve(spec: &ExperimentSpec) -> Result<Vec<MseRow>> {
    expect_family(spec, &[Family::RsnMse, Family::Colored])?;
    let (n, m, k) = (spec.n, spec.m, spec.k.unwrap_or(0));
    let sigma = snr_to_sigma(spec.snr_db.unwrap_or_default());
    let sqrt_m = (m as f64).sqrt();
    let mut params = MethodParams::new(HUBER_CONSTANT * sigma * sqrt_m, HUBER_CONSTANT * sigma);
    let cov = (spec.family == Family::Colored).then(|| {
        let col: Vec<f64> = (0..k * m).map(|j| TOEPLITZ_RHO.powi(j as i32)).collect();
        toeplitz(&col).scaled(sigma * sigma)
    });
    if let Some(c) = &cov {
        params.colored = Some((c.clone(), HUBER_CONSTANT * sqrt_m / sigma));
    }
    let mut rows = Vec::new();
    for &s in &spec.s_list {
        let seed = spec.cell_seed(k, s);
        let errors = per_trial(spec.trials, |t| {
            let mut rng = RngStream::new(seed, t);
            let (problem, truth) = generate_rsn_instance::<f64>(
                n,
                m,
                k,
                s,
                sigma,
                OutlierModel::GaussianOutlier,
                cov.as_ref(),
                &mut rng,
            )?;
            spec.methods
                .iter()
                .map(|&method| {
                    let out = run_method(method, &problem, &truth, &params)?;
                    let e = norm2(&sub(&out.x_hat, &truth.x0));
                    Ok(e * e)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        for (j, &method) in spec.methods.iter().enumerate() {
            let total: f64 = errors.iter().map(|e| e[j]).sum();
            rows.push(MseRow {
                method,
                s,
                mse: total / spec.trials as f64,
                trials: spec.trials,
            });
        }
    }
    Ok(rows)
}
