use crate::error::{Error, Result};
use crate::linalg::{cholesky, DenseMatrix};
use crate::model::{GroundTruth, OutlierModel, SensingProblem};
use crate::rng::{sample_matrix, sample_vec, Distribution, RngStream};
use crate::scalar::Real;

/// Noise standard deviation for a given SNR when each measurement has unit signal power.
pub fn snr_to_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

fn check_dims(n: usize, m: usize, k: usize, s: usize) -> Result<()> {
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!("dimensions must be positive, got n={n}, m={m}, k={k}")));
    }
    if s == 0 || s > k {
        return Err(Error::InvalidParameter(format!("need 1 <= s <= k, got s={s}, k={k}")));
    }
    Ok(())
}

/// Noise-free instance: Gaussian `A`, `x0 ~ N(0, I/n)`, the first `s` sensors exact and
/// the rest pure standard normal data.
pub fn generate_rs_instance<T: Real>(
    n: usize,
    m: usize,
    k: usize,
    s: usize,
    rng: &mut RngStream,
) -> Result<(SensingProblem<T>, GroundTruth<T>)> {
    check_dims(n, m, k, s)?;
    let std_normal = Distribution::gaussian(0.0, 1.0);
    let a: DenseMatrix<T> = sample_matrix(std_normal, k * m, n, rng)?;
    let x0: Vec<T> = sample_vec(Distribution::gaussian(0.0, 1.0 / (n as f64).sqrt()), n, rng)?;
    let mut b = a.row_range(0, s * m).matvec(&x0);
    b.extend(sample_vec::<T>(std_normal, (k - s) * m, rng)?);
    let problem = SensingProblem::from_stacked(&a, &b, m)?;
    let truth = GroundTruth {
        x0,
        reliable_set: (0..s).collect(),
        sigma: T::zero(),
        outlier_model: OutlierModel::NoiseFreeRandom,
    };
    Ok((problem, truth))
}

/// Noisy instance with `x0 = 1/√n`.
///
/// Reliable sensors see `A_i x0 + noise`. Unreliable sensors see standard normal data plus
/// noise (`GaussianOutlier`), standard normal data alone (`NoiseFreeRandom`), or i.i.d.
/// Laplacian entries of variance `σ² + 1` (`LaplacianOutlier`). Noise is white with
/// standard deviation `sigma`, or `N(0, cov)` over the stacked measurements when `cov`
/// is given.
#[allow(clippy::too_many_arguments)]
pub fn generate_rsn_instance<T: Real>(
    n: usize,
    m: usize,
    k: usize,
    s: usize,
    sigma: f64,
    outlier_model: OutlierModel,
    cov: Option<&DenseMatrix<T>>,
    rng: &mut RngStream,
) -> Result<(SensingProblem<T>, GroundTruth<T>)> {
    check_dims(n, m, k, s)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level must be positive, got {sigma}")));
    }
    let km = k * m;
    let chol = cov
        .map(|c| {
            if c.shape() != (km, km) {
                return Err(Error::DimensionMismatch(format!(
                    "noise covariance is {}x{}, expected {km}x{km}",
                    c.rows(),
                    c.cols()
                )));
            }
            cholesky(c)
        })
        .transpose()?;

    let std_normal = Distribution::gaussian(0.0, 1.0);
    let a: DenseMatrix<T> = sample_matrix(std_normal, km, n, rng)?;
    let x0 = vec![T::lit(1.0 / (n as f64).sqrt()); n];
    let noise: Vec<T> = match &chol {
        Some(l) => l.matvec(&sample_vec::<T>(std_normal, km, rng)?),
        None => sample_vec(Distribution::gaussian(0.0, sigma), km, rng)?,
    };
    let mut b = a.matvec(&x0);
    let split = s * m;
    for (bi, &ni) in b[..split].iter_mut().zip(&noise[..split]) {
        *bi += ni;
    }
    let outliers: Vec<T> = match outlier_model {
        OutlierModel::LaplacianOutlier => {
            sample_vec(Distribution::laplacian(0.0, (sigma * sigma + 1.0).sqrt()), km - split, rng)?
        }
        OutlierModel::GaussianOutlier => {
            let w: Vec<T> = sample_vec(std_normal, km - split, rng)?;
            w.iter().zip(&noise[split..]).map(|(&w, &e)| w + e).collect()
        }
        OutlierModel::NoiseFreeRandom => sample_vec(std_normal, km - split, rng)?,
    };
    b[split..].copy_from_slice(&outliers);
    let problem = SensingProblem::from_stacked(&a, &b, m)?;
    let truth = GroundTruth {
        x0,
        reliable_set: (0..s).collect(),
        sigma: T::lit(sigma),
        outlier_model,
    };
    Ok((problem, truth))
}
