//! Seeded, splittable random streams and the two sampling distributions used by the
//! experiment generators.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by a counter-based ChaCha generator: the stream id selects an independent
/// keystream, so trial `t` always sees the same draws no matter which thread runs it.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Folds labels into a seed, so that each experiment cell gets its own key.
    pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
        labels.iter().fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l)))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sampling distribution; `std` is the standard deviation in both cases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    Gaussian { mean: f64, std: f64 },
    /// Laplacian with scale `std / √2`, so the variance equals `std²`.
    Laplacian { mean: f64, std: f64 },
}

impl Distribution {
    pub fn gaussian(mean: f64, std: f64) -> Self {
        Self::Gaussian { mean, std }
    }

    pub fn laplacian(mean: f64, std: f64) -> Self {
        Self::Laplacian { mean, std }
    }

    fn validate(&self) -> Result<()> {
        let (Self::Gaussian { mean, std } | Self::Laplacian { mean, std }) = *self;
        if !mean.is_finite() || !std.is_finite() || std <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "distribution needs finite mean and std > 0, got mean={mean}, std={std}"
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Self::Gaussian { mean, std } => mean + std * rng.standard_normal(),
            Self::Laplacian { mean, std } => {
                let scale = std / std::f64::consts::SQRT_2;
                let u = rng.uniform() - 0.5;
                // inverse CDF; 1 - 2|u| lies in (0, 1]
                mean - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

/// `len` i.i.d. draws.
pub fn sample_vec<T: Real>(dist: Distribution, len: usize, rng: &mut RngStream) -> Result<Vec<T>> {
    dist.validate()?;
    Ok((0..len).map(|_| T::lit(dist.draw(rng))).collect())
}

/// A `rows x cols` matrix of i.i.d. draws, filled in row-major order.
pub fn sample_matrix<T: Real>(
    dist: Distribution,
    rows: usize,
    cols: usize,
    rng: &mut RngStream,
) -> Result<DenseMatrix<T>> {
    let data = sample_vec(dist, rows * cols, rng)?;
    DenseMatrix::from_row_major(rows, cols, data)
}
