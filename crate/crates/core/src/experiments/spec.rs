use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::methods::Method;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PhaseDiagram,
    RsTable,
    RsnMse,
    RsnTable,
    Colored,
}

impl Family {
    fn code(self) -> u64 {
        match self {
            Family::PhaseDiagram => 1,
            Family::RsTable => 2,
            Family::RsnMse => 3,
            Family::RsnTable => 4,
            Family::Colored => 5,
        }
    }
}

/// A seeded Monte Carlo experiment. For the phase diagram `k` and `s_list` are derived
/// from the `gamma_count` grid and left empty here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub k: Option<usize>,
    pub s_list: Vec<usize>,
    pub gamma_count: Option<usize>,
    pub trials: usize,
    pub snr_db: Option<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Sum-of-norms recovery over a `(γ, β)` grid with ten values of γ.
    pub fn phase_diagram(n: usize, m: usize, trials: usize, seed: u64) -> Self {
        Self {
            family: Family::PhaseDiagram,
            n,
            m,
            k: None,
            s_list: Vec::new(),
            gamma_count: Some(10),
            trials,
            snr_db: None,
            methods: vec![Method::P1],
            seed,
        }
    }

    /// Noise-free sensor classification at `(n, m, k) = (20, 4, 16)`.
    pub fn rs_table(trials: usize, seed: u64) -> Self {
        Self {
            family: Family::RsTable,
            n: 20,
            m: 4,
            k: Some(16),
            s_list: vec![8, 10, 12, 14, 16],
            gamma_count: None,
            trials,
            snr_db: None,
            methods: vec![Method::GaLs, Method::Ls, Method::L1, Method::P1, Method::P2],
            seed,
        }
    }

    /// Noisy sensor classification with Laplacian outliers at `(80, 8, 32)`, 5 dB.
    pub fn rsn_table(trials: usize, seed: u64) -> Self {
        Self {
            family: Family::RsnTable,
            n: 80,
            m: 8,
            k: Some(32),
            s_list: vec![16, 20, 24, 28, 32],
            gamma_count: None,
            trials,
            snr_db: Some(5.0),
            methods: vec![
                Method::GaLs,
                Method::Ls,
                Method::L1,
                Method::Huber,
                Method::P1,
                Method::P2,
                Method::P3,
                Method::P4,
            ],
            seed,
        }
    }

    /// Estimation error under white noise at `(20, 4, 16)`, 10 dB.
    pub fn mse_white(trials: usize, seed: u64) -> Self {
        Self {
            family: Family::RsnMse,
            n: 20,
            m: 4,
            k: Some(16),
            s_list: (8..=16).collect(),
            gamma_count: None,
            trials,
            snr_db: Some(10.0),
            methods: vec![
                Method::GaLs,
                Method::Ls,
                Method::L1,
                Method::Huber,
                Method::P1,
                Method::P2,
                Method::P3,
                Method::P4,
            ],
            seed,
        }
    }

    /// Estimation error under Toeplitz-correlated noise at `(20, 4, 16)`, 10 dB.
    pub fn mse_colored(trials: usize, seed: u64) -> Self {
        Self {
            family: Family::Colored,
            methods: vec![
                Method::GaLs,
                Method::Ls,
                Method::P3,
                Method::P4,
                Method::P3Colored,
                Method::P4Colored,
            ],
            ..Self::mse_white(trials, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        match self.family {
            Family::PhaseDiagram => {
                if self.gamma_count.unwrap_or(0) == 0 {
                    return Err(Error::InvalidParameter("phase diagram needs gamma_count >= 1".into()));
                }
            }
            _ => {
                let k = self
                    .k
                    .filter(|&k| k > 0)
                    .ok_or_else(|| Error::InvalidParameter("sensor count k must be positive".into()))?;
                if self.s_list.is_empty() {
                    return Err(Error::InvalidParameter("s list is empty".into()));
                }
                if let Some(&s) = self.s_list.iter().find(|&&s| s == 0 || s > k) {
                    return Err(Error::InvalidParameter(format!("s = {s} outside 1..={k}")));
                }
            }
        }
        if matches!(self.family, Family::RsnMse | Family::RsnTable | Family::Colored) {
            match self.snr_db {
                Some(v) if v.is_finite() => {}
                _ => return Err(Error::InvalidParameter("noisy experiments need a finite SNR".into())),
            }
        }
        Ok(())
    }

    /// Seed of one `(k, s)` cell; trials within the cell use the trial index as stream id.
    pub fn cell_seed(&self, k: usize, s: usize) -> u64 {
        crate::rng::RngStream::derive_seed(
            self.seed,
            &[self.family.code(), self.n as u64, self.m as u64, k as u64, s as u64],
        )
    }
}
