use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{GroundTruth, SensingProblem, SolverConfig, SolverOutput};
use crate::solvers;

use super::classify::ClassificationRule;

/// Estimators compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    GaLs,
    Ls,
    L1,
    Huber,
    P1,
    P2,
    P3,
    P4,
    P3Colored,
    P4Colored,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::GaLs,
        Method::Ls,
        Method::L1,
        Method::Huber,
        Method::P1,
        Method::P2,
        Method::P3,
        Method::P4,
        Method::P3Colored,
        Method::P4Colored,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GaLs => "ga-ls",
            Method::Ls => "ls",
            Method::L1 => "l1",
            Method::Huber => "huber",
            Method::P1 => "p1",
            Method::P2 => "p2(1)",
            Method::P3 => "p3",
            Method::P4 => "p4(1)",
            Method::P3Colored => "p3-colored",
            Method::P4Colored => "p4-colored",
        }
    }

    /// Whether the estimator produces outlier blocks to classify with.
    pub fn has_outliers(self) -> bool {
        matches!(
            self,
            Method::Huber | Method::P3 | Method::P4 | Method::P3Colored | Method::P4Colored
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        let key = match key.as_str() {
            "p2" => "p2(1)",
            "p4" => "p4(1)",
            other => other,
        };
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tuning shared by one trial's method runs.
#[derive(Clone, Debug)]
pub struct MethodParams {
    pub config: SolverConfig<f64>,
    /// Group penalty for the white-noise outlier estimators.
    pub lambda: f64,
    /// Scalar Huber threshold.
    pub tau: f64,
    /// Noise covariance and penalty for the correlated-noise estimators.
    pub colored: Option<(DenseMatrix<f64>, f64)>,
    pub outer_iters: usize,
}

impl MethodParams {
    pub fn new(lambda: f64, tau: f64) -> Self {
        Self {
            config: SolverConfig::default(),
            lambda,
            tau,
            colored: None,
            outer_iters: 1,
        }
    }
}

pub fn run_method(
    method: Method,
    problem: &SensingProblem<f64>,
    truth: &GroundTruth<f64>,
    params: &MethodParams,
) -> Result<SolverOutput<f64>> {
    let cfg = &params.config;
    let with_lambda = || cfg.clone().with_lambda(params.lambda);
    let colored = || {
        params
            .colored
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("{method} needs a noise covariance")))
    };
    match method {
        Method::GaLs => solvers::solve_ga_ls(problem, &truth.reliable_set),
        Method::Ls => solvers::solve_ls(problem),
        Method::L1 => solvers::solve_l1(problem, cfg),
        Method::Huber => solvers::solve_huber_scalar(problem, params.tau, cfg),
        Method::P1 => solvers::solve_p1(problem, cfg, None),
        Method::P2 => solvers::solve_p2(problem, cfg, params.outer_iters),
        Method::P3 => solvers::solve_p3(problem, &with_lambda()),
        Method::P4 => solvers::solve_p4(problem, &with_lambda(), params.outer_iters),
        Method::P3Colored => {
            let (sigma, lam) = colored()?;
            solvers::solve_p3_colored(problem, sigma, &cfg.clone().with_lambda(*lam))
        }
        Method::P4Colored => {
            let (sigma, lam) = colored()?;
            solvers::solve_p4_colored(problem, sigma, &cfg.clone().with_lambda(*lam), params.outer_iters)
        }
    }
}

/// Classification rule for the noisy table: residual ℓ2 norm for estimators without
/// outlier blocks, outlier support otherwise.
pub fn noisy_rule(method: Method) -> ClassificationRule {
    if method.has_outliers() {
        ClassificationRule::USupport
    } else {
        ClassificationRule::residual_l2()
    }
}
