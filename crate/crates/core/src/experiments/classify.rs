use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::model::{GroundTruth, SensingProblem, SolverOutput};
use crate::scalar::Real;

/// Default residual threshold for declaring a sensor reliable.
pub const RESIDUAL_THRESHOLD: f64 = 1e-4;

/// Norm applied to each sensor's residual by the residual rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualNorm {
    Inf,
    L2,
}

/// How a solver output is turned into reliable/unreliable labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassificationRule {
    /// Reliable iff the residual norm is at most `threshold`.
    Residual { threshold: f64, norm: ResidualNorm },
    /// Reliable iff the estimated outlier block is exactly zero.
    USupport,
}

impl ClassificationRule {
    pub fn residual_inf() -> Self {
        Self::Residual {
            threshold: RESIDUAL_THRESHOLD,
            norm: ResidualNorm::Inf,
        }
    }

    pub fn residual_l2() -> Self {
        Self::Residual {
            threshold: RESIDUAL_THRESHOLD,
            norm: ResidualNorm::L2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    /// Fraction of sensors labelled correctly.
    pub per_sensor_correct: f64,
    /// Whether every sensor was labelled correctly.
    pub whole_network_success: bool,
    /// `true` = declared reliable.
    pub labels: Vec<bool>,
}

pub fn classify<T: Real>(
    problem: &SensingProblem<T>,
    output: &SolverOutput<T>,
    truth: &GroundTruth<T>,
    rule: ClassificationRule,
) -> Result<ClassificationReport> {
    let k = problem.k();
    let labels: Vec<bool> = match rule {
        ClassificationRule::Residual { threshold, norm } => (0..k)
            .map(|i| {
                let value = match norm {
                    ResidualNorm::Inf => norm_inf(&problem.block(i).residual(&output.x_hat)),
                    ResidualNorm::L2 => output.residual_norms[i],
                };
                value.as_f64() <= threshold
            })
            .collect(),
        ClassificationRule::USupport => {
            let u = output.u_hat.as_ref().ok_or(Error::MissingOutliers)?;
            u.iter().map(|ui| ui.iter().all(|&v| v == T::zero())).collect()
        }
    };
    let mask = truth.reliable_mask(k);
    let correct = labels.iter().zip(&mask).filter(|(l, t)| l == t).count();
    Ok(ClassificationReport {
        per_sensor_correct: correct as f64 / k as f64,
        whole_network_success: correct == k,
        labels,
    })
}
