//! Instance generators, classification metrics, and the Monte Carlo experiment families.
//!
//! Every trial draws from its own stream `(cell seed, trial index)`, and results are
//! aggregated in trial order, so outputs do not depend on the number of threads.

mod classify;
mod generate;
mod methods;
mod output;
mod runner;
mod spec;

pub use classify::{classify, ClassificationReport, ClassificationRule, ResidualNorm, RESIDUAL_THRESHOLD};
pub use generate::{generate_rs_instance, generate_rsn_instance, snr_to_sigma};
pub use methods::{noisy_rule, run_method, Method, MethodParams};
pub use output::{manifest_json, write_curve_csv, write_mse_csv, write_phase_csv, write_table_csv};
pub use runner::{
    phase_grid_k, run_mse_curve, run_phase_diagram, run_rs_table, run_rsn_table, CurvePoint, MseRow,
    PhaseCell, PhaseDiagram, TableRow, HUBER_CONSTANT, RECOVERY_TOLERANCE, TOEPLITZ_RHO,
};
pub use spec::{ExperimentSpec, Family};
