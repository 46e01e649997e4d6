//! Exhaustive oracles, identifiability checks, recovery-bound constants, and the
//! reductions linking sensor selection to other sparse problems.

mod bound;
mod bruteforce;
mod identifiability;
mod reduction;

pub use bound::{beta_star, recovery_bound_constants, RecoveryBound};
pub use bruteforce::{
    binomial, solve_p0_bruteforce, solve_rsn_bruteforce, P0Solution, RsnSolution, DEFAULT_FEAS_TOL, P0_MAX_SENSORS,
    RSN_MAX_SUBSETS,
};
pub use identifiability::{
    check_uniqueness_rank, falsify_range_condition, range_condition_holds_for, RangeCheck, Uniqueness,
    UNIQUENESS_MAX_SUBSETS,
};
pub use reduction::{annihilator_pair, mcle_to_rs, Annihilator};
