//! Reduced fixed-point formulation, iteration and contraction certificate.

mod iterate;
mod map;
mod reduced;

pub use iterate::{
    certify_at, certify_uniqueness, empirical_rate, iterate, solve, Certificate, FixedPointReport, InitialGuess,
    Residual, SolverConfig, Uniqueness,
};
pub use map::{FixedPointMap, FollowerSlot, ReferenceMap};
pub use reduced::{build_reduced_system, FollowingResource, FormingResource, FullState, ReducedSystem, MIN_RCOND};
