//! The follower's best response to a fixed finite-memory leader policy.
//!
//! Given the leader's policy, the follower faces a POMDP whose hidden part is
//! the leader's information window. Its value function is piecewise linear
//! and concave in the belief over leader windows, represented by a finite
//! set of gamma vectors per follower state and computed by exact value
//! iteration with pruning.

mod gamma;
mod purge;
mod solver;

pub use gamma::{extract_action, value_at, GammaSet, GammaVector, TIE_TOL};
pub use purge::{purge, purge_with, DEDUP_TOL, WITNESS_TOL};
pub use solver::{backup, backup_with, residual, value_iteration, BackupMode, ConvergenceCheck, SolveOptions, SolveReport};
