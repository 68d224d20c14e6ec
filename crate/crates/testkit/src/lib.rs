//! Independent reference computations used by the test suites.
//!
//! Nothing here reuses the solver code paths of `pomg-core`: windows are
//! re-enumerated from their definition, posteriors come from Bayes' rule
//! written out term by term, values come from finite-horizon dynamic
//! programming and from literal history enumeration, and leader values from
//! Monte Carlo rollouts. Only the model's raw tables are shared.

pub mod envelope;
pub mod horizon;
pub mod instances;
pub mod pareto;
pub mod posterior;
pub mod rollout;
pub mod windows;

pub use instances::{exactness_instance, random_belief, random_model, random_policy, Shape, EXACTNESS_SUITE};
