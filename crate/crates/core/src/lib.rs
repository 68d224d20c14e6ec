//! Leader/follower partially observed Markov games with finite-memory policies.
//!
//! The pipeline: build or load a [`model::PomgModel`], enumerate both agents'
//! information windows ([`history::Game`]), compute the follower's exact
//! best response to a leader policy ([`follower`]), compress it into a
//! finite-memory policy ([`finite_memory`]), evaluate the pair under every
//! criterion ([`evaluator`]) and search the leader's policy space for
//! non-dominated trade-offs ([`moga`]).

pub mod error;
pub mod evaluator;
pub mod finite_memory;
pub mod follower;
pub mod history;
pub mod lp;
pub mod model;
pub mod moga;
pub mod policy;
pub mod scenario;
pub mod voi;

pub use error::{Error, Result};
