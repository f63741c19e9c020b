//! Spectral explore-then-exploit learning for episodic tabular POMDPs.
//!
//! The pipeline explores with a fixed action mixture, estimates each
//! action's observation, transition and reward parameters from three-view
//! moments by tensor decomposition, aligns latent labels across actions,
//! plans on the merged estimate and scores the plan against exact oracles.

// `!(x > floor)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod domains;
pub mod error;
pub mod harness;
pub mod learner;
pub mod linalg;
pub mod moments;
pub mod pac;
pub mod planner;
pub mod pomdp;
pub mod spectral;

pub use error::{Error, Result, Stage};
pub use pomdp::{Belief, Episode, ExplorationPolicy, SeedTag, TabularPomdp};
