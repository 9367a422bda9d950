//! Provably hard inverse reinforcement learning instances.
//!
//! The crate builds ensembles of two-action MDPs (without reward) from
//! spherical codes, certifies them against the Bellman optimality condition
//! for the constant policy `a_1`, evaluates the Fano-type sample complexity
//! bounds attached to the ensemble, and runs Monte Carlo reward-recovery
//! experiments with LP-based IRL solvers.
//!
//! Module map:
//!
//! * [`mdp`]: transition matrices, Bellman margins, separability.
//! * [`geometry`]: spherical codes, facets, the hyperplane rotation.
//! * [`ensemble`]: hard instance/reward pairs built from facets.
//! * [`bounds`]: closed-form information-theoretic bounds.
//! * [`trajectory`]: sampling, estimation and trajectory KL divergence.
//! * [`solvers`]: the simplex LP solver and IRL reward recovery.
//! * [`harness`]: experiment runner, CSV and SVG output.

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mdp;
pub mod solvers;
pub mod trajectory;

pub use error::{Error, Result};

/// Margins at or below this value do not count as strictly positive.
pub const STRICT_TOL: f64 = 1e-12;
