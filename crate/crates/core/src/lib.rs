//! Offline weighted computation-rate maximization for multiuser mobile edge
//! computing with energy-harvesting users.
//!
//! * [`model`]: energy costs, causality constraints and the objective.
//! * [`dual_solver`]: closed-form primal recovery and the projected subgradient dual method.
//! * [`oracle`]: independent brute-force and primal projected-gradient solvers.
//! * [`baselines`]: the comparison schemes.
//! * [`experiments`]: seeded instance generation, sweeps and result export.

pub mod baselines;
pub mod dual_solver;
pub mod error;
pub mod experiments;
pub mod model;
pub mod oracle;

pub use error::{ExperimentError, ModelError, SolveError};
